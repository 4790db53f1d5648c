// Serial reference kernels vs the OpenMP versions, at the trunk layer shape
// used in training (batch 16, 8176 -> 128), plus FFT vs direct correlation.

#include <benchmark/benchmark.h>

#include <vector>

#include "rfimp/kernels.hpp"
#include "rfimp/receiver.hpp"
#include "rfimp/rng.hpp"

namespace {

namespace k = rfimp::kernels;

constexpr std::size_t kBatch = 16;
constexpr std::size_t kFanIn = 8176;
constexpr std::size_t kFanOut = 128;

std::vector<float> random_floats(std::size_t n, std::uint64_t seed) {
    rfimp::Rng rng(seed);
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    return v;
}

struct Layer {
    std::vector<float> x = random_floats(kBatch * kFanIn, 1);
    std::vector<float> w = random_floats(kFanOut * kFanIn, 2);
    std::vector<float> b = random_floats(kFanOut, 3);
    std::vector<float> y = std::vector<float>(kBatch * kFanOut);
    std::vector<float> dz = random_floats(kBatch * kFanOut, 4);
    std::vector<float> dw = std::vector<float>(kFanOut * kFanIn);
    std::vector<float> db = std::vector<float>(kFanOut);
    std::vector<float> dx = std::vector<float>(kBatch * kFanIn);
};

Layer& layer() {
    static Layer l;
    return l;
}

template <bool Parallel>
void BM_DenseForward(benchmark::State& state) {
    auto& l = layer();
    for (auto _ : state) {
        if constexpr (Parallel)
            k::parallel::dense_forward<float>(l.x, kBatch, kFanIn, l.w, l.b, kFanOut, l.y, true);
        else
            k::serial::dense_forward<float>(l.x, kBatch, kFanIn, l.w, l.b, kFanOut, l.y, true);
        benchmark::DoNotOptimize(l.y.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(kBatch * kFanIn * kFanOut));
}

template <bool Parallel>
void BM_DenseBackwardParams(benchmark::State& state) {
    auto& l = layer();
    for (auto _ : state) {
        if constexpr (Parallel)
            k::parallel::dense_backward_params<float>(l.x, kBatch, kFanIn, l.dz, kFanOut, l.dw, l.db);
        else
            k::serial::dense_backward_params<float>(l.x, kBatch, kFanIn, l.dz, kFanOut, l.dw, l.db);
        benchmark::DoNotOptimize(l.dw.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(kBatch * kFanIn * kFanOut));
}

template <bool Parallel>
void BM_DenseBackwardInput(benchmark::State& state) {
    auto& l = layer();
    for (auto _ : state) {
        if constexpr (Parallel)
            k::parallel::dense_backward_input<float>(l.dz, kBatch, kFanOut, l.w, kFanIn, l.dx);
        else
            k::serial::dense_backward_input<float>(l.dz, kBatch, kFanOut, l.w, kFanIn, l.dx);
        benchmark::DoNotOptimize(l.dx.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(kBatch * kFanIn * kFanOut));
}

template <bool Parallel>
void BM_Adam(benchmark::State& state) {
    const std::size_t n = 1111942;
    auto p = random_floats(n, 5);
    const auto g = random_floats(n, 6);
    std::vector<float> m(n), v(n);
    k::AdamCoefficients c;
    for (auto _ : state) {
        if constexpr (Parallel)
            k::parallel::adam_update<float>(p, g, m, v, c);
        else
            k::serial::adam_update<float>(p, g, m, v, c);
        ++c.step;
        benchmark::DoNotOptimize(p.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}

template <bool Fft>
void BM_Correlate(benchmark::State& state) {
    rfimp::Rng rng(7);
    std::vector<rfimp::Complex> y(8308 + 400), t(static_cast<std::size_t>(state.range(0)));
    for (auto& c : y) c = {rng.normal(), rng.normal()};
    for (auto& c : t) c = {rng.normal(), rng.normal()};
    for (auto _ : state) {
        auto r = Fft ? rfimp::cross_correlate(y, t) : rfimp::serial::cross_correlate(y, t);
        benchmark::DoNotOptimize(r.data());
    }
}

}  // namespace

BENCHMARK(BM_DenseForward<false>)->Name("dense_forward/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DenseForward<true>)->Name("dense_forward/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DenseBackwardParams<false>)->Name("dense_backward_params/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DenseBackwardParams<true>)->Name("dense_backward_params/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DenseBackwardInput<false>)->Name("dense_backward_input/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DenseBackwardInput<true>)->Name("dense_backward_input/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Adam<false>)->Name("adam_update/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Adam<true>)->Name("adam_update/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Correlate<true>)->Name("cross_correlate/fft")->Arg(2044)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Correlate<false>)->Name("cross_correlate/direct")->Arg(2044)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
