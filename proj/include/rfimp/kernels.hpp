#pragma once

// Dense-layer and optimizer kernels. `serial` holds straightforward reference
// loops used by the tests; `parallel` holds the OpenMP versions used for
// training. Matrices are row-major: inputs batch x fan_in, weights
// fan_out x fan_in. All reductions accumulate in double, and the parallel
// versions split work only across independent outputs, so results do not
// depend on the thread count.

#include <cstddef>
#include <cstdint>
#include <span>

namespace rfimp::kernels {

struct AdamCoefficients {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step = 1;  // 1-based step used for bias correction
};

#define RFIMP_DECLARE_KERNELS                                                                     \
    /* y = act(x w^T + b) */                                                                      \
    template <typename T>                                                                         \
    void dense_forward(std::span<const T> x, std::size_t batch, std::size_t fan_in,               \
                       std::span<const T> w, std::span<const T> b, std::size_t fan_out,           \
                       std::span<T> y, bool relu);                                                \
    /* dw = dz^T x, db = column sums of dz (overwrites) */                                        \
    template <typename T>                                                                         \
    void dense_backward_params(std::span<const T> x, std::size_t batch, std::size_t fan_in,       \
                               std::span<const T> dz, std::size_t fan_out, std::span<T> dw,       \
                               std::span<T> db);                                                  \
    /* dx = dz w (overwrites) */                                                                  \
    template <typename T>                                                                         \
    void dense_backward_input(std::span<const T> dz, std::size_t batch, std::size_t fan_out,      \
                              std::span<const T> w, std::size_t fan_in, std::span<T> dx);         \
    /* Bias-corrected Adam update of params, m and v in place. */                                 \
    template <typename T>                                                                         \
    void adam_update(std::span<T> params, std::span<const T> grads, std::span<T> m,               \
                     std::span<T> v, const AdamCoefficients& c);

namespace serial {
RFIMP_DECLARE_KERNELS
}  // namespace serial

namespace parallel {
RFIMP_DECLARE_KERNELS
}  // namespace parallel

#undef RFIMP_DECLARE_KERNELS

}  // namespace rfimp::kernels
