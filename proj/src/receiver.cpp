#include "rfimp/receiver.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "rfimp/error.hpp"

namespace rfimp {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
class FftPlans {
public:
    fftw_plan get(int n, int sign) {
        std::lock_guard lock(mutex_);
        auto& slot = plans_[{n, sign}];
        if (!slot) {
            auto* in = fftw_alloc_complex(static_cast<std::size_t>(n));
            auto* out = fftw_alloc_complex(static_cast<std::size_t>(n));
            slot = fftw_plan_dft_1d(n, in, out, sign, FFTW_ESTIMATE);
            fftw_free(in);
            fftw_free(out);
        }
        return slot;
    }

private:
    std::mutex mutex_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

FftPlans& plans() {
    static FftPlans instance;
    return instance;
}

struct FftwFree {
    void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};
using FftBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

FftBuffer fft_alloc(std::size_t n) {
    FftBuffer buf(fftw_alloc_complex(n));
    std::fill_n(reinterpret_cast<double*>(buf.get()), 2 * n, 0.0);
    return buf;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

SampleBuffer matched_filter(const SampleBuffer& x, const FrameConfig& cfg) {
    const auto taps = rrc_taps(cfg.rrc_rolloff, cfg.oversample, cfg.rrc_span_symbols);
    return SampleBuffer{convolve(x.samples, taps), x.sample_rate_hz};
}

std::vector<Complex> sync_template(const FrameConfig& cfg) {
    const auto pre = preamble_symbols(cfg);
    return matched_filter(upsample_filter(pre, cfg), cfg).samples;
}

std::vector<Complex> serial::cross_correlate(std::span<const Complex> y, std::span<const Complex> t) {
    if (t.empty() || y.size() < t.size()) return {};
    std::vector<Complex> c(y.size() - t.size() + 1);
    for (std::size_t l = 0; l < c.size(); ++l) {
        Complex acc{};
        for (std::size_t n = 0; n < t.size(); ++n) acc += std::conj(t[n]) * y[n + l];
        c[l] = acc;
    }
    return c;
}

std::vector<Complex> cross_correlate(std::span<const Complex> y, std::span<const Complex> t) {
    if (t.empty() || y.size() < t.size()) return {};
    const std::size_t n = next_pow2(y.size() + t.size() - 1);
    auto ybuf = fft_alloc(n);
    auto tbuf = fft_alloc(n);
    auto yf = fft_alloc(n);
    auto tf = fft_alloc(n);
    for (std::size_t i = 0; i < y.size(); ++i) {
        ybuf[i][0] = y[i].real();
        ybuf[i][1] = y[i].imag();
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        tbuf[i][0] = t[i].real();
        tbuf[i][1] = t[i].imag();
    }
    const int ni = static_cast<int>(n);
    fftw_execute_dft(plans().get(ni, FFTW_FORWARD), ybuf.get(), yf.get());
    fftw_execute_dft(plans().get(ni, FFTW_FORWARD), tbuf.get(), tf.get());
    for (std::size_t i = 0; i < n; ++i) {
        const Complex a{yf[i][0], yf[i][1]};
        const Complex b{tf[i][0], tf[i][1]};
        const Complex p = a * std::conj(b);
        yf[i][0] = p.real();
        yf[i][1] = p.imag();
    }
    fftw_execute_dft(plans().get(ni, FFTW_BACKWARD), yf.get(), ybuf.get());
    std::vector<Complex> c(y.size() - t.size() + 1);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t l = 0; l < c.size(); ++l) c[l] = {ybuf[l][0] * scale, ybuf[l][1] * scale};
    return c;
}

SyncResult coarse_sync(const SampleBuffer& mf, const FrameConfig& cfg, double threshold) {
    const auto tmpl = sync_template(cfg);
    require(mf.size() >= tmpl.size(), ErrorKind::out_of_range,
            "coarse_sync: buffer of " + std::to_string(mf.size()) +
                " samples is shorter than the preamble template (" + std::to_string(tmpl.size()) + ")");
    const auto corr = cross_correlate(mf.samples, tmpl);

    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t l = 0; l < corr.size(); ++l) {
        const double m = std::abs(corr[l]);
        if (m > best_mag) {
            best_mag = m;
            best = l;
        }
    }

    double t_energy = 0.0;
    for (const Complex& v : tmpl) t_energy += std::norm(v);
    double w_energy = 0.0;
    for (std::size_t i = best; i < best + tmpl.size(); ++i) w_energy += std::norm(mf.samples[i]);
    const double denom = std::sqrt(t_energy * w_energy);
    const double metric = denom > 0.0 ? std::min(1.0, best_mag / denom) : 0.0;

    if (!(metric >= threshold))
        fail(ErrorKind::sync_not_found, "coarse_sync: peak metric " + std::to_string(metric) +
                                            " below threshold " + std::to_string(threshold));
    return SyncResult{best, metric};
}

std::span<const Complex> preamble_window(const SampleBuffer& mf, const SyncResult& sync,
                                         const FrameConfig& cfg) {
    const std::size_t first = sync.start_index + static_cast<std::size_t>(cfg.cascade_delay());
    const std::size_t len = cfg.nn_window_samples();
    require(first + len <= mf.size(), ErrorKind::out_of_range,
            "preamble window [" + std::to_string(first) + ", " + std::to_string(first + len) +
                ") exceeds buffer of " + std::to_string(mf.size()) + " samples");
    return std::span<const Complex>(mf.samples).subspan(first, len);
}

std::vector<double> extract_nn_input(const SampleBuffer& mf, const SyncResult& sync,
                                     const FrameConfig& cfg) {
    const auto window = preamble_window(mf, sync, cfg);
    std::vector<double> out(2 * window.size());
    for (std::size_t i = 0; i < window.size(); ++i) {
        out[i] = window[i].real();
        out[window.size() + i] = window[i].imag();
    }
    return out;
}

std::vector<Complex> payload_symbols(const SampleBuffer& mf, const SyncResult& sync,
                                     const FrameConfig& cfg) {
    const auto sps = static_cast<std::size_t>(cfg.oversample);
    const std::size_t base = sync.start_index + static_cast<std::size_t>(cfg.cascade_delay());
    const auto cp = static_cast<std::size_t>(cfg.cp_len());
    const auto block = static_cast<std::size_t>(cfg.block_len);
    std::vector<Complex> out;
    out.reserve(static_cast<std::size_t>(cfg.n_blocks) * block);
    for (int b = 0; b < cfg.n_blocks; ++b) {
        const std::size_t sym0 = static_cast<std::size_t>(cfg.preamble_len()) +
                                 static_cast<std::size_t>(b) * (cp + block) + cp;
        for (std::size_t k = 0; k < block; ++k) {
            const std::size_t idx = base + (sym0 + k) * sps;
            require(idx < mf.size(), ErrorKind::out_of_range, "payload_symbols: buffer too short");
            out.push_back(mf.samples[idx]);
        }
    }
    return out;
}

double phase_oracle(const SampleBuffer& mf, const SyncResult& sync, const FrameConfig& cfg) {
    const auto window = preamble_window(mf, sync, cfg);
    const auto tmpl = sync_template(cfg);
    // The last cascade_delay samples of the window also carry filter tails of
    // the first payload symbols; leave them out.
    const auto delay = static_cast<std::size_t>(cfg.cascade_delay());
    const std::size_t n = window.size() > delay ? window.size() - delay : window.size();
    const auto ref = std::span<const Complex>(tmpl).subspan(delay, n);

    Complex mean{};
    for (std::size_t i = 0; i < n; ++i) mean += window[i];
    mean /= static_cast<double>(n);

    Complex corr{};
    double ref_energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        corr += std::conj(ref[i]) * (window[i] - mean);
        ref_energy += std::norm(ref[i]);
    }
    require(std::abs(corr) > 1e-9 * ref_energy, ErrorKind::sync_not_found,
            "phase_oracle: preamble correlation vanishes");
    return std::arg(corr);
}

}  // namespace rfimp
