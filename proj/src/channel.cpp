#include "rfimp/channel.hpp"

#include <cmath>
#include <string>

#include "rfimp/error.hpp"
#include "rfimp/rng.hpp"

namespace rfimp {

void ChannelConfig::validate(int cp_len) const {
    if (model == ChannelModel::identity) return;
    if (n_taps < 1 || n_taps > cp_len)
        fail(ErrorKind::config, "channel.n_taps: must be in [1, cp_len=" + std::to_string(cp_len) + "]");
    if (!std::isfinite(decay_db_per_tap) || decay_db_per_tap < 0.0)
        fail(ErrorKind::config, "channel.decay_db_per_tap: must be finite and >= 0");
}

std::vector<double> power_delay_profile(int n_taps, double decay_db_per_tap) {
    std::vector<double> p(static_cast<std::size_t>(n_taps));
    double total = 0.0;
    for (int k = 0; k < n_taps; ++k) {
        p[static_cast<std::size_t>(k)] = std::pow(10.0, -decay_db_per_tap * k / 10.0);
        total += p[static_cast<std::size_t>(k)];
    }
    for (double& v : p) v /= total;
    return p;
}

ChannelRealization draw_channel(int n_taps, double decay_db_per_tap, std::uint64_t rng_seed,
                                int max_taps, bool phase_reference) {
    require(n_taps >= 1 && n_taps <= max_taps, ErrorKind::invalid_argument,
            "draw_channel: n_taps=" + std::to_string(n_taps) + " must be in [1, " +
                std::to_string(max_taps) + "] so the excess delay stays inside the CP");
    const auto profile = power_delay_profile(n_taps, decay_db_per_tap);
    Rng rng(rng_seed);
    ChannelRealization ch;
    ch.taps.reserve(profile.size());
    for (double p : profile) {
        const double sigma = std::sqrt(p / 2.0);
        const double re = rng.normal();
        const double im = rng.normal();
        ch.taps.emplace_back(sigma * re, sigma * im);
    }
    if (phase_reference) ch.taps[0] = std::abs(ch.taps[0]);
    return ch;
}

ChannelRealization draw_channel(const ChannelConfig& cfg, int cp_len, std::uint64_t rng_seed) {
    if (cfg.model == ChannelModel::identity) return ChannelRealization{{Complex{1.0, 0.0}}, kNoNoise};
    return draw_channel(cfg.n_taps, cfg.decay_db_per_tap, rng_seed, cp_len, cfg.phase_reference);
}

SampleBuffer apply_channel(const SampleBuffer& x, const ChannelRealization& ch, int oversample) {
    require(!ch.taps.empty(), ErrorKind::invalid_argument, "apply_channel: empty channel");
    require(oversample >= 1, ErrorKind::invalid_argument, "apply_channel: oversample must be >= 1");
    if (x.empty()) return x;
    const auto sps = static_cast<std::size_t>(oversample);
    SampleBuffer out{std::vector<Complex>(x.size() + (ch.taps.size() - 1) * sps), x.sample_rate_hz};
    for (std::size_t k = 0; k < ch.taps.size(); ++k) {
        const Complex h = ch.taps[k];
        if (h == Complex{}) continue;
        const std::size_t delay = k * sps;
        for (std::size_t n = 0; n < x.size(); ++n) out.samples[n + delay] += h * x.samples[n];
    }
    return out;
}

double mean_power(const SampleBuffer& x, std::optional<std::size_t> active_len) {
    const std::size_t n = std::min(active_len.value_or(x.size()), x.size());
    if (n == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::norm(x.samples[i]);
    return acc / static_cast<double>(n);
}

SampleBuffer add_awgn(const SampleBuffer& x, double snr_db, std::uint64_t rng_seed,
                      std::optional<std::size_t> active_len) {
    require(!x.empty(), ErrorKind::invalid_argument, "add_awgn: empty buffer");
    if (std::isinf(snr_db) && snr_db > 0) return x;
    require(std::isfinite(snr_db), ErrorKind::invalid_argument, "add_awgn: snr_db must be finite or +inf");
    const double noise_var = mean_power(x, active_len) / std::pow(10.0, snr_db / 10.0);
    const double sigma = std::sqrt(noise_var / 2.0);
    Rng rng(rng_seed);
    SampleBuffer out = x;
    for (Complex& s : out.samples) {
        const double re = rng.normal();
        const double im = rng.normal();
        s += Complex{sigma * re, sigma * im};
    }
    return out;
}

}  // namespace rfimp
