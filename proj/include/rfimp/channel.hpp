#pragma once

// Frequency-selective Rayleigh fading and AWGN.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "rfimp/types.hpp"

namespace rfimp {

enum class ChannelModel { rayleigh, identity };

struct ChannelConfig {
    ChannelModel model = ChannelModel::rayleigh;
    int n_taps = 8;
    double decay_db_per_tap = 3.0;
    // Tap 0 real-positive (Rayleigh magnitude, zero phase). The first path then
    // serves as the phase reference; other taps keep uniform random phase.
    bool phase_reference = true;

    void validate(int cp_len) const;
};

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

// Symbol-spaced impulse response with unit average power.
struct ChannelRealization {
    std::vector<Complex> taps;
    double snr_db = kNoNoise;
};

// Exponential power-delay profile; tap k has average power proportional to
// 10^(-decay k / 10). Requires 1 <= n_taps <= max_taps (the CP length).
ChannelRealization draw_channel(int n_taps, double decay_db_per_tap, std::uint64_t rng_seed,
                                int max_taps, bool phase_reference = false);
ChannelRealization draw_channel(const ChannelConfig& cfg, int cp_len, std::uint64_t rng_seed);

// Average power of each tap under the profile, summing to 1.
std::vector<double> power_delay_profile(int n_taps, double decay_db_per_tap);

// Linear convolution; tap k sits at delay k * oversample samples.
SampleBuffer apply_channel(const SampleBuffer& x, const ChannelRealization& ch, int oversample);

double mean_power(const SampleBuffer& x, std::optional<std::size_t> active_len = {});

// Adds CN(0, P / 10^(snr/10)) noise where P is the mean power of the first
// `active_len` samples (all samples by default). snr_db = +inf adds nothing.
SampleBuffer add_awgn(const SampleBuffer& x, double snr_db, std::uint64_t rng_seed,
                      std::optional<std::size_t> active_len = {});

}  // namespace rfimp
