#pragma once

// Transmitter RF impairments: I/Q gain imbalance with quadrature offset,
// constant phase rotation and I/Q (DC) offset.

#include <array>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "rfimp/types.hpp"

namespace rfimp {

inline constexpr std::size_t kNumImpairments = 6;

// Label order used everywhere: (I_g, Q_g, psi, phi, I_o, Q_o).
inline constexpr std::array<std::string_view, kNumImpairments> kImpairmentNames = {
    "i_gain", "q_gain", "quad_offset", "phase", "i_offset", "q_offset"};

// Index of a parameter by name; throws Error(invalid_argument) if unknown.
std::size_t impairment_index(std::string_view name);

struct ImpairmentParams {
    double i_gain = 1.0;
    double q_gain = 1.0;
    double quad_offset_rad = 0.0;
    double phase_rad = 0.0;
    double i_offset = 0.0;
    double q_offset = 0.0;

    std::array<double, kNumImpairments> to_array() const {
        return {i_gain, q_gain, quad_offset_rad, phase_rad, i_offset, q_offset};
    }
    static ImpairmentParams from_array(const std::array<double, kNumImpairments>& v) {
        return {v[0], v[1], v[2], v[3], v[4], v[5]};
    }
};

struct Range {
    double low = 0.0;
    double high = 0.0;

    double mean() const { return 0.5 * (low + high); }
    // Variance of the uniform distribution over the range.
    double variance() const { return (high - low) * (high - low) / 12.0; }
    bool contains(double x) const { return x >= low && x <= high; }
};

struct ImpairmentRanges {
    std::array<Range, kNumImpairments> bounds = {{
        {0.0, 1.5},
        {0.0, 1.5},
        {-1.0, 1.0},
        {0.0, std::numbers::pi / 2.0},
        {-0.5, 0.5},
        {-0.5, 0.5},
    }};

    void validate() const;
    bool contains(const ImpairmentParams& p) const;
};

// out.re = I_g re + Q_g sin(psi) im ; out.im = Q_g cos(psi) im
SampleBuffer apply_gain_quadrature(const SampleBuffer& x, double i_gain, double q_gain,
                                   double quad_offset_rad);
SampleBuffer apply_phase_noise(const SampleBuffer& x, double phase_rad);
SampleBuffer apply_iq_offset(const SampleBuffer& x, double i_offset, double q_offset);

// Gain/quadrature, then phase, then offset. Rejects parameters outside `ranges`.
SampleBuffer apply_all(const SampleBuffer& x, const ImpairmentParams& p,
                       const ImpairmentRanges& ranges = {});

ImpairmentParams sample_params(const ImpairmentRanges& ranges, std::uint64_t rng_seed);

}  // namespace rfimp
