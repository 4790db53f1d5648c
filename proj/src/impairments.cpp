#include "rfimp/impairments.hpp"

#include <cmath>
#include <string>

#include "rfimp/error.hpp"
#include "rfimp/rng.hpp"

namespace rfimp {

std::size_t impairment_index(std::string_view name) {
    for (std::size_t i = 0; i < kImpairmentNames.size(); ++i)
        if (kImpairmentNames[i] == name) return i;
    fail(ErrorKind::invalid_argument, "unknown impairment parameter '" + std::string(name) + "'");
}

void ImpairmentRanges::validate() const {
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        const Range& r = bounds[i];
        if (!std::isfinite(r.low) || !std::isfinite(r.high) || r.low > r.high)
            fail(ErrorKind::config,
                 "ranges." + std::string(kImpairmentNames[i]) + ": need finite low <= high");
    }
}

bool ImpairmentRanges::contains(const ImpairmentParams& p) const {
    const auto v = p.to_array();
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!bounds[i].contains(v[i])) return false;
    return true;
}

SampleBuffer apply_gain_quadrature(const SampleBuffer& x, double i_gain, double q_gain,
                                   double quad_offset_rad) {
    const double cross = q_gain * std::sin(quad_offset_rad);
    const double q_scale = q_gain * std::cos(quad_offset_rad);
    SampleBuffer out{std::vector<Complex>(x.size()), x.sample_rate_hz};
    for (std::size_t n = 0; n < x.size(); ++n) {
        const double re = x.samples[n].real();
        const double im = x.samples[n].imag();
        out.samples[n] = {i_gain * re + cross * im, q_scale * im};
    }
    return out;
}

SampleBuffer apply_phase_noise(const SampleBuffer& x, double phase_rad) {
    const Complex rot = std::polar(1.0, phase_rad);
    SampleBuffer out{std::vector<Complex>(x.size()), x.sample_rate_hz};
    for (std::size_t n = 0; n < x.size(); ++n) out.samples[n] = x.samples[n] * rot;
    return out;
}

SampleBuffer apply_iq_offset(const SampleBuffer& x, double i_offset, double q_offset) {
    const Complex shift{i_offset, q_offset};
    SampleBuffer out{std::vector<Complex>(x.size()), x.sample_rate_hz};
    for (std::size_t n = 0; n < x.size(); ++n) out.samples[n] = x.samples[n] + shift;
    return out;
}

SampleBuffer apply_all(const SampleBuffer& x, const ImpairmentParams& p,
                       const ImpairmentRanges& ranges) {
    const auto v = p.to_array();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]) || !ranges.bounds[i].contains(v[i]))
            fail(ErrorKind::out_of_range, "impairment " + std::string(kImpairmentNames[i]) + " = " +
                                              std::to_string(v[i]) + " outside its range");
    }
    auto y = apply_gain_quadrature(x, p.i_gain, p.q_gain, p.quad_offset_rad);
    y = apply_phase_noise(y, p.phase_rad);
    return apply_iq_offset(y, p.i_offset, p.q_offset);
}

ImpairmentParams sample_params(const ImpairmentRanges& ranges, std::uint64_t rng_seed) {
    Rng rng(rng_seed);
    std::array<double, kNumImpairments> v{};
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = rng.uniform(ranges.bounds[i].low, ranges.bounds[i].high);
    return ImpairmentParams::from_array(v);
}

}  // namespace rfimp
