#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace rfimp {

using Complex = std::complex<double>;

inline constexpr double kDefaultSampleRateHz = 4.0e6;

// Complex baseband samples plus the rate they were taken at.
struct SampleBuffer {
    std::vector<Complex> samples;
    double sample_rate_hz = kDefaultSampleRateHz;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
};

}  // namespace rfimp
