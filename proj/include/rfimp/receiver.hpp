#pragma once

// Receive chain: matched filter, coarse frame sync on the preamble, and
// extraction of the fixed-length network input window.

#include <cstddef>
#include <span>
#include <vector>

#include "rfimp/sigproc.hpp"
#include "rfimp/types.hpp"

namespace rfimp {

inline constexpr double kDefaultSyncThreshold = 0.2;

struct SyncResult {
    std::size_t start_index = 0;  // frame start, in samples
    double peak_metric = 0.0;     // |corr| / (|template| |window|), in [0, 1]
};

SampleBuffer matched_filter(const SampleBuffer& x, const FrameConfig& cfg);

// Preamble after TX and RX pulse shaping: what the matched-filter output of an
// undelayed frame starts with.
std::vector<Complex> sync_template(const FrameConfig& cfg);

// c[l] = sum_n conj(t[n]) y[n + l] for l in [0, |y| - |t|]. FFT based.
std::vector<Complex> cross_correlate(std::span<const Complex> y, std::span<const Complex> t);

namespace serial {
// Direct O(|y| |t|) evaluation of cross_correlate.
std::vector<Complex> cross_correlate(std::span<const Complex> y, std::span<const Complex> t);
}  // namespace serial

// `mf` is the matched-filter output. Throws Error(sync_not_found) when the
// normalized peak is below `threshold`.
SyncResult coarse_sync(const SampleBuffer& mf, const FrameConfig& cfg,
                       double threshold = kDefaultSyncThreshold);

// Preamble window samples aligned to chip peaks: mf[start + cascade_delay, +window).
std::span<const Complex> preamble_window(const SampleBuffer& mf, const SyncResult& sync,
                                         const FrameConfig& cfg);

// [I parts..., Q parts...] of the preamble window, length cfg.nn_input_len().
std::vector<double> extract_nn_input(const SampleBuffer& mf, const SyncResult& sync,
                                     const FrameConfig& cfg);

// Symbol-rate samples of the payload data (cyclic prefixes dropped).
std::vector<Complex> payload_symbols(const SampleBuffer& mf, const SyncResult& sync,
                                     const FrameConfig& cfg);

// Phase of the preamble correlation after removing the window mean. Unbiased
// for a constant rotation plus I/Q offset plus white noise.
double phase_oracle(const SampleBuffer& mf, const SyncResult& sync, const FrameConfig& cfg);

}  // namespace rfimp
