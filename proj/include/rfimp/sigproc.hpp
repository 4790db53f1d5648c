#pragma once

// Transmit-side baseband DSP: maximal-length sequences, QPSK, RRC pulse
// shaping and frame assembly.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rfimp/types.hpp"

namespace rfimp {

enum class PreambleLayout {
    bpsk,          // every repetition carries the real ±1 chips
    alternate_iq,  // repetition r is rotated by j^r, exciting both I and Q
};

struct FrameConfig {
    int n_blocks = 10;
    int block_len = 64;
    double cp_ratio = 0.25;
    int oversample = 4;
    int mseq_degree = 9;
    std::vector<int> mseq_taps = {9, 5};  // x^9 + x^5 + 1
    int preamble_reps = 2;
    PreambleLayout preamble_layout = PreambleLayout::alternate_iq;
    int guard_len = 245;
    double rrc_rolloff = 0.3;
    int rrc_span_symbols = 10;
    double sample_rate_hz = kDefaultSampleRateHz;

    // Throws Error(config) naming the offending field.
    void validate() const;

    int cp_len() const;
    int mseq_len() const { return (1 << mseq_degree) - 1; }
    int preamble_len() const { return preamble_reps * mseq_len(); }
    int payload_len() const { return n_blocks * (cp_len() + block_len); }
    int frame_symbols() const { return preamble_len() + payload_len() + guard_len; }
    int payload_bits() const { return 2 * n_blocks * block_len; }
    // Samples produced by upsample_filter for one frame.
    std::size_t frame_samples() const;
    // Group delay of the TX + RX RRC cascade, in samples.
    int cascade_delay() const { return rrc_span_symbols * oversample; }
    std::size_t nn_window_samples() const {
        return static_cast<std::size_t>(preamble_len()) * static_cast<std::size_t>(oversample);
    }
    std::size_t nn_input_len() const { return 2 * nn_window_samples(); }
};

// Fibonacci LFSR over the polynomial x^degree + sum(x^t for t in taps, t < degree) + 1.
// `taps` lists the polynomial exponents; `degree` itself may be included.
// Bits map 0 -> +1, 1 -> -1. Rejects zero seeds and polynomials whose period
// is not 2^degree - 1.
std::vector<int> generate_m_sequence(int degree, std::span<const int> taps,
                                     std::span<const std::uint8_t> seed_state);

// M-sequence for the frame preamble (all-ones seed).
std::vector<int> preamble_chips(const FrameConfig& cfg);

// Gray mapping (b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2).
std::vector<Complex> qpsk_modulate(std::span<const std::uint8_t> bits);
// Quadrant decision; a component of exactly zero decides bit 0.
std::vector<std::uint8_t> qpsk_demodulate(std::span<const Complex> symbols);

// Closed-form root-raised-cosine pulse at t (in symbol periods), not normalized.
double rrc_pulse(double t, double rolloff);
// span * sps + 1 taps, unit energy.
std::vector<double> rrc_taps(double rolloff, int samples_per_symbol, int span_symbols);

// Full linear convolution with real taps.
std::vector<Complex> convolve(std::span<const Complex> x, std::span<const double> taps);

// Zero-stuff by cfg.oversample and filter with the RRC taps (full convolution).
SampleBuffer upsample_filter(std::span<const Complex> symbols, const FrameConfig& cfg);

struct SymbolFrame {
    std::vector<Complex> preamble;
    std::vector<std::vector<Complex>> payload_blocks;  // each CP + block
    std::size_t guard_len = 0;

    std::vector<Complex> symbols() const;
};

struct BuiltFrame {
    SymbolFrame frame;
    SampleBuffer samples;
};

// Preamble symbols as transmitted (chips with the configured layout).
std::vector<Complex> preamble_symbols(const FrameConfig& cfg);

std::vector<std::uint8_t> random_payload_bits(std::size_t count, std::uint64_t seed);

BuiltFrame build_frame(std::span<const std::uint8_t> payload_bits, const FrameConfig& cfg);

}  // namespace rfimp
