#include "rfimp/sigproc.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "rfimp/error.hpp"
#include "rfimp/rng.hpp"

namespace rfimp {

namespace {

void check_field(bool ok, const char* field, const std::string& why) {
    if (!ok) fail(ErrorKind::config, std::string("frame.") + field + ": " + why);
}

}  // namespace

void FrameConfig::validate() const {
    check_field(n_blocks >= 1, "n_blocks", "must be >= 1");
    check_field(block_len >= 1, "block_len", "must be >= 1");
    const double cp = block_len * cp_ratio;
    check_field(cp_ratio >= 0.0 && std::abs(cp - std::round(cp)) < 1e-9, "cp_ratio",
                "block_len * cp_ratio must be a non-negative integer");
    check_field(oversample >= 1, "oversample", "must be >= 1");
    check_field(mseq_degree >= 1 && mseq_degree <= 16, "mseq_degree", "must be in [1, 16]");
    check_field(!mseq_taps.empty(), "mseq_taps", "must not be empty");
    for (int t : mseq_taps)
        check_field(t >= 1 && t <= mseq_degree, "mseq_taps", "exponents must be in [1, degree]");
    check_field(preamble_reps >= 1, "preamble_reps", "must be >= 1");
    check_field(rrc_rolloff > 0.0 && rrc_rolloff <= 1.0, "rrc_rolloff", "must be in (0, 1]");
    check_field(rrc_span_symbols >= 2 && rrc_span_symbols % 2 == 0, "rrc_span_symbols",
                "must be even and >= 2");
    check_field(guard_len >= rrc_span_symbols, "guard_len", "must be >= rrc_span_symbols");
    check_field(sample_rate_hz > 0.0, "sample_rate_hz", "must be > 0");
}

int FrameConfig::cp_len() const {
    return static_cast<int>(std::lround(block_len * cp_ratio));
}

std::size_t FrameConfig::frame_samples() const {
    return static_cast<std::size_t>(frame_symbols() + rrc_span_symbols) *
           static_cast<std::size_t>(oversample);
}

std::vector<int> generate_m_sequence(int degree, std::span<const int> taps,
                                     std::span<const std::uint8_t> seed_state) {
    require(degree >= 1 && degree <= 16, ErrorKind::invalid_argument,
            "m-sequence degree must be in [1, 16]");
    require(static_cast<int>(seed_state.size()) == degree, ErrorKind::invalid_argument,
            "m-sequence seed must have `degree` bits");

    std::uint32_t feedback = 1;  // constant term
    for (int t : taps) {
        require(t >= 1 && t <= degree, ErrorKind::invalid_argument,
                "m-sequence tap exponent out of range");
        if (t < degree) feedback ^= (1u << t);
    }

    std::uint32_t state = 0;
    for (int i = 0; i < degree; ++i)
        if (seed_state[static_cast<std::size_t>(i)] & 1u) state |= (1u << i);
    require(state != 0, ErrorKind::invalid_argument, "m-sequence seed state is all zeros");

    const std::uint32_t seed = state;
    const std::size_t period = (std::size_t{1} << degree) - 1;
    std::vector<int> chips;
    chips.reserve(period);
    for (std::size_t n = 0; n < period; ++n) {
        if (n > 0 && state == seed)
            fail(ErrorKind::invalid_argument,
                 "m-sequence taps are not primitive (period " + std::to_string(n) + ")");
        chips.push_back((state & 1u) ? -1 : 1);
        const std::uint32_t next = static_cast<std::uint32_t>(std::popcount(state & feedback) & 1);
        state = (state >> 1) | (next << (degree - 1));
    }
    require(state == seed, ErrorKind::invalid_argument,
            "m-sequence taps are not primitive (state did not return)");
    return chips;
}

std::vector<int> preamble_chips(const FrameConfig& cfg) {
    const std::vector<std::uint8_t> seed(static_cast<std::size_t>(cfg.mseq_degree), 1);
    return generate_m_sequence(cfg.mseq_degree, cfg.mseq_taps, seed);
}

std::vector<Complex> qpsk_modulate(std::span<const std::uint8_t> bits) {
    require(bits.size() % 2 == 0, ErrorKind::invalid_argument,
            "qpsk_modulate needs an even number of bits");
    const double a = std::numbers::sqrt2 / 2.0;
    std::vector<Complex> out;
    out.reserve(bits.size() / 2);
    for (std::size_t i = 0; i < bits.size(); i += 2) {
        const double re = (bits[i] & 1u) ? -a : a;
        const double im = (bits[i + 1] & 1u) ? -a : a;
        out.emplace_back(re, im);
    }
    return out;
}

std::vector<std::uint8_t> qpsk_demodulate(std::span<const Complex> symbols) {
    std::vector<std::uint8_t> bits;
    bits.reserve(2 * symbols.size());
    for (const Complex& s : symbols) {
        bits.push_back(s.real() < 0.0 ? 1 : 0);
        bits.push_back(s.imag() < 0.0 ? 1 : 0);
    }
    return bits;
}

double rrc_pulse(double t, double rolloff) {
    require(rolloff > 0.0 && rolloff <= 1.0, ErrorKind::invalid_argument,
            "rrc rolloff must be in (0, 1]");
    const double pi = std::numbers::pi;
    const double b = rolloff;
    if (std::abs(t) < 1e-12) return 1.0 - b + 4.0 * b / pi;
    if (std::abs(std::abs(t) - 1.0 / (4.0 * b)) < 1e-9) {
        return b / std::numbers::sqrt2 *
               ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * b)) +
                (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * b)));
    }
    const double num = std::sin(pi * t * (1.0 - b)) + 4.0 * b * t * std::cos(pi * t * (1.0 + b));
    const double den = pi * t * (1.0 - (4.0 * b * t) * (4.0 * b * t));
    return num / den;
}

std::vector<double> rrc_taps(double rolloff, int samples_per_symbol, int span_symbols) {
    require(rolloff > 0.0 && rolloff <= 1.0, ErrorKind::invalid_argument,
            "rrc rolloff must be in (0, 1]");
    require(samples_per_symbol >= 1, ErrorKind::invalid_argument, "samples_per_symbol must be >= 1");
    require(span_symbols >= 2 && span_symbols % 2 == 0, ErrorKind::invalid_argument,
            "rrc span must be even and >= 2");

    const int n = span_symbols * samples_per_symbol + 1;
    const int mid = n / 2;
    std::vector<double> taps(static_cast<std::size_t>(n));
    double energy = 0.0;
    for (int k = 0; k < n; ++k) {
        // Mirror the left half so the taps are exactly symmetric.
        const int j = k <= mid ? k : n - 1 - k;
        const double t = static_cast<double>(j - mid) / samples_per_symbol;
        taps[static_cast<std::size_t>(k)] = rrc_pulse(t, rolloff);
        energy += taps[static_cast<std::size_t>(k)] * taps[static_cast<std::size_t>(k)];
    }
    const double scale = 1.0 / std::sqrt(energy);
    for (double& h : taps) h *= scale;
    return taps;
}

std::vector<Complex> convolve(std::span<const Complex> x, std::span<const double> taps) {
    if (x.empty() || taps.empty()) return {};
    std::vector<Complex> y(x.size() + taps.size() - 1);
    for (std::size_t n = 0; n < x.size(); ++n) {
        const Complex v = x[n];
        if (v == Complex{}) continue;
        for (std::size_t k = 0; k < taps.size(); ++k) y[n + k] += v * taps[k];
    }
    return y;
}

SampleBuffer upsample_filter(std::span<const Complex> symbols, const FrameConfig& cfg) {
    require(!symbols.empty(), ErrorKind::invalid_argument, "upsample_filter needs symbols");
    const auto sps = static_cast<std::size_t>(cfg.oversample);
    std::vector<Complex> stuffed(symbols.size() * sps);
    for (std::size_t i = 0; i < symbols.size(); ++i) stuffed[i * sps] = symbols[i];
    const auto taps = rrc_taps(cfg.rrc_rolloff, cfg.oversample, cfg.rrc_span_symbols);
    return SampleBuffer{convolve(stuffed, taps), cfg.sample_rate_hz};
}

std::vector<Complex> SymbolFrame::symbols() const {
    std::vector<Complex> out(preamble);
    for (const auto& block : payload_blocks) out.insert(out.end(), block.begin(), block.end());
    out.resize(out.size() + guard_len);
    return out;
}

std::vector<Complex> preamble_symbols(const FrameConfig& cfg) {
    const auto chips = preamble_chips(cfg);
    std::vector<Complex> out;
    out.reserve(static_cast<std::size_t>(cfg.preamble_len()));
    for (int r = 0; r < cfg.preamble_reps; ++r) {
        Complex rot{1.0, 0.0};
        if (cfg.preamble_layout == PreambleLayout::alternate_iq) {
            static constexpr Complex kQuarter[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
            rot = kQuarter[r % 4];
        }
        for (int c : chips) out.push_back(rot * static_cast<double>(c));
    }
    return out;
}

std::vector<std::uint8_t> random_payload_bits(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::uint8_t> bits(count);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.bit());
    return bits;
}

BuiltFrame build_frame(std::span<const std::uint8_t> payload_bits, const FrameConfig& cfg) {
    cfg.validate();
    require(payload_bits.size() == static_cast<std::size_t>(cfg.payload_bits()),
            ErrorKind::invalid_argument,
            "build_frame: expected " + std::to_string(cfg.payload_bits()) + " payload bits, got " +
                std::to_string(payload_bits.size()));

    BuiltFrame out;
    SymbolFrame& frame = out.frame;
    frame.preamble = preamble_symbols(cfg);

    const auto data = qpsk_modulate(payload_bits);
    const auto block_len = static_cast<std::size_t>(cfg.block_len);
    const auto cp_len = static_cast<std::size_t>(cfg.cp_len());
    for (int b = 0; b < cfg.n_blocks; ++b) {
        const auto first = data.begin() + static_cast<std::ptrdiff_t>(b * block_len);
        std::vector<Complex> block;
        block.reserve(cp_len + block_len);
        block.insert(block.end(), first + static_cast<std::ptrdiff_t>(block_len - cp_len),
                     first + static_cast<std::ptrdiff_t>(block_len));
        block.insert(block.end(), first, first + static_cast<std::ptrdiff_t>(block_len));
        frame.payload_blocks.push_back(std::move(block));
    }
    frame.guard_len = static_cast<std::size_t>(cfg.guard_len);

    out.samples = upsample_filter(frame.symbols(), cfg);
    return out;
}

}  // namespace rfimp
