#pragma once

#include <cstdint>
#include <random>

namespace rfimp {

// splitmix64 finalizer. Bijective on 64-bit words, so distinct inputs give
// distinct seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Seed for an independent sub-stream of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

// Seeded generator with distributions written out explicitly so the streams
// are identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double low, double high) { return low + (high - low) * uniform(); }

    // Uniform integer on [0, bound).
    std::uint64_t below(std::uint64_t bound);

    // Standard normal (Box-Muller).
    double normal();

    int bit() { return static_cast<int>(engine_() >> 63); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace rfimp
