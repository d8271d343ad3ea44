// randomness.hpp
// Seeded random streams, biased raw bit sources and the parity extractor that
// turns k raw bits into one setting bit.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bellsim {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Child seed for replica / role `index` under `master`.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Explicit per-consumer random stream. Uniforms are built from raw 64-bit
/// output so sequences do not depend on the standard library's distributions.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1].
    double uniform_open_zero() { return 1.0 - uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    RngStream split(std::uint64_t index) { return RngStream(derive_seed(engine_(), index)); }

private:
    std::mt19937_64 engine_;
};

class RngModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct RngModel {
    double raw_excess_predictability = 0.0;  // tau_raw, adversary advantage over 1/2 per raw bit
    int raw_bits_per_output = 32;
    double extraction_time_ns = 160.0;

    void validate() const {
        if (!(raw_excess_predictability >= 0.0 && raw_excess_predictability <= 0.5))
            throw RngModelError("raw excess predictability must lie in [0, 0.5]");
        if (raw_bits_per_output < 1) throw RngModelError("raw bits per output bit must be >= 1");
        if (!(extraction_time_ns >= 0.0)) throw RngModelError("extraction time must be >= 0");
    }
};

/// Piling-up bound on the bias of the parity of k independent bits each with
/// bias tau_raw: 2^(k-1) tau_raw^k, clamped to [0, 0.5].
inline double output_predictability(double tau_raw, int k) {
    if (!(tau_raw >= 0.0 && tau_raw <= 0.5)) throw RngModelError("tau_raw must lie in [0, 0.5]");
    if (k < 1) throw RngModelError("k must be >= 1");
    const double v = 0.5 * std::pow(2.0 * tau_raw, k);
    return std::clamp(v, 0.0, 0.5);
}

inline double output_predictability(const RngModel& m) {
    return output_predictability(m.raw_excess_predictability, m.raw_bits_per_output);
}

/// i.i.d. bits with P(1) = 1/2 + tau_raw (worst case bias).
inline std::vector<std::uint8_t> raw_bits(const RngModel& m, std::size_t count, RngStream& rng) {
    m.validate();
    std::vector<std::uint8_t> bits(count);
    const double p1 = 0.5 + m.raw_excess_predictability;
    for (auto& b : bits) b = rng.bernoulli(p1) ? 1 : 0;
    return bits;
}

inline std::uint8_t xor_extract(std::span<const std::uint8_t> block, int k) {
    if (static_cast<int>(block.size()) != k)
        throw RngModelError("xor_extract: block length " + std::to_string(block.size()) + " != " + std::to_string(k));
    std::uint8_t parity = 0;
    for (auto b : block) parity ^= (b & 1U);
    return parity;
}

/// One setting bit: draw k raw bits and take their parity.
inline int extracted_bit(const RngModel& m, RngStream& rng) {
    const auto block = raw_bits(m, static_cast<std::size_t>(m.raw_bits_per_output), rng);
    return xor_extract(block, m.raw_bits_per_output);
}

}  // namespace bellsim
