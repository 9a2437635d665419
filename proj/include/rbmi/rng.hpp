#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace rbmi {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ (0x9e3779b97f4a7c15ULL * (b + 1)));
}

/// Deterministic random stream addressed by (seed, stream id): the same pair
/// always reproduces the same draws, independent of platform. Sub-streams are
/// derived by hashing, so chains, data points, and multi-starts can each own
/// an independent stream.
class Rng {
  public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream), engine_(mix64(splitmix64(seed), stream)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    Rng child(std::uint64_t salt) const { return Rng(seed_, mix64(stream_, salt)); }
    Rng child(std::uint64_t a, std::uint64_t b) const { return child(a).child(b); }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, bound), rejection-sampled to avoid modulo bias.
    std::uint64_t uniform_below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
        const std::uint64_t min = (0 - bound) % bound;
        std::uint64_t x = engine_();
        while (x < min) x = engine_();
        return x % bound;
    }

    /// Uniform on [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Box-Muller from two fresh uniforms; no cached state.
    double normal() {
        const double u1 = 1.0 - uniform01();  // (0,1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

}  // namespace rbmi
