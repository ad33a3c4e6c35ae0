#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace twmr {

/// splitmix64 step; used both as a generator for seed derivation and as a
/// stateless per-cell hash.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive an independent child seed from (parent seed, label, index).
/// Streams derived with distinct labels/indices never collide in practice,
/// which is what lets trials, channels and GA runs draw independently.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index = 0) {
    std::uint64_t s = seed;
    for (char c : label) {
        s ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        splitmix64(s);
    }
    s ^= 0x5851f42d4c957f2dULL * (index + 1);
    std::uint64_t t = s;
    return splitmix64(t);
}

/// Seedable pseudo-random stream with hand-rolled transforms.
///
/// std::*_distribution output is implementation-defined, so every transform
/// is done here from raw mt19937_64 words to keep runs bit-reproducible
/// across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Exponential with the given rate (mean 1/rate).
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    /// Standard normal via Box-Muller (one value per call, no cached spare,
    /// so the draw count stays predictable).
    double normal(double mean, double stddev) {
        double u1 = uniform();
        double u2 = uniform();
        // avoid log(0)
        while (u1 <= 0.0) u1 = uniform();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
        return mean + stddev * z;
    }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // bias < 2^-53 is immaterial here
        auto v = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
        return v < n ? v : n - 1;
    }

    std::uint64_t raw() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

} // namespace twmr
