#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace proxns {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Single deterministic random source for a run.
///
/// Every stochastic operation in the library draws from one Rng in a fixed,
/// documented order, so equal seeds give bitwise-equal results:
///   - a kernel step draws exactly n standard normals (state dimension n);
///   - a Metropolis-Hastings decision draws exactly one uniform;
///   - a live-point replacement draws one uniform index before stepping.
/// Independent streams (data simulation vs. sampling, parallel chains) are
/// derived from the master seed by stream index, never by sharing state.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(splitmix64(seed)) {}

    /// One standard normal draw. A fresh distribution is used per call so the
    /// draw count per operation is fixed (no cached spare).
    double normal() {
        std::normal_distribution<double> d(0.0, 1.0);
        return d(gen_);
    }

    /// Uniform draw on [0, 1).
    double uniform() {
        std::uniform_real_distribution<double> d(0.0, 1.0);
        return d(gen_);
    }

    /// Uniform index in {0, ..., n-1}.
    std::size_t uniform_index(std::size_t n) {
        std::uniform_int_distribution<std::size_t> d(0, n - 1);
        return d(gen_);
    }

    std::vector<double> normal_vec(std::size_t n) {
        std::vector<double> w(n);
        for (auto& v : w) v = normal();
        return w;
    }

    /// Independent stream derived from the master seed and a stream index.
    Rng stream(std::uint64_t index) const {
        return Rng(splitmix64(seed_ ^ (0x51700c7355a6d159ULL + index)));
    }

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

} // namespace proxns
