#ifndef IPAREG_RNG_HPP
#define IPAREG_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace ipareg {

/// Derives independent seed streams from one experiment seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream));
}

/// mt19937_64 wrapper with hand-rolled sampling. std::*_distribution is
/// implementation-defined, so re-running with the same seed must not go
/// through it if outputs are to be reproducible across toolchains.
class Rand {
public:
    explicit Rand(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection-free modulo is fine here: n is tiny next to 2^64.
        return engine_() % n;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Exponential with the given rate.
    double exponential(double rate) {
        return -std::log(1.0 - uniform01()) / rate;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace ipareg

#endif // IPAREG_RNG_HPP
