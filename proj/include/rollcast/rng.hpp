#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rollcast {

/// Mixes a (seed, stream) pair into an independent 64-bit state.
/// splitmix64 finalizer; used to derive per-tree / per-series RNG streams
/// so that parallel units reproduce bit-identically in any schedule.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic random source. mt19937_64 is bit-exact across platforms;
/// the uniform/normal transforms below avoid the implementation-defined
/// std::*_distribution wrappers for the same reason.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, std::uint64_t stream) : engine_(mix_seed(seed, stream)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        // Multiply-shift rejection-free mapping; bias is < 2^-64 * n,
        // negligible for the sample sizes used here.
        unsigned __int128 wide = static_cast<unsigned __int128>(engine_()) * n;
        return static_cast<std::uint64_t>(wide >> 64);
    }

    /// Standard normal via Box-Muller (one value per call, cached pair).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace rollcast
