#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace flowplan {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derive a child seed from a parent seed and a list of indices/tags.
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> keys) noexcept;

/// Seeded generator with portable uniform/normal draws (the standard
/// distributions are implementation-defined, these are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(mix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1).
    double uniform_open() {
        double u;
        do {
            u = uniform();
        } while (u == 0.0);
        return u;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller, caching the second variate.
    double normal();

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace flowplan
