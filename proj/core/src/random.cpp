#include "flowplan/random.hpp"

#include <cmath>
#include <numbers>

namespace flowplan {

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = mix64(parent);
    for (std::uint64_t k : keys) {
        h = mix64(h ^ mix64(k + 0x632BE59BD9B4E019ull));
    }
    return h;
}

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_normal_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_normal_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n) {
    // Lemire-style rejection to avoid modulo bias.
    const std::uint64_t limit = n == 0 ? 0 : (~std::uint64_t{0} - n + 1) % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x < limit);
    return n == 0 ? 0 : x % n;
}

}  // namespace flowplan
