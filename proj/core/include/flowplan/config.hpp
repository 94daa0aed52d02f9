#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>

namespace flowplan {

inline constexpr std::size_t kMaxDim = 8;

/// A point in the normalized configuration space [0,1]^d.
/// Fixed capacity so planner inner loops never allocate.
class Config {
public:
    Config() = default;
    explicit Config(std::size_t dim) : dim_(check_dim(dim)) {}
    Config(std::initializer_list<double> values) : dim_(check_dim(values.size())) {
        std::copy(values.begin(), values.end(), coords_.begin());
    }
    explicit Config(std::span<const double> values) : dim_(check_dim(values.size())) {
        std::copy(values.begin(), values.end(), coords_.begin());
    }

    std::size_t size() const noexcept { return dim_; }
    bool empty() const noexcept { return dim_ == 0; }

    double& operator[](std::size_t i) noexcept {
        assert(i < dim_);
        return coords_[i];
    }
    double operator[](std::size_t i) const noexcept {
        assert(i < dim_);
        return coords_[i];
    }

    double* data() noexcept { return coords_.data(); }
    const double* data() const noexcept { return coords_.data(); }
    std::span<double> span() noexcept { return {coords_.data(), dim_}; }
    std::span<const double> span() const noexcept { return {coords_.data(), dim_}; }
    double* begin() noexcept { return coords_.data(); }
    double* end() noexcept { return coords_.data() + dim_; }
    const double* begin() const noexcept { return coords_.data(); }
    const double* end() const noexcept { return coords_.data() + dim_; }

    bool in_unit_cube() const noexcept {
        return std::all_of(begin(), end(), [](double c) { return c >= 0.0 && c <= 1.0; });
    }

    friend bool operator==(const Config& a, const Config& b) noexcept {
        return a.dim_ == b.dim_ && std::equal(a.begin(), a.end(), b.begin());
    }

private:
    static std::size_t check_dim(std::size_t d) {
        if (d > kMaxDim) throw std::invalid_argument("Config: dimension exceeds kMaxDim");
        return d;
    }

    std::array<double, kMaxDim> coords_{};
    std::size_t dim_ = 0;
};

inline double distance_sq(const Config& a, const Config& b) noexcept {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double distance(const Config& a, const Config& b) noexcept { return std::sqrt(distance_sq(a, b)); }

/// a + t (b - a)
inline Config lerp(const Config& a, const Config& b, double t) noexcept {
    Config out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + t * (b[i] - a[i]);
    return out;
}

}  // namespace flowplan
