#include "flowplan/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace flowplan {

double mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

double ci95_half_width(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const boost::math::students_t dist(static_cast<double>(xs.size() - 1));
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    return t * stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

KsResult ks_test_uniform(std::span<const double> xs) {
    std::vector<double> s(xs.begin(), xs.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double cdf = std::clamp(s[i], 0.0, 1.0);
        d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    // Asymptotic Kolmogorov distribution with the Stephens small-sample correction.
    const double sqrt_n = std::sqrt(n);
    const double lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    double p = 0.0;
    if (lambda < 1e-3) {
        p = 1.0;
    } else {
        double sign = 1.0;
        for (int k = 1; k <= 100; ++k) {
            const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
            p += term;
            if (std::abs(term) < 1e-12) break;
            sign = -sign;
        }
        p = std::clamp(2.0 * p, 0.0, 1.0);
    }
    return {d, p};
}

}  // namespace flowplan
