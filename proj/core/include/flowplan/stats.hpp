#pragma once

#include <span>

namespace flowplan {

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> xs);
/// Half-width of the two-sided 95% Student-t confidence interval of the mean.
double ci95_half_width(std::span<const double> xs);

struct KsResult {
    double statistic;
    double p_value;
};

/// One-sample Kolmogorov-Smirnov test against U(0,1).
KsResult ks_test_uniform(std::span<const double> xs);

}  // namespace flowplan
