#pragma once

#include <cstdint>
#include <vector>

namespace kslab {

// Linear-interpolation quantile (the common "type 7" definition) of an
// unsorted sample; q in [0, 1].
double quantile(std::vector<double> values, double q);

double median(std::vector<double> values);

// Least-squares slope of y against x.
double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

// Two-sample Kolmogorov-Smirnov sup-distance between empirical distribution
// functions, with ties handled by advancing both sides past equal values.
double ks_statistic(std::vector<double> a, std::vector<double> b);

// Asymptotic 5% critical value 1.358 sqrt((m+n)/(m n)).
double ks_critical_5pct(std::uint64_t m, std::uint64_t n);

// Bootstrap standard error of the sample median.
double bootstrap_median_se(const std::vector<double>& values, std::uint64_t replicates,
                           std::uint64_t seed);

}  // namespace kslab
