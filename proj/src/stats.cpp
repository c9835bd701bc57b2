#include "kslab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kslab/rng.hpp"

namespace kslab {

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile: empty sample");
    if (!(q >= 0.0) || !(q <= 1.0)) throw std::invalid_argument("quantile: q outside [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("least_squares_slope: need two or more paired points");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("least_squares_slope: degenerate x values");
    return sxy / sxx;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double sup = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        sup = std::max(sup, std::abs(static_cast<double>(i) / na -
                                     static_cast<double>(j) / nb));
    }
    return sup;
}

double ks_critical_5pct(std::uint64_t m, std::uint64_t n) {
    if (m == 0 || n == 0) throw std::invalid_argument("ks_critical_5pct: empty sample");
    const double dm = static_cast<double>(m);
    const double dn = static_cast<double>(n);
    return 1.358 * std::sqrt((dm + dn) / (dm * dn));
}

double bootstrap_median_se(const std::vector<double>& values, std::uint64_t replicates,
                           std::uint64_t seed) {
    if (values.empty()) throw std::invalid_argument("bootstrap_median_se: empty sample");
    if (replicates < 2) throw std::invalid_argument("bootstrap_median_se: need >= 2 replicates");
    Xoshiro256PlusPlus rng(seed);
    std::vector<double> resample(values.size());
    std::vector<double> medians;
    medians.reserve(replicates);
    for (std::uint64_t r = 0; r < replicates; ++r) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            resample[i] = values[rng.uniform_below(values.size())];
        }
        medians.push_back(median(resample));
    }
    double m = 0.0;
    for (const double v : medians) m += v;
    m /= static_cast<double>(replicates);
    double ss = 0.0;
    for (const double v : medians) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(replicates - 1));
}

}  // namespace kslab
