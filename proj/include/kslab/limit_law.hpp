#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace kslab {

// One simulated hitting time of the barrier t -> c / t^2 by standard
// Brownian motion. crossed_at_refinement is true when the crossing was
// declared by the within-step Brownian-bridge correction (the path itself
// never exceeded the barrier at a grid point), false for a grid exceedance
// refined by local bisection.
struct VarthetaSample {
    double value = 0.0;
    double dt_used = 0.0;
    bool crossed_at_refinement = false;
};

// What to do with a path still below the barrier at t_max. The barrier is
// essentially flat there (c 10^-6 at t_max = 10^3), so `exact` finishes the
// path with the closed-form first-passage draw to that level; `censor`
// returns t_max itself (for grid-reference tests); `error` throws.
enum class TailPolicy { exact, censor, error };

struct VarthetaConfig {
    double dt = 1e-5;            // near-barrier grid step
    double t0 = 0.05;            // start time; B(t0) ~ N(0, t0)
    double t_max = 1e3;          // horizon for the tail policy
    double barrier_scale = 1.0;  // the c in c / t^2
    bool bridge_correction = true;
    // Far from the barrier, replace many grid steps by one Gaussian step
    // sized so the crossing probability stays below exp(-200).
    bool far_field = true;
    TailPolicy tail = TailPolicy::exact;
};

std::vector<VarthetaSample> sample_vartheta(std::uint64_t count, std::uint64_t master_seed,
                                            const VarthetaConfig& config = {},
                                            unsigned parallelism = 1);

// Convenience overload with the two commonly tuned knobs.
std::vector<VarthetaSample> sample_vartheta(std::uint64_t count, std::uint64_t master_seed,
                                            double dt, double t0);

// Hitting-time functionals of the limit laws: d2 = (4 tc) v^-2,
// d3 = (4 sqrt(3) tc^{3/2}) v^-3, t = tc v^-2 with tc = 3^{-3/5} 2^{4/5}.
struct LimitTriple {
    double d2 = 0.0;
    double d3 = 0.0;
    double t = 0.0;
};

LimitTriple limit_maps(double vartheta);

struct LimitSamples {
    std::vector<double> d2;
    std::vector<double> d3;
    std::vector<double> t;
};

LimitSamples map_samples(const std::vector<VarthetaSample>& samples);

struct KsReport {
    double statistic = 0.0;
    double critical_5pct = 0.0;
    std::uint64_t m = 0;
    std::uint64_t n = 0;

    bool pass_5pct() const { return statistic < critical_5pct; }
};

KsReport two_sample_distance(const std::vector<double>& a, const std::vector<double>& b);

// Samples hitting times T_c of barriers c / t^2 for c in {1, 2, 3^{3/4}/2}
// and tests that the laws of c^{-2/5} T_c collapse onto each other.
struct ScalingPair {
    double c_a = 0.0;
    double c_b = 0.0;
    double statistic = 0.0;
    double critical_5pct = 0.0;
};

struct ScalingReport {
    std::array<double, 3> c_values{};
    std::array<ScalingPair, 3> pairs{};
    bool pass = false;
};

ScalingReport scaling_identity_check(std::uint64_t count, std::uint64_t seed);

}  // namespace kslab
