#include "kslab/limit_law.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "kslab/rng.hpp"
#include "kslab/stats.hpp"

namespace kslab {

namespace {

constexpr double kFarSigmas = 10.0;  // far-step landing gap in step standard deviations

double barrier(double c, double t) { return c / (t * t); }

// Step length h with barrier(t + h) - B = 2 kFarSigmas sqrt(h): the landing
// point stays 20 step-sigmas under the barrier, so a crossing during or at
// the end of the step has probability below exp(-200). The left side is
// decreasing in h, so the root is unique and bracketed by doubling.
double far_step_length(double c, double t, double B, double dt) {
    auto slack = [&](double h) {
        return barrier(c, t + h) - B - 2.0 * kFarSigmas * std::sqrt(h);
    };
    double lo = 0.0;
    double hi = dt;
    while (slack(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) return 1e12;
    }
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (slack(mid) > 0.0 ? lo : hi) = mid;
    }
    return lo;
}

// Local refinement of a step whose endpoint exceeded the barrier: two levels
// of Brownian-bridge midpoint sampling narrow the bracket, then the crossing
// time is placed by linear interpolation between the endpoint gaps.
double refine_crossing(Xoshiro256PlusPlus& rng, double c, double ta, double Ba, double tb,
                       double Bb) {
    for (int level = 0; level < 2; ++level) {
        const double h = tb - ta;
        const double tm = ta + 0.5 * h;
        const double Bm = 0.5 * (Ba + Bb) + rng.normal() * (0.5 * std::sqrt(h));
        if (Bm >= barrier(c, tm)) {
            tb = tm;
            Bb = Bm;
        } else {
            ta = tm;
            Ba = Bm;
        }
    }
    const double below = barrier(c, ta) - Ba;
    const double above = Bb - barrier(c, tb);
    const double den = below + above;
    return den > 0.0 ? ta + (tb - ta) * below / den : ta;
}

VarthetaSample simulate_path(Xoshiro256PlusPlus& rng, const VarthetaConfig& cfg) {
    const double c = cfg.barrier_scale;
    const double dt = cfg.dt;
    const double sqrt_dt = std::sqrt(dt);
    const double far_entry = 3.0 * kFarSigmas * sqrt_dt;

    double t = cfg.t0;
    double B = rng.normal() * std::sqrt(cfg.t0);
    if (B >= barrier(c, t)) return {t, dt, false};

    while (t < cfg.t_max) {
        double h = dt;
        bool far = false;
        if (cfg.far_field && barrier(c, t) - B > far_entry) {
            const double hf = far_step_length(c, t, B, dt);
            if (hf >= 2.0 * dt) {
                h = hf;
                far = true;
            }
        }
        const double tn = t + h;
        const double Bn = B + std::sqrt(h) * rng.normal();
        if (Bn >= barrier(c, tn)) {
            return {refine_crossing(rng, c, t, B, tn, Bn), dt, false};
        }
        if (cfg.bridge_correction || far) {
            // Probability that the bridge touched the barrier inside the
            // step, with the barrier frozen at its in-step minimum level.
            const double ga = barrier(c, tn) - B;
            const double gb = barrier(c, tn) - Bn;
            const double exponent = 2.0 * ga * gb / h;
            if (exponent < 40.0 && rng.uniform01() < std::exp(-exponent)) {
                const double da = barrier(c, t) - B;
                return {t + h * da / (da + gb), dt, true};
            }
        }
        t = tn;
        B = Bn;
    }

    switch (cfg.tail) {
        case TailPolicy::censor:
            return {cfg.t_max, dt, false};
        case TailPolicy::error:
            throw std::runtime_error("sample_vartheta: no crossing before t_max");
        case TailPolicy::exact:
            break;
    }
    // The barrier is flat to one part in 10^6 past t_max; finish with the
    // closed-form first passage to the frozen level (a/Z)^2, Z standard normal.
    const double a = barrier(c, t) - B;
    double z = 0.0;
    while (z == 0.0) z = rng.normal();
    return {t + (a / z) * (a / z), dt, false};
}

}  // namespace

std::vector<VarthetaSample> sample_vartheta(std::uint64_t count, std::uint64_t master_seed,
                                            const VarthetaConfig& config, unsigned parallelism) {
    if (count == 0) throw std::invalid_argument("sample_vartheta: count must be positive");
    if (!(config.dt > 0.0) || config.dt > 1e-4) {
        throw std::invalid_argument("sample_vartheta: dt must lie in (0, 1e-4]");
    }
    if (!(config.t0 > 0.0) || config.t0 > 0.05) {
        throw std::invalid_argument("sample_vartheta: t0 must lie in (0, 0.05]");
    }
    if (!(config.t_max > config.t0)) {
        throw std::invalid_argument("sample_vartheta: t_max must exceed t0");
    }
    if (!(config.barrier_scale > 0.0)) {
        throw std::invalid_argument("sample_vartheta: barrier scale must be positive");
    }

    std::vector<VarthetaSample> out(count);
    const unsigned jobs = std::max(1u, parallelism);
    if (jobs == 1) {
        for (std::uint64_t i = 0; i < count; ++i) {
            Xoshiro256PlusPlus rng(derive_stream_seed(master_seed, i));
            out[i] = simulate_path(rng, config);
        }
        return out;
    }

    std::atomic<std::uint64_t> next{0};
    std::atomic<bool> failed{false};
    auto worker = [&]() {
        while (true) {
            const std::uint64_t i = next.fetch_add(1);
            if (i >= count || failed.load()) return;
            try {
                Xoshiro256PlusPlus rng(derive_stream_seed(master_seed, i));
                out[i] = simulate_path(rng, config);
            } catch (...) {
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (unsigned j = 0; j < jobs; ++j) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
    if (failed.load()) throw std::runtime_error("sample_vartheta: a path failed to cross");
    return out;
}

std::vector<VarthetaSample> sample_vartheta(std::uint64_t count, std::uint64_t master_seed,
                                            double dt, double t0) {
    VarthetaConfig cfg;
    cfg.dt = dt;
    cfg.t0 = t0;
    return sample_vartheta(count, master_seed, cfg);
}

LimitTriple limit_maps(double vartheta) {
    if (!(vartheta > 0.0)) throw std::domain_error("limit_maps: requires a positive input");
    static const double tc = std::pow(3.0, -0.6) * std::pow(2.0, 0.8);
    static const double d3c = 4.0 * std::sqrt(3.0) * std::pow(tc, 1.5);
    const double inv2 = 1.0 / (vartheta * vartheta);
    LimitTriple out;
    out.t = tc * inv2;
    out.d2 = 4.0 * out.t;
    out.d3 = d3c * inv2 / vartheta;
    return out;
}

LimitSamples map_samples(const std::vector<VarthetaSample>& samples) {
    LimitSamples out;
    out.d2.reserve(samples.size());
    out.d3.reserve(samples.size());
    out.t.reserve(samples.size());
    for (const VarthetaSample& s : samples) {
        const LimitTriple m = limit_maps(s.value);
        out.d2.push_back(m.d2);
        out.d3.push_back(m.d3);
        out.t.push_back(m.t);
    }
    return out;
}

KsReport two_sample_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("two_sample_distance: empty sample");
    KsReport report;
    report.statistic = ks_statistic(a, b);
    report.critical_5pct = ks_critical_5pct(a.size(), b.size());
    report.m = a.size();
    report.n = b.size();
    return report;
}

ScalingReport scaling_identity_check(std::uint64_t count, std::uint64_t seed) {
    if (count < 2) throw std::invalid_argument("scaling_identity_check: count too small");
    ScalingReport report;
    report.c_values = {1.0, 2.0, std::pow(3.0, 0.75) / 2.0};
    std::array<std::vector<double>, 3> rescaled;
    for (int i = 0; i < 3; ++i) {
        VarthetaConfig cfg;
        cfg.barrier_scale = report.c_values[i];
        const auto samples =
            sample_vartheta(count, derive_stream_seed(seed, static_cast<std::uint64_t>(i)), cfg);
        const double scale = std::pow(report.c_values[i], -0.4);
        rescaled[i].reserve(samples.size());
        for (const VarthetaSample& s : samples) rescaled[i].push_back(scale * s.value);
    }
    const std::array<std::pair<int, int>, 3> index_pairs = {{{0, 1}, {0, 2}, {1, 2}}};
    report.pass = true;
    for (int p = 0; p < 3; ++p) {
        const auto [i, j] = index_pairs[p];
        const KsReport ks = two_sample_distance(rescaled[i], rescaled[j]);
        report.pairs[p] = {report.c_values[i], report.c_values[j], ks.statistic,
                           ks.critical_5pct};
        if (ks.statistic >= ks.critical_5pct) report.pass = false;
    }
    return report;
}

}  // namespace kslab
