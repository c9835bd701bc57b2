#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "kslab/critical_lab.hpp"
#include "kslab/stats.hpp"

using namespace kslab;

namespace {

// Unique throwaway path inside the build tree's working directory.
std::string temp_path(const char* tag) {
    return std::string("critical_lab_test_") + tag + ".jsonl";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool same_record(const TrialRecord& a, const TrialRecord& b) {
    return a.n == b.n && a.seed == b.seed && a.theta == b.theta && a.D2 == b.D2 &&
           a.D3 == b.D3 && a.t_theta == b.t_theta && a.r2 == b.r2 && a.r3 == b.r3;
}

}  // namespace

TEST_CASE("quantile, median, slope, and distance helpers") {
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(quantile({10.0, 20.0, 30.0, 40.0}, 0.25) == doctest::Approx(17.5).epsilon(1e-15));
    CHECK(quantile({5.0}, 0.9) == 5.0);
    CHECK(quantile({3.0, 1.0, 2.0}, 0.0) == 1.0);
    CHECK(quantile({3.0, 1.0, 2.0}, 1.0) == 3.0);
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == doctest::Approx(2.5).epsilon(1e-15));

    const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
    const std::vector<double> ys = {2.0, 4.0, 6.0, 8.0};
    CHECK(least_squares_slope(xs, ys) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(least_squares_slope(xs, {5.0, 5.0, 5.0, 5.0}) == doctest::Approx(0.0).epsilon(1e-14));

    CHECK(ks_statistic({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
    CHECK(ks_statistic({1.0, 2.0}, {10.0, 20.0}) == 1.0);
    CHECK(ks_statistic({1.0, 3.0}, {2.0, 4.0}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(ks_critical_5pct(100, 100) ==
          doctest::Approx(1.358 * std::sqrt(0.02)).epsilon(1e-14));

    const std::vector<double> sample = {1.0, 2.0, 2.5, 3.0, 4.0, 5.5, 6.0, 7.0, 8.0, 9.0};
    const double se1 = bootstrap_median_se(sample, 400, 42);
    const double se2 = bootstrap_median_se(sample, 400, 42);
    CHECK(se1 == se2);
    CHECK(se1 > 0.0);
}

TEST_CASE("critical sequence hits the balanced composition") {
    const DegreeSequence small = critical_sequence(1000);
    CHECK(small.d1 == 133);
    CHECK(small.d2 == 0);
    CHECK(small.d3 == 289);

    const DegreeSequence big = critical_sequence(1000000);
    CHECK(big.d1 == 133975);
    CHECK(big.d3 == 288675);

    for (const std::uint64_t n : {1000ULL, 10000ULL, 123456ULL, 1000000ULL}) {
        const DegreeSequence seq = critical_sequence(n);
        CHECK(seq.half_edges() == n);
        const auto p = seq.proportions();
        const double theta = theta_param(p[0], p[1], p[2]);
        CHECK(std::abs(theta) <= 11.0 / static_cast<double>(n));
    }

    CHECK_THROWS_AS(critical_sequence(999), std::invalid_argument);
    CHECK_THROWS_AS(critical_sequence(8), std::invalid_argument);
}

TEST_CASE("extinction time of the realized sequence approaches the ideal one") {
    const double t_small = critical_extinction_time(critical_sequence(1000));
    const double t_big = critical_extinction_time(critical_sequence(1000000));
    const double ideal = 0.200427508588152;
    CHECK(std::abs(t_small - ideal) < 2e-2);
    CHECK(std::abs(t_big - ideal) < 2e-3);
    CHECK(std::abs(t_big - ideal) < std::abs(t_small - ideal));
}

TEST_CASE("trial records serialize one line per record, byte-stable") {
    TrialRecord r;
    r.n = 10000;
    r.seed = 1234567890123456789ULL;
    r.theta = 1801;
    r.D2 = 504;
    r.D3 = 87;
    r.t_theta = 0.65432109876543213;
    r.r2 = 1.2345678901234567;
    r.r3 = 0.34567890123456789;

    const std::string line = to_jsonl(r);
    CHECK(line.find('\n') == std::string::npos);
    const TrialRecord back = parse_trial_record(line);
    CHECK(same_record(r, back));
    CHECK(to_jsonl(back) == line);

    CHECK_THROWS(parse_trial_record("not json"));
    CHECK_THROWS(parse_trial_record("{\"n\":1}"));  // missing keys
}

TEST_CASE("ensemble runs are identical at any parallelism") {
    const std::uint64_t n = 10000;
    const std::uint64_t trials = 6;
    const auto serial = run_ensemble(n, trials, 777, 1);
    const auto two = run_ensemble(n, trials, 777, 2);
    const auto four = run_ensemble(n, trials, 777, 4);
    REQUIRE(serial.size() == trials);
    REQUIRE(two.size() == trials);
    REQUIRE(four.size() == trials);
    for (std::uint64_t i = 0; i < trials; ++i) {
        CHECK(same_record(serial[i], two[i]));
        CHECK(same_record(serial[i], four[i]));
        CHECK(serial[i].D2 % 2 == 0);
        CHECK(serial[i].D3 % 3 == 0);
        CHECK(serial[i].n == n);
    }
    // A different master seed changes at least one trial.
    const auto other = run_ensemble(n, trials, 778, 1);
    bool any_diff = false;
    for (std::uint64_t i = 0; i < trials; ++i) any_diff = any_diff || !same_record(serial[i], other[i]);
    CHECK(any_diff);
}

TEST_CASE("record fields carry the rescaled statistics") {
    const std::uint64_t n = 10000;
    const auto records = run_ensemble(n, 4, 99, 2);
    const double t_ext = critical_extinction_time(critical_sequence(n));
    const double scale2 = std::pow(static_cast<double>(n), -0.6);
    const double scale3 = std::pow(static_cast<double>(n), -0.4);
    for (const TrialRecord& r : records) {
        CHECK(r.t_theta ==
              doctest::Approx((t_ext * n - static_cast<double>(r.theta)) * scale2).epsilon(1e-13));
        CHECK(r.r2 == doctest::Approx(r.D2 * scale2).epsilon(1e-14));
        CHECK(r.r3 == doctest::Approx(r.D3 * scale3).epsilon(1e-14));
        CHECK(r.theta <= n / 2);
    }
    CHECK_THROWS_AS(run_ensemble(n, 0, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(run_ensemble(10001, 1, 1, 1), std::invalid_argument);
}

TEST_CASE("streamed record files resume without recomputing or duplicating") {
    const std::uint64_t n = 10000;
    const std::uint64_t trials = 6;
    const std::string full_path = temp_path("full");
    const std::string part_path = temp_path("part");

    const auto full = run_ensemble(n, trials, 4242, 2, full_path);
    const std::string full_bytes = read_file(full_path);
    REQUIRE(!full_bytes.empty());

    // Keep only the first three lines, then resume.
    {
        std::istringstream in(full_bytes);
        std::ofstream out(part_path, std::ios::binary);
        std::string line;
        for (int i = 0; i < 3 && std::getline(in, line); ++i) out << line << '\n';
    }
    const auto resumed = run_ensemble(n, trials, 4242, 2, part_path, true);
    REQUIRE(resumed.size() == trials);
    for (std::uint64_t i = 0; i < trials; ++i) CHECK(same_record(resumed[i], full[i]));
    CHECK(read_file(part_path) == full_bytes);

    // Resuming a complete file leaves it untouched.
    const auto again = run_ensemble(n, trials, 4242, 1, full_path, true);
    for (std::uint64_t i = 0; i < trials; ++i) CHECK(same_record(again[i], full[i]));
    CHECK(read_file(full_path) == full_bytes);

    const auto loaded = read_trial_records(full_path);
    REQUIRE(loaded.size() == trials);
    for (std::uint64_t i = 0; i < trials; ++i) CHECK(same_record(loaded[i], full[i]));
    CHECK_THROWS_AS(read_trial_records("no_such_file.jsonl"), std::runtime_error);

    std::remove(full_path.c_str());
    std::remove(part_path.c_str());
}

TEST_CASE("summaries recover exact power-law slopes") {
    std::vector<TrialRecord> records;
    for (const std::uint64_t n : {1000ULL, 10000ULL, 100000ULL}) {
        for (int i = 0; i < 3; ++i) {
            TrialRecord r;
            r.n = n;
            r.D2 = n;          // slope exactly 1
            r.D3 = n * n;      // slope exactly 2
            r.r2 = static_cast<double>(i);
            r.r3 = static_cast<double>(i) * 2.0;
            r.t_theta = static_cast<double>(i);
            records.push_back(r);
        }
    }
    const EnsembleSummary s = summarize(records);
    REQUIRE(s.groups.size() == 3);
    CHECK(s.groups[0].n == 1000);
    CHECK(s.groups[2].n == 100000);
    CHECK(s.groups[0].trials == 3);
    CHECK(s.slope_d2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.slope_d3 == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(s.groups[0].median_D2 == 1000.0);
    CHECK(s.groups[0].q_r2[2] == 1.0);  // median of {0, 1, 2}
    CHECK(s.groups[0].q_t_theta[0] <= s.groups[0].q_t_theta[4]);

    const EnsembleSummary single = summarize({records[0], records[1], records[2]});
    CHECK(std::isnan(single.slope_d2));
    CHECK(std::isnan(single.slope_d3));
    CHECK_THROWS_AS(summarize({}), std::invalid_argument);
}

TEST_CASE("fluctuation diagnostics compare a run against its fluid limit") {
    const std::uint64_t n = 20000;
    const DegreeSequence seq = critical_sequence(n);
    const auto p = seq.proportions();
    const FluidTrajectory fluid = integrate(p[0], p[1], p[2]);
    const ChainTrajectory chain = explore(seq, 606, RecordMode::full());

    const std::uint64_t stride = 50;
    const auto recs = fluctuation_diagnostics(chain, fluid, stride);
    REQUIRE(!recs.empty());

    const double eps_min = std::pow(static_cast<double>(n), -0.4);
    CHECK(recs.front().k == 0);
    CHECK(std::abs(recs.front().A) < 1e-6);
    CHECK(std::abs(recs.front().B) < 1e-6);
    CHECK(std::abs(recs.front().C) < 1e-6);
    for (const FluctuationRecord& r : recs) {
        CHECK(r.k % stride == 0);
        CHECK(r.eps_k >= eps_min);
        CHECK(std::isfinite(r.A_t));
        CHECK(std::isfinite(r.B_t));
        CHECK(std::isfinite(r.C_t));
        CHECK(r.A_t == doctest::Approx(r.A / (std::pow(r.eps_k, 0.75) * std::sqrt(n))));
        CHECK(r.C_t == doctest::Approx(r.C / (std::sqrt(r.eps_k) * std::sqrt(n))));
    }
    // Scaled fluctuations stay modest on a healthy run.
    for (const FluctuationRecord& r : recs) {
        CHECK(std::abs(r.B_t) < 50.0);
    }

    const FluidTrajectory wrong = integrate(0.5, 0.3, 0.2);
    CHECK_THROWS_AS(fluctuation_diagnostics(chain, wrong, stride), std::invalid_argument);
    CHECK_THROWS_AS(fluctuation_diagnostics(ChainTrajectory{}, fluid, stride),
                    std::invalid_argument);
}
