#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "kslab/core_model.hpp"
#include "kslab/exploration.hpp"
#include "kslab/fluid.hpp"
#include "support/oracles.hpp"

using namespace kslab;
using oracles::Composition;

namespace {

// The (D2, D3) law for two leaves plus two degree-3 vertices, computed two
// independent ways below (chain recursion and pairing enumeration).
constexpr double kP00 = 18.0 / 35.0;
constexpr double kP06 = 5.0 / 35.0;
constexpr double kP20 = 12.0 / 35.0;

DegreeSequence mixed_sequence(std::uint64_t index) {
    static const std::array<std::array<double, 3>, 5> props = {{
        {0.5, 0.3, 0.2},
        {0.04, 0.16, 0.8},
        {0.134, 0.0, 0.866},
        {0.25, 0.5, 0.25},
        {0.8, 0.1, 0.1},
    }};
    const auto& p = props[index % props.size()];
    const std::uint64_t n = 60 + 2 * (index * 17 % 171);
    return sequence_from_proportions(p[0], p[1], p[2], n);
}

// Marginal (D2, D3) law from the exact endpoint recursion.
std::map<std::pair<std::uint64_t, std::uint64_t>, double> marginal_law(const Composition& c) {
    std::map<std::pair<std::uint64_t, std::uint64_t>, double> law;
    for (const auto& [key, p] : oracles::endpoint_law(c)) {
        law[{key[1], key[2]}] += p;
    }
    return law;
}

// Integer composition near given proportions with the divisibility the
// process preserves (Y even, Z divisible by 3).
Composition composition_at(double x, double y, double z, std::uint64_t S) {
    const std::uint64_t Z = 3 * static_cast<std::uint64_t>(std::llround(S * z / 3.0));
    const std::uint64_t Y = 2 * static_cast<std::uint64_t>(std::llround(S * y / 2.0));
    REQUIRE(Y + Z < S);
    return {S - Y - Z, Y, Z};
}

}  // namespace

TEST_CASE("two leaves pair with each other in one step") {
    const ChainTrajectory t = explore(DegreeSequence{2, 0, 0}, 11, RecordMode::full());
    REQUIRE(t.states.size() == 2);
    CHECK(t.states[0].k == 0);
    CHECK(t.states[0].X == 2);
    CHECK(t.states[0].S() == 2);
    CHECK(t.states[1].X == 0);
    CHECK(t.states[1].S() == 0);
    CHECK(t.theta == 1);
    CHECK(t.D2 == 0);
    CHECK(t.D3 == 0);
    CHECK(t.n == 2);
}

TEST_CASE("a leafless start stops immediately") {
    const ChainTrajectory t = explore(DegreeSequence{0, 3, 0}, 5);
    REQUIRE(t.states.size() == 1);
    CHECK(t.theta == 0);
    CHECK(t.D2 == 6);
    CHECK(t.D3 == 0);
    CHECK(t.initial().Y == 6);
}

TEST_CASE("explore rejects an invalid sequence") {
    CHECK_THROWS_AS(explore(DegreeSequence{}, 1), std::invalid_argument);
    CHECK_THROWS_AS(explore(DegreeSequence{1, 1, 0}, 1), std::invalid_argument);
}

TEST_CASE("coupled run on a path clears everything in one step") {
    const auto g = oracles::make_graph({1, 1, 2}, {{0, 2}, {1, 3}});
    const CoupledExploration run = explore_coupled(g, 3, RecordMode::full());
    CHECK(run.chain.theta == 1);
    CHECK(run.chain.initial().X == 2);
    CHECK(run.chain.initial().Y == 2);
    CHECK(run.chain.final_state().S() == 0);
    CHECK(run.remainder_edges.empty());
}

TEST_CASE("coupled run on a triangle stops at the full core") {
    const auto g = oracles::make_graph({2, 2, 2}, {{1, 2}, {3, 4}, {5, 0}});
    const CoupledExploration run = explore_coupled(g, 3);
    CHECK(run.chain.theta == 0);
    CHECK(run.chain.D2 == 6);
    CHECK(run.chain.D3 == 0);
    CHECK(run.remainder_edges == std::vector<std::uint32_t>{0, 1, 3});
}

TEST_CASE("coupled remainder equals the leaf-removal core") {
    for (std::uint64_t i = 0; i < 40; ++i) {
        const DegreeSequence seq = mixed_sequence(i);
        const PairedGraph g = sample_configuration(seq, 900 + i);
        const CoreResult core = ks_core(g);
        const CoupledExploration run = explore_coupled(g, 7000 + 13 * i);
        REQUIRE(run.remainder_edges == core.core_edges);
        const auto [d2, d3] = oracles::core_composition(core);
        REQUIRE(run.chain.D2 == d2);
        REQUIRE(run.chain.D3 == d3);
        REQUIRE(run.chain.n == g.half_edges());
    }
}

TEST_CASE("full recording is step-by-step and mass strictly drops") {
    for (std::uint64_t i = 0; i < 6; ++i) {
        const DegreeSequence seq = mixed_sequence(2 * i + 1);
        const ChainTrajectory t = explore(seq, 40 + i, RecordMode::full());
        REQUIRE(t.states.size() == t.theta + 1);
        for (std::uint64_t k = 0; k < t.theta; ++k) {
            REQUIRE(t.states[k].k == k);
            REQUIRE(t.states[k].X > 0);
            REQUIRE(t.states[k + 1].S() + 2 <= t.states[k].S());
        }
        REQUIRE(t.final_state().X == 0);
        REQUIRE(t.theta <= t.n / 2);
        REQUIRE(t.D2 % 2 == 0);
        REQUIRE(t.D3 % 3 == 0);
    }
}

TEST_CASE("record mode changes bookkeeping only") {
    const DegreeSequence seq = mixed_sequence(4);
    const ChainTrajectory full = explore(seq, 123, RecordMode::full());
    const ChainTrajectory ends = explore(seq, 123);
    const ChainTrajectory sub = explore(seq, 123, RecordMode::subsample(5));

    CHECK(ends.theta == full.theta);
    CHECK(ends.D2 == full.D2);
    CHECK(ends.D3 == full.D3);
    REQUIRE(ends.states.size() == 2);
    CHECK(ends.initial().X == full.initial().X);

    CHECK(sub.theta == full.theta);
    for (const ChainState& s : sub.states) {
        REQUIRE((s.k % 5 == 0 || s.k == full.theta));
        const ChainState& ref = full.states[s.k];
        REQUIRE(s.X == ref.X);
        REQUIRE(s.Y == ref.Y);
        REQUIRE(s.Z == ref.Z);
    }
    CHECK(sub.final_state().k == full.theta);
}

TEST_CASE("explore is deterministic in the seed") {
    const DegreeSequence seq = mixed_sequence(7);
    const ChainTrajectory a = explore(seq, 77, RecordMode::full());
    const ChainTrajectory b = explore(seq, 77, RecordMode::full());
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t i = 0; i < a.states.size(); ++i) {
        REQUIRE(a.states[i].X == b.states[i].X);
        REQUIRE(a.states[i].Y == b.states[i].Y);
        REQUIRE(a.states[i].Z == b.states[i].Z);
    }
}

TEST_CASE("endpoint recursion on eight half-edges gives the frozen fractions") {
    const auto law = marginal_law({2, 0, 6});
    REQUIRE(law.size() == 3);
    CHECK(law.at({0, 0}) == doctest::Approx(kP00).epsilon(1e-12));
    CHECK(law.at({0, 6}) == doctest::Approx(kP06).epsilon(1e-12));
    CHECK(law.at({2, 0}) == doctest::Approx(kP20).epsilon(1e-12));
    double total = 0.0;
    for (const auto& [key, p] : law) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pairing enumeration reproduces the same core law exactly") {
    const std::vector<std::uint8_t> degrees = {1, 1, 3, 3};
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> counts;
    std::uint64_t total = 0;
    oracles::enumerate_pairings(8, [&](const std::vector<std::uint32_t>& pairing) {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
        for (std::uint32_t h = 0; h < 8; ++h) {
            if (h < pairing[h]) pairs.push_back({h, pairing[h]});
        }
        const PairedGraph g = oracles::make_graph(degrees, pairs);
        const CoreResult core = ks_core(g);
        counts[oracles::core_composition(core)] += 1;
        total += 1;

        // The coupled chain must land on the same core, pairing by pairing.
        for (std::uint64_t seed : {1ULL, 2ULL}) {
            const CoupledExploration run = explore_coupled(g, seed);
            REQUIRE(run.remainder_edges == core.core_edges);
            REQUIRE(std::make_pair(run.chain.D2, run.chain.D3) ==
                    oracles::core_composition(core));
        }
    });
    REQUIRE(total == 105);
    CHECK(counts[{0, 0}] == 54);
    CHECK(counts[{0, 6}] == 15);
    CHECK(counts[{2, 0}] == 36);
}

TEST_CASE("lazy exploration hits the law empirically") {
    const std::uint64_t N = 20000;
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> counts;
    for (std::uint64_t i = 0; i < N; ++i) {
        const ChainTrajectory t = explore(DegreeSequence{2, 0, 2}, 50000 + i);
        counts[{t.D2, t.D3}] += 1;
    }
    REQUIRE(counts.size() == 3);
    const std::array<std::pair<std::pair<std::uint64_t, std::uint64_t>, double>, 3> expected = {{
        {{0, 0}, kP00},
        {{0, 6}, kP06},
        {{2, 0}, kP20},
    }};
    for (const auto& [key, p] : expected) {
        const double freq = static_cast<double>(counts[key]) / static_cast<double>(N);
        const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(N));
        CHECK(std::abs(freq - p) < 4.0 * se);
    }
}

TEST_CASE("the chain is Markov in the composition") {
    // Bucket runs by the state reached after one step, then compare each
    // bucket's endpoint frequencies with the exact law restarted from that
    // composition. Exchangeability of the unmatched pool makes the two agree.
    const std::uint64_t N = 30000;
    std::map<Composition, std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t>> buckets;
    for (std::uint64_t i = 0; i < N; ++i) {
        const ChainTrajectory t = explore(DegreeSequence{2, 0, 2}, 90000 + i, RecordMode::full());
        REQUIRE(t.theta >= 1);
        const ChainState& s1 = t.states[1];
        buckets[{s1.X, s1.Y, s1.Z}][{t.D2, t.D3}] += 1;
    }
    std::uint64_t tested = 0;
    for (const auto& [comp, hist] : buckets) {
        std::uint64_t m = 0;
        for (const auto& [key, c] : hist) m += c;
        if (m < 1000) continue;
        const auto law = marginal_law(comp);
        for (const auto& [key, p] : law) {
            const auto it = hist.find(key);
            const double freq =
                it == hist.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(m);
            const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / static_cast<double>(m));
            REQUIRE(std::abs(freq - p) < 4.5 * se + 1e-9);
        }
        for (const auto& [key, c] : hist) {
            REQUIRE(law.count(key) == 1);  // no outcome outside the exact support
        }
        ++tested;
    }
    CHECK(tested >= 2);
}

TEST_CASE("single-step moments match the exact one-step law") {
    for (const Composition c : {Composition{2, 0, 6}, Composition{5, 4, 6}, Composition{3, 8, 3}}) {
        const oracles::ExactStepMoments exact = oracles::exact_step_moments(c);
        const StepMoments mc = step_moments(c[0], c[1], c[2], 120000, 314159);
        for (int i = 0; i < 3; ++i) {
            CHECK(std::abs(mc.mean[i] - exact.mean[i]) < 4.0 * mc.mean_se[i] + 1e-9);
            CHECK(std::abs(mc.second[i] - exact.second[i]) < 4.0 * mc.second_se[i] + 1e-9);
        }
    }
}

TEST_CASE("one-step moments approach the drift and diffusion polynomials") {
    // The exact one-step law at a large composition must match phi and psi up
    // to the O(1/S) sampling-without-replacement correction. This pins every
    // polynomial coefficient: a wrong term would show up at O(1).
    const std::uint64_t S = 1000000;
    const std::array<std::array<double, 3>, 5> points = {{
        {0.2, 0.3, 0.5},
        {0.6, 0.2, 0.2},
        {0.05, 0.15, 0.8},
        {0.3, 0.6, 0.1},
        {0.9, 0.05, 0.05},
    }};
    for (const auto& p : points) {
        const Composition c = composition_at(p[0], p[1], p[2], S);
        const oracles::ExactStepMoments exact = oracles::exact_step_moments(c);
        const Vec3 drift = phi({static_cast<double>(c[0]), static_cast<double>(c[1]),
                                static_cast<double>(c[2])});
        const Vec3 diff = psi({static_cast<double>(c[0]), static_cast<double>(c[1]),
                               static_cast<double>(c[2])});
        for (int i = 0; i < 3; ++i) {
            CHECK(std::abs(exact.mean[i] - drift[i]) < 500.0 / static_cast<double>(S));
            CHECK(std::abs(exact.second[i] - diff[i]) < 500.0 / static_cast<double>(S));
        }
    }
}

TEST_CASE("a nearly pure degree-2 state moves deterministically") {
    // From (1, Y, 0) the single step always matches the leaf into the cycle
    // soup and reclassifies one neighbor half-edge: delta = (0, -4, 0).
    const oracles::ExactStepMoments exact = oracles::exact_step_moments({1, 1000, 0});
    CHECK(exact.mean[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(exact.mean[1] == doctest::Approx(-4.0).epsilon(1e-15));
    CHECK(exact.second[1] == doctest::Approx(16.0).epsilon(1e-15));

    const StepMoments mc = step_moments(1, 1000000, 0, 2000, 99);
    CHECK(mc.mean[0] == 0.0);
    CHECK(mc.mean[1] == -4.0);
    CHECK(mc.mean[2] == 0.0);
    CHECK(mc.second[1] == 16.0);
    CHECK(mc.mean_se[1] == 0.0);
    CHECK(mc.trials == 2000);
}

TEST_CASE("step moments are deterministic in the seed") {
    const StepMoments a = step_moments(4, 10, 9, 5000, 2024);
    const StepMoments b = step_moments(4, 10, 9, 5000, 2024);
    CHECK(a.mean == b.mean);
    CHECK(a.second == b.second);
    CHECK(a.mean_se == b.mean_se);
}

TEST_CASE("step moments reject states that cannot complete a step") {
    CHECK_THROWS_AS(step_moments(0, 4, 3, 10, 1), std::invalid_argument);   // no leaf
    CHECK_THROWS_AS(step_moments(1, 3, 0, 10, 1), std::invalid_argument);   // odd Y
    CHECK_THROWS_AS(step_moments(1, 0, 4, 10, 1), std::invalid_argument);   // Z not 3k
    CHECK_THROWS_AS(step_moments(1, 0, 0, 10, 1), std::invalid_argument);   // S = 1
    CHECK_THROWS_AS(step_moments(1, 2, 0, 10, 1), std::invalid_argument);   // S = 3, Y > 0
    CHECK_THROWS_AS(step_moments(2, 0, 3, 10, 1), std::invalid_argument);   // S = 5, Z > 0
    CHECK_THROWS_AS(step_moments(2, 0, 6, 0, 1), std::invalid_argument);    // no trials
    CHECK(step_moments(3, 2, 0, 100, 1).trials == 100);  // S = 5 without degree-3 mass is fine
    CHECK(step_moments(5, 0, 0, 100, 1).trials == 100);  // odd all-leaf pool is fine
}
