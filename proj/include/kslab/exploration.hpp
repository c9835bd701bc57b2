#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "kslab/core_model.hpp"
#include "kslab/degree_sequence.hpp"

namespace kslab {

// Which chain states explore() keeps. Endpoints stores k = 0 and the final
// state; Subsample stores every stride-th step plus both endpoints; Full
// stores every step.
struct RecordMode {
    enum class Kind { endpoints, full, subsample };
    Kind kind = Kind::endpoints;
    std::uint64_t stride = 1;

    static RecordMode endpoints() { return {Kind::endpoints, 1}; }
    static RecordMode full() { return {Kind::full, 1}; }
    static RecordMode subsample(std::uint64_t stride) { return {Kind::subsample, stride}; }
};

// Counts of half-edges sitting on unmatched-degree-1 / 2 / 3 vertices after k
// removal steps of the leaf-driven pairing process.
struct ChainState {
    std::uint64_t k = 0;
    std::uint64_t X = 0;
    std::uint64_t Y = 0;
    std::uint64_t Z = 0;

    std::uint64_t S() const { return X + Y + Z; }
};

struct ChainTrajectory {
    std::vector<ChainState> states;  // per RecordMode, always ends at k = theta
    std::uint64_t n = 0;             // initial half-edge count
    std::uint64_t theta = 0;         // first step index with X = 0
    std::uint64_t D2 = 0;            // Y at theta
    std::uint64_t D3 = 0;            // Z at theta

    const ChainState& initial() const { return states.front(); }
    const ChainState& final_state() const { return states.back(); }
};

// Runs the leaf-removal exploration on a fresh lazily-paired configuration
// with the given degree sequence, until no degree-1 vertex remains. Each step
// pairs the half-edge of a uniformly chosen leaf, then pairs away every
// remaining half-edge of the matched neighbor; the neighbor's partners are
// drawn uniformly from the unmatched half-edges, so the chain is Markov.
ChainTrajectory explore(const DegreeSequence& seq, std::uint64_t seed,
                        RecordMode mode = RecordMode::endpoints());

// Same process on an already-sampled pairing: partners come from the graph's
// matching instead of fresh draws, only the leaf choice is random. The
// leftover unmatched edges then form exactly the Karp-Sipser core.
struct CoupledExploration {
    ChainTrajectory chain;
    std::vector<std::uint32_t> remainder_edges;  // canonical half-edge ids, increasing
};

CoupledExploration explore_coupled(const PairedGraph& graph, std::uint64_t seed,
                                   RecordMode mode = RecordMode::endpoints());

// Monte-Carlo one-step increment moments of (X, Y, Z) from a fixed state:
// mean[i] estimates E[delta_i] and second[i] estimates E[delta_i^2], each with
// its standard error. X must be positive and (Y, Z) divisible by (2, 3).
struct StepMoments {
    std::array<double, 3> mean{};
    std::array<double, 3> mean_se{};
    std::array<double, 3> second{};
    std::array<double, 3> second_se{};
    std::uint64_t trials = 0;
};

StepMoments step_moments(std::uint64_t X, std::uint64_t Y, std::uint64_t Z,
                         std::uint64_t trials, std::uint64_t seed);

}  // namespace kslab
