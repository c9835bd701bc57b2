#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "kslab/degree_sequence.hpp"

namespace kslab {

// A configuration-model multigraph: per-vertex degrees in {1,2,3} plus a
// perfect matching ("pairing") on half-edge identifiers. Half-edges are
// numbered consecutively vertex by vertex (CSR layout): vertex v owns the
// ids first_half_edge(v) .. first_half_edge(v) + degree(v) - 1. Self-loops
// and multi-edges are allowed.
struct PairedGraph {
    std::vector<std::uint8_t> degree;       // per vertex, values in {1,2,3}
    std::vector<std::uint32_t> first_edge;  // per vertex: first half-edge id
    std::vector<std::uint32_t> owner;       // per half-edge: owning vertex
    std::vector<std::uint32_t> pairing;     // per half-edge: matched partner

    std::uint64_t vertices() const { return degree.size(); }
    std::uint64_t half_edges() const { return pairing.size(); }

    // Checks the pairing is a fixed-point-free involution consistent with
    // the degree layout; throws std::invalid_argument otherwise.
    void validate() const;
};

// Uniformly random perfect matching on the half-edges of `seq` (random
// shuffle, then pair consecutive entries). Identical seed gives an identical
// pairing. Vertices are laid out degree-1 block first, then degree-2, then
// degree-3, matching the exploration module's implicit layout.
PairedGraph sample_configuration(const DegreeSequence& seq, std::uint64_t seed);

// Rounds half-edge proportions (p1, p2, p3) to a valid DegreeSequence with
// exactly n half-edges (n even); the degree-1 count absorbs the rounding
// remainder of the other two classes.
DegreeSequence sequence_from_proportions(double p1, double p2, double p3, std::uint64_t n);

// Which current leaf the core extraction removes next.
struct RemovalPolicy {
    enum class Kind { first_index, uniform_random };
    Kind kind = Kind::first_index;
    std::uint64_t seed = 0;

    static RemovalPolicy first_index() { return {Kind::first_index, 0}; }
    static RemovalPolicy uniform_random(std::uint64_t seed) {
        return {Kind::uniform_random, seed};
    }
};

// Result of exhaustive leaf removal. The core is the left-over sub-multigraph
// with no degree-1 vertices; its edges are stored canonically as the smaller
// half-edge id of each retained pair, in increasing order, so cores from
// different removal schedules compare by vector equality.
struct CoreResult {
    std::vector<std::uint8_t> core_degree;  // induced degree, 0 = removed
    std::vector<std::uint32_t> core_edges;  // canonical retained half-edge ids
    std::vector<std::uint32_t> independent_set;  // removed leaves, in removal order
    std::vector<std::pair<std::uint32_t, std::uint32_t>> removal_trace;  // (leaf, neighbor)
    std::uint64_t core_size = 0;  // half-edge count = 2 x retained edges

    bool empty() const { return core_edges.empty(); }
};

// Karp-Sipser core: repeatedly pick a degree-1 vertex per `policy`, delete it
// together with its unique neighbor and all edges at that neighbor, until no
// degree-1 vertex remains. The selected leaves form an independent set of the
// original multigraph, and the core does not depend on the policy.
CoreResult ks_core(const PairedGraph& graph, RemovalPolicy policy = RemovalPolicy::first_index());

// Vertex counts and half-edge totals by degree (index = degree, 0..3).
struct DegreeHistogram {
    std::uint64_t count[4] = {0, 0, 0, 0};
    std::uint64_t half_edges[4] = {0, 0, 0, 0};
    std::uint64_t total_half_edges = 0;
};

DegreeHistogram degree_histogram(const PairedGraph& graph);
DegreeHistogram degree_histogram(const CoreResult& core);

// True if no edge of `graph` joins two vertices of `vertex_set`.
bool is_independent_set(const PairedGraph& graph, const std::vector<std::uint32_t>& vertex_set);

// Edge-list text format: header "n_vertices n_halfedges", then one "u v" line
// per edge (0-indexed; a loop is written "u u").
void write_edge_list(std::ostream& out, const PairedGraph& graph);
// Writes only the core's edges, with surviving vertices relabeled 0..k-1 in
// increasing original-id order so the output is itself a loadable edge list.
void write_core_edge_list(std::ostream& out, const PairedGraph& graph, const CoreResult& core);
PairedGraph read_edge_list(std::istream& in);

}  // namespace kslab
