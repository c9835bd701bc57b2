#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "kslab/core_model.hpp"
#include "kslab/degree_sequence.hpp"

// Reference oracles for the exploration and core tests. Everything here is
// deliberately independent of the library's engine: graphs are built by hand,
// matchings are enumerated by brute force, and the one-step law is derived by
// enumerating the abstract pool dynamics at composition level.

namespace oracles {

// Builds a PairedGraph from explicit per-vertex degrees and explicit
// half-edge pairs (each pair given once, in any order).
inline kslab::PairedGraph make_graph(const std::vector<std::uint8_t>& degrees,
                                     const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs) {
    kslab::PairedGraph g;
    g.degree = degrees;
    std::uint32_t next = 0;
    for (std::uint8_t d : degrees) {
        g.first_edge.push_back(next);
        for (std::uint8_t i = 0; i < d; ++i) {
            g.owner.push_back(static_cast<std::uint32_t>(g.first_edge.size() - 1));
        }
        next += d;
    }
    g.pairing.assign(next, next);
    for (auto [a, b] : pairs) {
        g.pairing[a] = b;
        g.pairing[b] = a;
    }
    g.validate();
    return g;
}

// Calls visit(pairing) for every perfect matching of {0, ..., n_half-1},
// where pairing[h] is h's partner. n_half must be small and even.
inline void enumerate_pairings(std::uint32_t n_half,
                               const std::function<void(const std::vector<std::uint32_t>&)>& visit) {
    if (n_half % 2 != 0) throw std::invalid_argument("enumerate_pairings: odd half-edge count");
    std::vector<std::uint32_t> pairing(n_half, n_half);
    std::function<void()> rec = [&]() {
        std::uint32_t first = n_half;
        for (std::uint32_t h = 0; h < n_half; ++h) {
            if (pairing[h] == n_half) {
                first = h;
                break;
            }
        }
        if (first == n_half) {
            visit(pairing);
            return;
        }
        for (std::uint32_t j = first + 1; j < n_half; ++j) {
            if (pairing[j] != n_half) continue;
            pairing[first] = j;
            pairing[j] = first;
            rec();
            pairing[first] = n_half;
            pairing[j] = n_half;
        }
    };
    rec();
}

// Half-edge counts (D2, D3) on degree-2 and degree-3 vertices of a core.
inline std::pair<std::uint64_t, std::uint64_t> core_composition(const kslab::CoreResult& core) {
    std::uint64_t d2 = 0;
    std::uint64_t d3 = 0;
    for (std::uint8_t d : core.core_degree) {
        if (d == 2) d2 += 2;
        if (d == 3) d3 += 3;
    }
    return {d2, d3};
}

using Composition = std::array<std::uint64_t, 3>;  // (X, Y, Z) half-edge counts

// Exact law of the composition after one removal step, derived by
// enumerating the abstract pool dynamics: erase the leaf's half-edge, draw
// its partner, then reveal the neighbor's remaining half-edges one by one,
// each reveal reclassifying the hit vertex's siblings (2 -> 1 moves one
// half-edge from Y to X, 3 -> 2 moves two from Z to Y). `pend` counts the
// neighbor's own still-unrevealed half-edges, which stay in the pool and can
// be hit (a self-loop at the neighbor).
inline void enumerate_clearing(std::uint64_t a1, std::uint64_t a2, std::uint64_t a3,
                               std::uint64_t pend, double prob,
                               std::map<Composition, double>& out) {
    if (pend == 0) {
        out[{a1, a2, a3}] += prob;
        return;
    }
    pend -= 1;  // the engine erases one pending half-edge, then draws its partner
    const double total = static_cast<double>(a1 + a2 + a3 + pend);
    if (total < 1.0) throw std::logic_error("enumerate_clearing: stranded draw");
    if (pend > 0) enumerate_clearing(a1, a2, a3, pend - 1, prob * static_cast<double>(pend) / total, out);
    if (a1 > 0) enumerate_clearing(a1 - 1, a2, a3, pend, prob * static_cast<double>(a1) / total, out);
    if (a2 > 0) enumerate_clearing(a1 + 1, a2 - 2, a3, pend, prob * static_cast<double>(a2) / total, out);
    if (a3 > 0) enumerate_clearing(a1, a2 + 2, a3 - 3, pend, prob * static_cast<double>(a3) / total, out);
}

inline std::map<Composition, double> step_law(const Composition& c) {
    const auto [X, Y, Z] = c;
    if (X == 0) throw std::invalid_argument("step_law: no leaf");
    std::map<Composition, double> out;
    const double total = static_cast<double>(X - 1 + Y + Z);
    if (X > 1) enumerate_clearing(X - 2, Y, Z, 0, static_cast<double>(X - 1) / total, out);
    if (Y > 0) enumerate_clearing(X - 1, Y - 2, Z, 1, static_cast<double>(Y) / total, out);
    if (Z > 0) enumerate_clearing(X - 1, Y, Z - 3, 2, static_cast<double>(Z) / total, out);
    return out;
}

using EndpointKey = std::array<std::uint64_t, 3>;  // (theta, D2, D3)

// Exact law of (theta, D2, D3) for the exploration chain started at `c`,
// by recursion over step_law with memoization on the composition.
inline const std::map<EndpointKey, double>& endpoint_law(const Composition& c) {
    static std::map<Composition, std::map<EndpointKey, double>> memo;
    auto it = memo.find(c);
    if (it != memo.end()) return it->second;
    std::map<EndpointKey, double> law;
    if (c[0] == 0) {
        law[{0, c[1], c[2]}] = 1.0;
    } else {
        for (const auto& [next, p] : step_law(c)) {
            for (const auto& [key, q] : endpoint_law(next)) {
                law[{key[0] + 1, key[1], key[2]}] += p * q;
            }
        }
    }
    return memo.emplace(c, std::move(law)).first->second;
}

// One-step increment moments E[delta], E[delta^2] computed exactly from
// step_law.
struct ExactStepMoments {
    std::array<double, 3> mean{};
    std::array<double, 3> second{};
};

inline ExactStepMoments exact_step_moments(const Composition& c) {
    ExactStepMoments m;
    for (const auto& [next, p] : step_law(c)) {
        for (int i = 0; i < 3; ++i) {
            const double d = static_cast<double>(next[i]) - static_cast<double>(c[i]);
            m.mean[i] += p * d;
            m.second[i] += p * d * d;
        }
    }
    return m;
}

}  // namespace oracles
