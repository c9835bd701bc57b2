#include "kslab/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>

#include "kslab/rng.hpp"

namespace kslab {

namespace {

constexpr std::uint32_t kNoPos = std::numeric_limits<std::uint32_t>::max();

void build_layout(PairedGraph& g) {
    const std::uint64_t nv = g.degree.size();
    g.first_edge.resize(nv);
    std::uint64_t next = 0;
    for (std::uint64_t v = 0; v < nv; ++v) {
        g.first_edge[v] = static_cast<std::uint32_t>(next);
        next += g.degree[v];
    }
    g.owner.resize(next);
    for (std::uint64_t v = 0; v < nv; ++v) {
        for (std::uint32_t i = 0; i < g.degree[v]; ++i) {
            g.owner[g.first_edge[v] + i] = static_cast<std::uint32_t>(v);
        }
    }
}

}  // namespace

void PairedGraph::validate() const {
    const std::uint64_t n = pairing.size();
    if (n == 0) throw std::invalid_argument("pairing: graph has no half-edges");
    if (n % 2 != 0) throw std::invalid_argument("pairing: odd number of half-edges");
    if (owner.size() != n) throw std::invalid_argument("pairing: owner array size mismatch");
    std::uint64_t total = 0;
    for (std::uint64_t v = 0; v < degree.size(); ++v) {
        if (degree[v] < 1 || degree[v] > 3) {
            throw std::invalid_argument("pairing: vertex degree outside {1,2,3}");
        }
        if (first_edge[v] != total) throw std::invalid_argument("pairing: layout gap");
        total += degree[v];
    }
    if (total != n) throw std::invalid_argument("pairing: degree sum != half-edge count");
    for (std::uint64_t h = 0; h < n; ++h) {
        const std::uint32_t p = pairing[h];
        if (p >= n) throw std::invalid_argument("pairing: partner id out of range");
        if (p == h) throw std::invalid_argument("pairing: half-edge matched to itself");
        if (pairing[p] != h) throw std::invalid_argument("pairing: not an involution");
    }
}

PairedGraph sample_configuration(const DegreeSequence& seq, std::uint64_t seed) {
    seq.validate();
    const std::uint64_t n = seq.half_edges();

    PairedGraph g;
    g.degree.reserve(seq.vertices());
    g.degree.insert(g.degree.end(), seq.d1, 1);
    g.degree.insert(g.degree.end(), seq.d2, 2);
    g.degree.insert(g.degree.end(), seq.d3, 3);
    build_layout(g);

    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    Xoshiro256PlusPlus rng(seed);
    for (std::uint64_t i = n - 1; i > 0; --i) {
        const std::uint64_t j = rng.uniform_below(i + 1);
        std::swap(perm[i], perm[j]);
    }

    g.pairing.resize(n);
    for (std::uint64_t i = 0; i < n; i += 2) {
        g.pairing[perm[i]] = perm[i + 1];
        g.pairing[perm[i + 1]] = perm[i];
    }
    return g;
}

DegreeSequence sequence_from_proportions(double p1, double p2, double p3, std::uint64_t n) {
    if (!(p1 >= 0.0) || !(p2 >= 0.0) || !(p3 >= 0.0) || std::abs(p1 + p2 + p3 - 1.0) > 1e-9) {
        throw std::invalid_argument("sequence_from_proportions: not a probability vector");
    }
    if (n == 0 || n % 2 != 0) {
        throw std::invalid_argument("sequence_from_proportions: n must be positive and even");
    }
    const std::uint64_t d2 = static_cast<std::uint64_t>(std::llround(p2 * n / 2.0));
    const std::uint64_t d3 = static_cast<std::uint64_t>(std::llround(p3 * n / 3.0));
    if (2 * d2 + 3 * d3 > n) {
        throw std::invalid_argument("sequence_from_proportions: n too small for these proportions");
    }
    DegreeSequence seq{n - 2 * d2 - 3 * d3, d2, d3};
    seq.validate();
    return seq;
}

namespace {

// Exact set of current degree-1 vertices with O(1) uniform draw and removal.
class LeafPool {
  public:
    explicit LeafPool(std::uint64_t n_vertices) : pos_(n_vertices, kNoPos) {}

    bool empty() const { return members_.empty(); }
    std::uint64_t size() const { return members_.size(); }
    std::uint32_t at(std::uint64_t i) const { return members_[i]; }

    void insert(std::uint32_t v) {
        pos_[v] = static_cast<std::uint32_t>(members_.size());
        members_.push_back(v);
    }

    void erase(std::uint32_t v) {
        const std::uint32_t i = pos_[v];
        members_[i] = members_.back();
        pos_[members_[i]] = i;
        members_.pop_back();
        pos_[v] = kNoPos;
    }

    bool contains(std::uint32_t v) const { return pos_[v] != kNoPos; }

  private:
    std::vector<std::uint32_t> members_;
    std::vector<std::uint32_t> pos_;
};

}  // namespace

CoreResult ks_core(const PairedGraph& graph, RemovalPolicy policy) {
    graph.validate();
    const std::uint64_t nv = graph.vertices();
    const std::uint64_t nh = graph.half_edges();

    CoreResult result;
    result.core_degree = graph.degree;
    std::vector<std::uint8_t>& deg = result.core_degree;
    std::vector<bool> alive(nh, true);

    const bool uniform = policy.kind == RemovalPolicy::Kind::uniform_random;
    Xoshiro256PlusPlus rng(policy.seed);

    // first_index keeps a lazily-cleaned min-heap of leaf candidates; degrees
    // only decrease, so each vertex enters at most once and a popped entry is
    // valid exactly when its degree is still 1.
    std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> heap;
    LeafPool pool(uniform ? nv : 0);

    auto on_became_leaf = [&](std::uint32_t v) {
        if (uniform) {
            pool.insert(v);
        } else {
            heap.push(v);
        }
    };
    auto on_left_leaf = [&](std::uint32_t v) {
        if (uniform) pool.erase(v);
    };

    for (std::uint64_t v = 0; v < nv; ++v) {
        if (deg[v] == 1) on_became_leaf(static_cast<std::uint32_t>(v));
    }

    auto next_leaf = [&]() -> std::int64_t {
        if (uniform) {
            if (pool.empty()) return -1;
            return pool.at(rng.uniform_below(pool.size()));
        }
        while (!heap.empty()) {
            const std::uint32_t v = heap.top();
            if (deg[v] == 1) return v;
            heap.pop();
        }
        return -1;
    };

    auto live_half_edge_of = [&](std::uint32_t v) {
        for (std::uint32_t i = 0; i < graph.degree[v]; ++i) {
            const std::uint32_t h = graph.first_edge[v] + i;
            if (alive[h]) return h;
        }
        throw std::logic_error("ks_core: leaf has no live half-edge");
    };

    auto drop_degree = [&](std::uint32_t v) {
        if (deg[v] == 1) on_left_leaf(v);
        --deg[v];
        if (deg[v] == 1) on_became_leaf(v);
    };

    while (true) {
        const std::int64_t leaf = next_leaf();
        if (leaf < 0) break;
        const std::uint32_t l = static_cast<std::uint32_t>(leaf);
        const std::uint32_t h = live_half_edge_of(l);
        const std::uint32_t neighbor = graph.owner[graph.pairing[h]];

        result.independent_set.push_back(l);
        result.removal_trace.emplace_back(l, neighbor);

        // Delete every edge at the neighbor (this covers the leaf edge too,
        // and removes the leaf from the pool via its degree hitting 0).
        for (std::uint32_t i = 0; i < graph.degree[neighbor]; ++i) {
            const std::uint32_t g = graph.first_edge[neighbor] + i;
            if (!alive[g]) continue;
            const std::uint32_t p = graph.pairing[g];
            alive[g] = false;
            alive[p] = false;
            drop_degree(graph.owner[g]);
            drop_degree(graph.owner[p]);
        }
    }

    for (std::uint32_t h = 0; h < nh; ++h) {
        if (alive[h] && h < graph.pairing[h]) result.core_edges.push_back(h);
    }
    result.core_size = 2 * result.core_edges.size();
    return result;
}

DegreeHistogram degree_histogram(const PairedGraph& graph) {
    DegreeHistogram hist;
    for (const std::uint8_t d : graph.degree) {
        hist.count[d] += 1;
        hist.half_edges[d] += d;
    }
    hist.total_half_edges = graph.half_edges();
    return hist;
}

DegreeHistogram degree_histogram(const CoreResult& core) {
    DegreeHistogram hist;
    for (const std::uint8_t d : core.core_degree) {
        if (d == 0) continue;
        hist.count[d] += 1;
        hist.half_edges[d] += d;
    }
    hist.total_half_edges = core.core_size;
    return hist;
}

bool is_independent_set(const PairedGraph& graph, const std::vector<std::uint32_t>& vertex_set) {
    std::vector<bool> in_set(graph.vertices(), false);
    for (const std::uint32_t v : vertex_set) in_set[v] = true;
    for (std::uint64_t h = 0; h < graph.half_edges(); ++h) {
        if (in_set[graph.owner[h]] && in_set[graph.owner[graph.pairing[h]]]) return false;
    }
    return true;
}

void write_edge_list(std::ostream& out, const PairedGraph& graph) {
    out << graph.vertices() << ' ' << graph.half_edges() << '\n';
    for (std::uint32_t h = 0; h < graph.half_edges(); ++h) {
        if (h < graph.pairing[h]) {
            out << graph.owner[h] << ' ' << graph.owner[graph.pairing[h]] << '\n';
        }
    }
}

void write_core_edge_list(std::ostream& out, const PairedGraph& graph, const CoreResult& core) {
    // Relabel the surviving vertices compactly (increasing original id) so the
    // file is itself a loadable graph: read_edge_list requires every id below
    // the header count to carry at least one edge.
    std::vector<std::uint32_t> ids;
    ids.reserve(core.core_edges.size() * 2);
    for (const std::uint32_t h : core.core_edges) {
        ids.push_back(graph.owner[h]);
        ids.push_back(graph.owner[graph.pairing[h]]);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    const auto new_id = [&ids](std::uint32_t v) {
        return static_cast<std::uint64_t>(std::lower_bound(ids.begin(), ids.end(), v) -
                                          ids.begin());
    };
    out << ids.size() << ' ' << core.core_size << '\n';
    for (const std::uint32_t h : core.core_edges) {
        out << new_id(graph.owner[h]) << ' ' << new_id(graph.owner[graph.pairing[h]]) << '\n';
    }
}

PairedGraph read_edge_list(std::istream& in) {
    std::uint64_t nv = 0;
    std::uint64_t nh = 0;
    if (!(in >> nv >> nh)) throw std::invalid_argument("edge list: missing header");
    if (nh % 2 != 0) throw std::invalid_argument("edge list: odd half-edge count");

    const std::uint64_t n_edges = nh / 2;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> edges;
    edges.reserve(n_edges);
    std::vector<std::uint8_t> degree(nv, 0);
    for (std::uint64_t e = 0; e < n_edges; ++e) {
        std::uint64_t u = 0;
        std::uint64_t v = 0;
        if (!(in >> u >> v)) throw std::invalid_argument("edge list: truncated edge lines");
        if (u >= nv || v >= nv) throw std::invalid_argument("edge list: vertex id out of range");
        if (degree[u] >= 3 || degree[v] >= 3 || (u == v && degree[u] >= 2)) {
            throw std::invalid_argument("edge list: vertex degree exceeds 3");
        }
        ++degree[u];
        ++degree[v];
        edges.emplace_back(u, v);
    }
    for (std::uint64_t v = 0; v < nv; ++v) {
        if (degree[v] == 0) throw std::invalid_argument("edge list: isolated vertex");
    }

    PairedGraph g;
    g.degree = std::move(degree);
    build_layout(g);
    g.pairing.resize(nh);
    std::vector<std::uint32_t> cursor(nv, 0);
    for (const auto& [u, v] : edges) {
        const std::uint32_t hu = g.first_edge[u] + cursor[u]++;
        const std::uint32_t hv = g.first_edge[v] + cursor[v]++;
        g.pairing[hu] = hv;
        g.pairing[hv] = hu;
    }
    return g;
}

}  // namespace kslab
