#include "kslab/exploration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "kslab/rng.hpp"

namespace kslab {

namespace {

constexpr std::uint32_t kNoPos = std::numeric_limits<std::uint32_t>::max();

// Pairing process state over half-edges laid out degree-1 block, degree-2
// block, degree-3 block. Partners either come from a committed PairedGraph or
// are drawn uniformly from the unmatched pool (deferred-decision pairing).
// All containers are sized once; swap-remove pools use logical sizes so a
// step can be undone from a write-ahead log of overwritten cells.
class ExplorationEngine {
  public:
    void init_from_sequence(const DegreeSequence& seq) {
        committed_ = nullptr;
        d1_ = seq.d1;
        d2_ = seq.d2;
        d3_ = seq.d3;
        n_half_ = seq.half_edges();
        n_vert_ = seq.vertices();
        init_state();
    }

    void init_from_graph(const PairedGraph& graph) {
        committed_ = &graph;
        DegreeHistogram hist = degree_histogram(graph);
        d1_ = hist.count[1];
        d2_ = hist.count[2];
        d3_ = hist.count[3];
        n_half_ = graph.half_edges();
        n_vert_ = graph.vertices();
        init_state();
    }

    std::uint64_t X() const { return cnt_[1]; }
    std::uint64_t Y() const { return 2 * cnt_[2]; }
    std::uint64_t Z() const { return 3 * cnt_[3]; }
    std::uint64_t steps() const { return steps_; }
    bool has_leaf() const { return leaf_size_ > 0; }

    ChainState state() const { return {steps_, X(), Y(), Z()}; }

    // One removal step: match a uniformly chosen leaf's half-edge, then match
    // away every remaining half-edge of the neighbor it hit.
    void step(Xoshiro256PlusPlus& rng, bool record_undo) {
        if (leaf_size_ == 0) throw std::logic_error("exploration step: no leaf available");
        recording_ = record_undo;
        if (recording_) {
            log_.clear();
            saved_pool_size_ = pool_size_;
            saved_leaf_size_ = leaf_size_;
            saved_cnt_ = cnt_;
        }

        const std::uint32_t leaf = leaves_[rng.uniform_below(leaf_size_)];
        const std::uint32_t h = unmatched_half_edge_of(leaf);
        pool_erase(h);
        drop_unmatched_degree(leaf);

        const std::uint32_t p = draw_partner(rng, h);
        pool_erase(p);
        const std::uint32_t v = owner(p);
        drop_unmatched_degree(v);

        while (unmatched_degree_at(v) > 0) {
            const std::uint32_t g = unmatched_half_edge_of(v);
            pool_erase(g);
            drop_unmatched_degree(v);
            const std::uint32_t q = draw_partner(rng, g);
            pool_erase(q);
            drop_unmatched_degree(owner(q));
        }
        ++steps_;
    }

    // Reverts the most recent step; valid only if it recorded an undo log.
    void undo() {
        if (!recording_) throw std::logic_error("exploration undo: no log recorded");
        for (auto it = log_.rbegin(); it != log_.rend(); ++it) {
            switch (it->kind) {
                case CellKind::pool: pool_[it->index] = it->value; break;
                case CellKind::pool_pos: pos_[it->index] = it->value; break;
                case CellKind::leaf: leaves_[it->index] = it->value; break;
                case CellKind::leaf_pos: leaf_pos_[it->index] = it->value; break;
                case CellKind::unmatched_degree:
                    udeg_[it->index] = static_cast<std::uint8_t>(it->value);
                    break;
            }
        }
        pool_size_ = saved_pool_size_;
        leaf_size_ = saved_leaf_size_;
        cnt_ = saved_cnt_;
        --steps_;
        recording_ = false;
    }

    // Unmatched half-edges as canonical committed-graph edges, increasing.
    std::vector<std::uint32_t> remainder_edges() const {
        if (committed_ == nullptr) {
            throw std::logic_error("remainder_edges: no committed pairing");
        }
        std::vector<std::uint32_t> edges;
        for (std::uint32_t h = 0; h < n_half_; ++h) {
            if (pos_[h] != kNoPos && h < committed_->pairing[h]) edges.push_back(h);
        }
        return edges;
    }

  private:
    enum class CellKind : std::uint8_t { pool, pool_pos, leaf, leaf_pos, unmatched_degree };
    struct LogCell {
        CellKind kind;
        std::uint32_t index;
        std::uint32_t value;
    };

    void init_state() {
        pool_.resize(n_half_);
        std::iota(pool_.begin(), pool_.end(), 0u);
        pos_.resize(n_half_);
        std::iota(pos_.begin(), pos_.end(), 0u);
        pool_size_ = n_half_;

        udeg_.assign(n_vert_, 0);
        for (std::uint64_t v = 0; v < n_vert_; ++v) {
            udeg_[v] = static_cast<std::uint8_t>(vertex_degree(static_cast<std::uint32_t>(v)));
        }
        leaves_.resize(n_vert_);
        leaf_pos_.assign(n_vert_, kNoPos);
        leaf_size_ = d1_;
        for (std::uint64_t v = 0; v < d1_; ++v) {
            leaves_[v] = static_cast<std::uint32_t>(v);
            leaf_pos_[v] = static_cast<std::uint32_t>(v);
        }
        cnt_ = {0, d1_, d2_, d3_};
        steps_ = 0;
        recording_ = false;
    }

    std::uint32_t owner(std::uint32_t h) const {
        if (committed_ != nullptr) return committed_->owner[h];
        if (h < d1_) return h;
        const std::uint64_t after1 = h - d1_;
        if (after1 < 2 * d2_) return static_cast<std::uint32_t>(d1_ + after1 / 2);
        return static_cast<std::uint32_t>(d1_ + d2_ + (after1 - 2 * d2_) / 3);
    }

    std::uint32_t vertex_first(std::uint32_t v) const {
        if (committed_ != nullptr) return committed_->first_edge[v];
        if (v < d1_) return v;
        if (v < d1_ + d2_) return static_cast<std::uint32_t>(d1_ + 2 * (v - d1_));
        return static_cast<std::uint32_t>(d1_ + 2 * d2_ + 3 * (v - d1_ - d2_));
    }

    std::uint32_t vertex_degree(std::uint32_t v) const {
        if (committed_ != nullptr) return committed_->degree[v];
        if (v < d1_) return 1;
        return v < d1_ + d2_ ? 2 : 3;
    }

    std::uint8_t unmatched_degree_at(std::uint32_t v) const { return udeg_[v]; }

    std::uint32_t unmatched_half_edge_of(std::uint32_t v) const {
        const std::uint32_t first = vertex_first(v);
        for (std::uint32_t i = 0; i < vertex_degree(v); ++i) {
            if (pos_[first + i] != kNoPos) return first + i;
        }
        throw std::logic_error("exploration: vertex has no unmatched half-edge");
    }

    std::uint32_t draw_partner(Xoshiro256PlusPlus& rng, std::uint32_t h) {
        if (committed_ != nullptr) return committed_->pairing[h];
        return pool_[rng.uniform_below(pool_size_)];
    }

    void log_cell(CellKind kind, std::uint32_t index, std::uint32_t value) {
        if (recording_) log_.push_back({kind, index, value});
    }

    void pool_erase(std::uint32_t h) {
        const std::uint32_t i = pos_[h];
        const std::uint32_t last = pool_[pool_size_ - 1];
        log_cell(CellKind::pool, i, pool_[i]);
        pool_[i] = last;
        log_cell(CellKind::pool_pos, last, pos_[last]);
        pos_[last] = i;
        log_cell(CellKind::pool_pos, h, pos_[h]);
        pos_[h] = kNoPos;
        --pool_size_;
    }

    void leaf_insert(std::uint32_t v) {
        log_cell(CellKind::leaf, static_cast<std::uint32_t>(leaf_size_), leaves_[leaf_size_]);
        leaves_[leaf_size_] = v;
        log_cell(CellKind::leaf_pos, v, leaf_pos_[v]);
        leaf_pos_[v] = static_cast<std::uint32_t>(leaf_size_);
        ++leaf_size_;
    }

    void leaf_erase(std::uint32_t v) {
        const std::uint32_t i = leaf_pos_[v];
        const std::uint32_t last = leaves_[leaf_size_ - 1];
        log_cell(CellKind::leaf, i, leaves_[i]);
        leaves_[i] = last;
        log_cell(CellKind::leaf_pos, last, leaf_pos_[last]);
        leaf_pos_[last] = i;
        log_cell(CellKind::leaf_pos, v, leaf_pos_[v]);
        leaf_pos_[v] = kNoPos;
        --leaf_size_;
    }

    void drop_unmatched_degree(std::uint32_t v) {
        const std::uint8_t old = udeg_[v];
        if (old == 1) leaf_erase(v);
        log_cell(CellKind::unmatched_degree, v, old);
        udeg_[v] = static_cast<std::uint8_t>(old - 1);
        cnt_[old] -= 1;
        cnt_[old - 1] += 1;
        if (old == 2) leaf_insert(v);
    }

    const PairedGraph* committed_ = nullptr;
    std::uint64_t d1_ = 0;
    std::uint64_t d2_ = 0;
    std::uint64_t d3_ = 0;
    std::uint64_t n_half_ = 0;
    std::uint64_t n_vert_ = 0;

    std::vector<std::uint32_t> pool_;
    std::vector<std::uint32_t> pos_;
    std::uint64_t pool_size_ = 0;
    std::vector<std::uint8_t> udeg_;
    std::vector<std::uint32_t> leaves_;
    std::vector<std::uint32_t> leaf_pos_;
    std::uint64_t leaf_size_ = 0;
    std::array<std::uint64_t, 4> cnt_{};  // vertices by unmatched degree 0..3
    std::uint64_t steps_ = 0;

    bool recording_ = false;
    std::vector<LogCell> log_;
    std::uint64_t saved_pool_size_ = 0;
    std::uint64_t saved_leaf_size_ = 0;
    std::array<std::uint64_t, 4> saved_cnt_{};
};

ChainTrajectory run_exploration(ExplorationEngine& engine, Xoshiro256PlusPlus& rng,
                                RecordMode mode, std::uint64_t n) {
    ChainTrajectory traj;
    traj.n = n;
    traj.states.push_back(engine.state());
    while (engine.X() > 0) {
        engine.step(rng, false);
        const std::uint64_t k = engine.steps();
        if (mode.kind == RecordMode::Kind::full ||
            (mode.kind == RecordMode::Kind::subsample && mode.stride > 0 &&
             k % mode.stride == 0)) {
            traj.states.push_back(engine.state());
        }
    }
    if (traj.states.back().k != engine.steps()) traj.states.push_back(engine.state());
    traj.theta = engine.steps();
    traj.D2 = engine.Y();
    traj.D3 = engine.Z();
    return traj;
}

}  // namespace

ChainTrajectory explore(const DegreeSequence& seq, std::uint64_t seed, RecordMode mode) {
    seq.validate();
    ExplorationEngine engine;
    engine.init_from_sequence(seq);
    Xoshiro256PlusPlus rng(seed);
    return run_exploration(engine, rng, mode, seq.half_edges());
}

CoupledExploration explore_coupled(const PairedGraph& graph, std::uint64_t seed, RecordMode mode) {
    graph.validate();
    ExplorationEngine engine;
    engine.init_from_graph(graph);
    Xoshiro256PlusPlus rng(seed);
    CoupledExploration out;
    out.chain = run_exploration(engine, rng, mode, graph.half_edges());
    out.remainder_edges = engine.remainder_edges();
    return out;
}

StepMoments step_moments(std::uint64_t X, std::uint64_t Y, std::uint64_t Z,
                         std::uint64_t trials, std::uint64_t seed) {
    if (X == 0) throw std::invalid_argument("step_moments: X must be positive");
    if (Y % 2 != 0) throw std::invalid_argument("step_moments: Y must be even");
    if (Z % 3 != 0) throw std::invalid_argument("step_moments: Z must be divisible by 3");
    const std::uint64_t S = X + Y + Z;
    if (S == 1 || (S == 3 && Y > 0) || (S == 5 && Z > 0)) {
        // In exactly these states one step can demand a partner draw from an
        // already-empty pool (the neighbor's reveals exhaust an odd pool);
        // every other state completes a step with certainty.
        throw std::invalid_argument("step_moments: state too small to complete one step");
    }
    if (trials == 0) throw std::invalid_argument("step_moments: trials must be positive");

    ExplorationEngine engine;
    engine.init_from_sequence(DegreeSequence{X, Y / 2, Z / 3});
    Xoshiro256PlusPlus rng(seed);

    const double x0 = static_cast<double>(X);
    const double y0 = static_cast<double>(Y);
    const double z0 = static_cast<double>(Z);
    std::array<double, 3> sum{};
    std::array<double, 3> sum2{};
    std::array<double, 3> sum4{};
    for (std::uint64_t t = 0; t < trials; ++t) {
        engine.step(rng, true);
        const std::array<double, 3> delta = {static_cast<double>(engine.X()) - x0,
                                             static_cast<double>(engine.Y()) - y0,
                                             static_cast<double>(engine.Z()) - z0};
        engine.undo();
        for (int i = 0; i < 3; ++i) {
            sum[i] += delta[i];
            sum2[i] += delta[i] * delta[i];
            sum4[i] += delta[i] * delta[i] * delta[i] * delta[i];
        }
    }

    StepMoments out;
    out.trials = trials;
    const double T = static_cast<double>(trials);
    for (int i = 0; i < 3; ++i) {
        out.mean[i] = sum[i] / T;
        out.second[i] = sum2[i] / T;
        if (trials > 1) {
            const double var_mean = (sum2[i] - T * out.mean[i] * out.mean[i]) / (T - 1.0);
            const double var_second = (sum4[i] - T * out.second[i] * out.second[i]) / (T - 1.0);
            out.mean_se[i] = std::sqrt(std::max(0.0, var_mean) / T);
            out.second_se[i] = std::sqrt(std::max(0.0, var_second) / T);
        }
    }
    return out;
}

}  // namespace kslab
