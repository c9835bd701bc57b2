#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "kslab/degree_sequence.hpp"
#include "kslab/exploration.hpp"
#include "kslab/fluid.hpp"

namespace kslab {

// Degree sequence with d2 = 0 and d3 = round(n sqrt(3)/6), adjusted so that
// d1 = n - 3 d3 >= 0; the proportions sit within O(1/n) of the critical point.
DegreeSequence critical_sequence(std::uint64_t n);

// Extinction time of the fluid trajectory started from the exact realized
// proportions of `seq`.
double critical_extinction_time(const DegreeSequence& seq);

struct TrialRecord {
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    std::uint64_t theta = 0;
    std::uint64_t D2 = 0;
    std::uint64_t D3 = 0;
    double t_theta = 0.0;  // n^{-3/5} (t_ext n - theta)
    double r2 = 0.0;       // n^{-3/5} D2
    double r3 = 0.0;       // n^{-2/5} D3
};

// One JSON object per line, fixed key order, round-trip float formatting.
std::string to_jsonl(const TrialRecord& record);
TrialRecord parse_trial_record(const std::string& line);
std::vector<TrialRecord> read_trial_records(const std::string& path);

// Runs `trials` independent explorations of the critical sequence at n.
// Trial i is seeded from (master_seed, i), so the record set is identical for
// any parallelism. With a nonempty out_path, records stream to a JSON-lines
// file as they complete (in trial order on a fresh run); with resume set,
// records already present in the file are kept and their trials skipped.
std::vector<TrialRecord> run_ensemble(std::uint64_t n, std::uint64_t trials,
                                      std::uint64_t master_seed, unsigned parallelism,
                                      const std::string& out_path = std::string(),
                                      bool resume = false);

struct GroupStats {
    std::uint64_t n = 0;
    std::uint64_t trials = 0;
    // Quantiles at 5, 25, 50, 75, 95 percent.
    std::array<double, 5> q_r2{};
    std::array<double, 5> q_r3{};
    std::array<double, 5> q_t_theta{};
    double median_D2 = 0.0;
    double median_D3 = 0.0;
};

struct EnsembleSummary {
    std::vector<GroupStats> groups;  // ascending n
    double slope_d2 = 0.0;           // log-log slope of median D2 vs n
    double slope_d3 = 0.0;           // NaN when fewer than 2 groups
};

EnsembleSummary summarize(const std::vector<TrialRecord>& records);

// Fluctuations of one recorded trajectory against the fluid limit, at steps k
// with eps_k = t_ext - k/n at least n^{-2/5}:
//   raw     A = X_k - n x(k/n), B, C likewise for Y, Z;
//   scaled  A~ = A / (eps^{3/4} sqrt(n)), B~ = B / sqrt(n),
//           C~ = C / (eps^{1/2} sqrt(n)).
struct FluctuationRecord {
    std::uint64_t k = 0;
    double eps_k = 0.0;
    double A = 0.0;
    double B = 0.0;
    double C = 0.0;
    double A_t = 0.0;
    double B_t = 0.0;
    double C_t = 0.0;
};

std::vector<FluctuationRecord> fluctuation_diagnostics(const ChainTrajectory& chain,
                                                       const FluidTrajectory& fluid,
                                                       std::uint64_t stride);

}  // namespace kslab
