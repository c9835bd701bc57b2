#include "kslab/critical_lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "kslab/rng.hpp"
#include "kslab/stats.hpp"

namespace kslab {

DegreeSequence critical_sequence(std::uint64_t n) {
    if (n % 2 != 0) throw std::invalid_argument("critical_sequence: n must be even");
    if (n < 10) throw std::invalid_argument("critical_sequence: n must be at least 10");
    std::uint64_t d3 = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(n) * std::sqrt(3.0) / 6.0));
    while (3 * d3 > n) --d3;
    DegreeSequence seq{n - 3 * d3, 0, d3};
    seq.validate();
    return seq;
}

double critical_extinction_time(const DegreeSequence& seq) {
    const std::array<double, 3> p = seq.proportions();
    return integrate(p[0], p[1], p[2]).t_ext;
}

std::string to_jsonl(const TrialRecord& r) {
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "{\"n\":%llu,\"seed\":%llu,\"theta\":%llu,\"D2\":%llu,\"D3\":%llu,"
                  "\"t_theta\":%.17g,\"r2\":%.17g,\"r3\":%.17g}",
                  static_cast<unsigned long long>(r.n), static_cast<unsigned long long>(r.seed),
                  static_cast<unsigned long long>(r.theta),
                  static_cast<unsigned long long>(r.D2), static_cast<unsigned long long>(r.D3),
                  r.t_theta, r.r2, r.r3);
    return buf;
}

TrialRecord parse_trial_record(const std::string& line) {
    const nlohmann::json j = nlohmann::json::parse(line);
    TrialRecord r;
    r.n = j.at("n").get<std::uint64_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.theta = j.at("theta").get<std::uint64_t>();
    r.D2 = j.at("D2").get<std::uint64_t>();
    r.D3 = j.at("D3").get<std::uint64_t>();
    r.t_theta = j.at("t_theta").get<double>();
    r.r2 = j.at("r2").get<double>();
    r.r3 = j.at("r3").get<double>();
    return r;
}

std::vector<TrialRecord> read_trial_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open record file: " + path);
    std::vector<TrialRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(parse_trial_record(line));
    }
    return records;
}

std::vector<TrialRecord> run_ensemble(std::uint64_t n, std::uint64_t trials,
                                      std::uint64_t master_seed, unsigned parallelism,
                                      const std::string& out_path, bool resume) {
    if (trials == 0) throw std::invalid_argument("run_ensemble: trials must be positive");
    const DegreeSequence seq = critical_sequence(n);
    const double t_ext = critical_extinction_time(seq);
    const double n_real = static_cast<double>(n);
    const double scale2 = std::pow(n_real, -0.6);
    const double scale3 = std::pow(n_real, -0.4);

    std::vector<std::uint64_t> seeds(trials);
    for (std::uint64_t i = 0; i < trials; ++i) seeds[i] = derive_stream_seed(master_seed, i);

    std::vector<std::optional<TrialRecord>> slots(trials);
    std::vector<bool> already_written(trials, false);
    if (resume && !out_path.empty()) {
        std::ifstream existing(out_path);
        if (existing) {
            std::unordered_map<std::uint64_t, std::uint64_t> index_of_seed;
            index_of_seed.reserve(trials);
            for (std::uint64_t i = 0; i < trials; ++i) index_of_seed.emplace(seeds[i], i);
            std::string line;
            while (std::getline(existing, line)) {
                if (line.empty()) continue;
                const TrialRecord r = parse_trial_record(line);
                const auto it = index_of_seed.find(r.seed);
                if (r.n == n && it != index_of_seed.end()) {
                    slots[it->second] = r;
                    already_written[it->second] = true;
                }
            }
        }
    }

    std::vector<std::uint64_t> work;
    work.reserve(trials);
    for (std::uint64_t i = 0; i < trials; ++i) {
        if (!slots[i].has_value()) work.push_back(i);
    }

    std::mutex mu;
    std::condition_variable cv;
    std::atomic<std::size_t> next_work{0};
    std::exception_ptr failure;

    auto worker = [&]() {
        while (true) {
            const std::size_t w = next_work.fetch_add(1);
            if (w >= work.size()) return;
            const std::uint64_t i = work[w];
            try {
                const ChainTrajectory traj = explore(seq, seeds[i], RecordMode::endpoints());
                TrialRecord r;
                r.n = n;
                r.seed = seeds[i];
                r.theta = traj.theta;
                r.D2 = traj.D2;
                r.D3 = traj.D3;
                r.t_theta = (t_ext * n_real - static_cast<double>(traj.theta)) * scale2;
                r.r2 = static_cast<double>(traj.D2) * scale2;
                r.r3 = static_cast<double>(traj.D3) * scale3;
                {
                    std::lock_guard<std::mutex> lock(mu);
                    slots[i] = r;
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
                slots[i] = TrialRecord{};  // unblocks the writer; failure rethrown below
            }
            cv.notify_all();
        }
    };

    const unsigned jobs = std::max(1u, parallelism);
    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (unsigned j = 0; j < jobs; ++j) threads.emplace_back(worker);

    // Stream records out in trial order as they complete; resumed records are
    // already in the file and are not rewritten.
    if (!out_path.empty()) {
        std::ofstream out(out_path, resume ? std::ios::app : std::ios::trunc);
        if (!out) {
            for (auto& th : threads) th.join();
            throw std::runtime_error("cannot open record file for writing: " + out_path);
        }
        std::unique_lock<std::mutex> lock(mu);
        for (std::uint64_t i = 0; i < trials; ++i) {
            cv.wait(lock, [&] { return slots[i].has_value(); });
            if (failure) break;
            if (!already_written[i]) {
                out << to_jsonl(*slots[i]) << '\n';
                out.flush();
            }
        }
    }

    for (auto& th : threads) th.join();
    if (failure) std::rethrow_exception(failure);

    std::vector<TrialRecord> records;
    records.reserve(trials);
    for (std::uint64_t i = 0; i < trials; ++i) records.push_back(*slots[i]);
    return records;
}

EnsembleSummary summarize(const std::vector<TrialRecord>& records) {
    if (records.empty()) throw std::invalid_argument("summarize: no records");
    std::map<std::uint64_t, std::vector<const TrialRecord*>> groups;
    for (const TrialRecord& r : records) groups[r.n].push_back(&r);

    EnsembleSummary summary;
    static constexpr std::array<double, 5> kProbs = {0.05, 0.25, 0.5, 0.75, 0.95};
    std::vector<double> log_n;
    std::vector<double> log_d2;
    std::vector<double> log_d3;
    for (const auto& [n, rows] : groups) {
        GroupStats g;
        g.n = n;
        g.trials = rows.size();
        std::vector<double> r2;
        std::vector<double> r3;
        std::vector<double> tt;
        std::vector<double> d2;
        std::vector<double> d3;
        for (const TrialRecord* r : rows) {
            r2.push_back(r->r2);
            r3.push_back(r->r3);
            tt.push_back(r->t_theta);
            d2.push_back(static_cast<double>(r->D2));
            d3.push_back(static_cast<double>(r->D3));
        }
        for (std::size_t q = 0; q < kProbs.size(); ++q) {
            g.q_r2[q] = quantile(r2, kProbs[q]);
            g.q_r3[q] = quantile(r3, kProbs[q]);
            g.q_t_theta[q] = quantile(tt, kProbs[q]);
        }
        g.median_D2 = median(d2);
        g.median_D3 = median(d3);
        summary.groups.push_back(g);
        if (g.median_D2 > 0.0 && g.median_D3 > 0.0) {
            log_n.push_back(std::log(static_cast<double>(n)));
            log_d2.push_back(std::log(g.median_D2));
            log_d3.push_back(std::log(g.median_D3));
        }
    }
    if (log_n.size() >= 2) {
        summary.slope_d2 = least_squares_slope(log_n, log_d2);
        summary.slope_d3 = least_squares_slope(log_n, log_d3);
    } else {
        summary.slope_d2 = std::numeric_limits<double>::quiet_NaN();
        summary.slope_d3 = std::numeric_limits<double>::quiet_NaN();
    }
    return summary;
}

std::vector<FluctuationRecord> fluctuation_diagnostics(const ChainTrajectory& chain,
                                                       const FluidTrajectory& fluid,
                                                       std::uint64_t stride) {
    if (chain.n == 0 || chain.states.empty()) {
        throw std::invalid_argument("fluctuation_diagnostics: empty trajectory");
    }
    if (stride == 0) stride = 1;
    const double n = static_cast<double>(chain.n);
    const Vec3 start = fluid.state.front();
    const ChainState& s0 = chain.initial();
    if (std::abs(start[0] - static_cast<double>(s0.X) / n) > 1e-6 ||
        std::abs(start[1] - static_cast<double>(s0.Y) / n) > 1e-6 ||
        std::abs(start[2] - static_cast<double>(s0.Z) / n) > 1e-6) {
        throw std::invalid_argument(
            "fluctuation_diagnostics: fluid start does not match the chain's n");
    }

    const double eps_min = std::pow(n, -0.4);
    const double sqrt_n = std::sqrt(n);
    std::vector<FluctuationRecord> out;
    for (const ChainState& s : chain.states) {
        if (s.k % stride != 0) continue;
        const double t_k = static_cast<double>(s.k) / n;
        const double eps = fluid.t_ext - t_k;
        if (eps < eps_min) continue;
        const Vec3 limit = fluid.eval(t_k);
        FluctuationRecord rec;
        rec.k = s.k;
        rec.eps_k = eps;
        rec.A = static_cast<double>(s.X) - n * limit[0];
        rec.B = static_cast<double>(s.Y) - n * limit[1];
        rec.C = static_cast<double>(s.Z) - n * limit[2];
        rec.A_t = rec.A / (std::pow(eps, 0.75) * sqrt_n);
        rec.B_t = rec.B / sqrt_n;
        rec.C_t = rec.C / (std::sqrt(eps) * sqrt_n);
        out.push_back(rec);
    }
    return out;
}

}  // namespace kslab
