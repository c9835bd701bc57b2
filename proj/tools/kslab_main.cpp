// kslab: simulation and numerical laboratory for the Karp-Sipser core of
// configuration-model random graphs with degrees in {1, 2, 3}.
//
// Output conventions: a one-line reproducibility header goes to stderr;
// result summaries are JSON on stdout; bulk payloads (edge lists, CSV,
// JSON-lines records) go to --out when given, else to stdout before any
// trailing summary line.

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kslab/core_model.hpp"
#include "kslab/critical_lab.hpp"
#include "kslab/degree_sequence.hpp"
#include "kslab/exploration.hpp"
#include "kslab/fluid.hpp"
#include "kslab/limit_law.hpp"
#include "kslab/rng.hpp"
#include "kslab/stats.hpp"
#include "kslab/version.hpp"

namespace {

using nlohmann::ordered_json;

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t hash = 1469598103934665603ULL;
    for (const unsigned char ch : data) {
        hash ^= ch;
        hash *= 1099511628211ULL;
    }
    return hash;
}

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
    return buf;
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[40];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<double> parse_double_triple(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        out.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(std::string(flag) + ": bad number");
    }
    if (out.size() != 3) throw std::invalid_argument(std::string(flag) + ": expected three values");
    return out;
}

std::vector<std::uint64_t> parse_u64_triple(const std::string& text, const char* flag) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        const long long v = std::stoll(item, &used);
        if (used != item.size() || v < 0) {
            throw std::invalid_argument(std::string(flag) + ": bad count");
        }
        out.push_back(static_cast<std::uint64_t>(v));
    }
    if (out.size() != 3) throw std::invalid_argument(std::string(flag) + ": expected three values");
    return out;
}

std::uint64_t resolve_master_seed(const CLI::Option* seed_opt, std::uint64_t cli_seed) {
    if (seed_opt->count() > 0) return cli_seed;
    if (const char* env = std::getenv("KSLAB_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw std::invalid_argument("KSLAB_SEED: not an unsigned integer");
        }
    }
    return 0;
}

void print_header(const std::string& subcommand, std::uint64_t master_seed,
                  const std::string& config_canonical, bool no_timestamp) {
    ordered_json header;
    header["tool"] = "kslab";
    header["version"] = kslab::kVersion;
    header["subcommand"] = subcommand;
    header["master_seed"] = master_seed;
    header["config_hash"] = hex64(fnv1a64(config_canonical));
    if (!no_timestamp) header["timestamp"] = utc_timestamp();
    std::cerr << header.dump() << '\n';
}

// Returns the stream to use for bulk payload: the file at `path` when given,
// stdout otherwise.
std::ostream& open_payload(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path, std::ios::trunc);
    if (!file) throw std::runtime_error("cannot open output file: " + path);
    return file;
}

kslab::RecordMode parse_record_mode(const std::string& text) {
    if (text == "endpoints") return kslab::RecordMode::endpoints();
    if (text == "full") return kslab::RecordMode::full();
    try {
        const unsigned long long stride = std::stoull(text);
        if (stride == 0) throw std::invalid_argument("zero");
        return kslab::RecordMode::subsample(stride);
    } catch (const std::exception&) {
        throw std::invalid_argument("--record: expected endpoints, full, or a stride");
    }
}

int run_phase(const std::vector<double>& p) {
    const double theta = kslab::theta_param(p[0], p[1], p[2]);
    ordered_json out;
    out["Theta"] = theta;
    switch (kslab::classify_phase(theta)) {
        case kslab::Phase::subcritical: out["regime"] = "subcritical"; break;
        case kslab::Phase::critical: out["regime"] = "critical"; break;
        case kslab::Phase::supercritical: out["regime"] = "supercritical"; break;
    }
    if (theta > 1e-12) {
        const kslab::Vec3 ext = kslab::extinction_values(theta);
        out["core_density"] = kslab::core_density(theta);
        out["Y_ext"] = ext[0];
        out["Z_ext"] = ext[1];
    }
    std::cout << out.dump() << '\n';
    return 0;
}

int run_sample(const std::vector<std::uint64_t>& seq_values, std::uint64_t seed,
               const std::string& out_path) {
    const kslab::DegreeSequence seq{seq_values[0], seq_values[1], seq_values[2]};
    const kslab::PairedGraph graph = kslab::sample_configuration(seq, seed);
    std::ofstream file;
    std::ostream& payload = open_payload(file, out_path);
    kslab::write_edge_list(payload, graph);
    payload.flush();
    if (!out_path.empty()) {
        ordered_json out;
        out["n_vertices"] = graph.vertices();
        out["n_halfedges"] = graph.half_edges();
        out["out"] = out_path;
        std::cout << out.dump() << '\n';
    }
    return 0;
}

int run_core(const std::string& seq_text, std::uint64_t seed, const std::string& in_path,
             const std::string& export_path) {
    kslab::PairedGraph graph;
    if (!in_path.empty()) {
        std::ifstream in(in_path);
        if (!in) throw std::runtime_error("cannot open input file: " + in_path);
        graph = kslab::read_edge_list(in);
    } else if (!seq_text.empty()) {
        const auto v = parse_u64_triple(seq_text, "--seq");
        graph = kslab::sample_configuration(kslab::DegreeSequence{v[0], v[1], v[2]}, seed);
    } else {
        throw std::invalid_argument("core: need either --seq or --in");
    }
    const kslab::CoreResult core = kslab::ks_core(graph);
    const kslab::DegreeHistogram hist = kslab::degree_histogram(core);
    ordered_json out;
    out["n_vertices"] = graph.vertices();
    out["n_halfedges"] = graph.half_edges();
    out["core_size"] = core.core_size;
    out["core_fraction"] =
        static_cast<double>(core.core_size) / static_cast<double>(graph.half_edges());
    out["core_histogram"] = {{"deg2_vertices", hist.count[2]}, {"deg3_vertices", hist.count[3]}};
    out["independent_set_size"] = core.independent_set.size();
    if (!export_path.empty()) {
        std::ofstream exp(export_path, std::ios::trunc);
        if (!exp) throw std::runtime_error("cannot open output file: " + export_path);
        kslab::write_core_edge_list(exp, graph, core);
        out["core_out"] = export_path;
    }
    std::cout << out.dump() << '\n';
    return 0;
}

int run_explore(const std::vector<std::uint64_t>& seq_values, std::uint64_t seed,
                const std::string& record_text, const std::string& out_path) {
    const kslab::DegreeSequence seq{seq_values[0], seq_values[1], seq_values[2]};
    const kslab::RecordMode mode = parse_record_mode(record_text);
    const kslab::ChainTrajectory traj = kslab::explore(seq, seed, mode);
    std::ofstream file;
    std::ostream& payload = open_payload(file, out_path);
    payload << "k,X,Y,Z\n";
    for (const kslab::ChainState& s : traj.states) {
        payload << s.k << ',' << s.X << ',' << s.Y << ',' << s.Z << '\n';
    }
    payload.flush();
    char line[256];
    std::snprintf(line, sizeof(line),
                  "{\"n\":%llu,\"seed\":%llu,\"theta\":%llu,\"D2\":%llu,\"D3\":%llu}",
                  static_cast<unsigned long long>(traj.n), static_cast<unsigned long long>(seed),
                  static_cast<unsigned long long>(traj.theta),
                  static_cast<unsigned long long>(traj.D2),
                  static_cast<unsigned long long>(traj.D3));
    std::cout << line << '\n';
    return 0;
}

int run_fluid(const std::vector<double>& p, const std::string& out_path) {
    const kslab::FluidTrajectory traj = kslab::integrate(p[0], p[1], p[2]);
    std::ofstream file;
    std::ostream& payload = open_payload(file, out_path);
    payload << "t,X,Y,Z\n";
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        payload << fmt_double(traj.t[i]) << ',' << fmt_double(traj.state[i][0]) << ','
                << fmt_double(traj.state[i][1]) << ',' << fmt_double(traj.state[i][2]) << '\n';
    }
    payload.flush();

    ordered_json out;
    out["Theta"] = kslab::theta_param(p[0], p[1], p[2]);
    try {
        const kslab::ClosedFormStart start = kslab::params_from_initial(p[0], p[1], p[2]);
        out["b"] = start.params.b;
        out["u0"] = start.params.u0;
    } catch (const std::domain_error&) {
        out["b"] = nullptr;
        out["u0"] = nullptr;
    }
    out["t_ext"] = traj.t_ext;
    out["extinction_state"] = {traj.extinction_state[0], traj.extinction_state[1],
                               traj.extinction_state[2]};
    std::cout << out.dump() << '\n';
    return 0;
}

int run_critical(const std::vector<std::uint64_t>& n_values, std::uint64_t trials,
                 std::uint64_t master_seed, unsigned jobs, const std::string& out_path,
                 bool resume) {
    std::vector<kslab::TrialRecord> all;
    bool first_batch = true;
    for (const std::uint64_t n : n_values) {
        // One shared file across n values: later batches append.
        const bool batch_resume = resume || !first_batch;
        const std::vector<kslab::TrialRecord> records =
            kslab::run_ensemble(n, trials, master_seed, jobs, out_path, batch_resume);
        all.insert(all.end(), records.begin(), records.end());
        first_batch = false;
        if (out_path.empty()) {
            for (const kslab::TrialRecord& r : records) std::cout << kslab::to_jsonl(r) << '\n';
        }
    }
    const kslab::EnsembleSummary summary = kslab::summarize(all);
    ordered_json out;
    out["groups"] = ordered_json::array();
    for (const kslab::GroupStats& g : summary.groups) {
        ordered_json jg;
        jg["n"] = g.n;
        jg["trials"] = g.trials;
        jg["median_r2"] = g.q_r2[2];
        jg["median_r3"] = g.q_r3[2];
        jg["median_t_theta"] = g.q_t_theta[2];
        jg["median_D2"] = g.median_D2;
        jg["median_D3"] = g.median_D3;
        out["groups"].push_back(jg);
    }
    if (std::isnan(summary.slope_d2)) {
        out["slope_d2"] = nullptr;
        out["slope_d3"] = nullptr;
    } else {
        out["slope_d2"] = summary.slope_d2;
        out["slope_d3"] = summary.slope_d3;
    }
    std::cout << out.dump() << '\n';
    return 0;
}

int run_vartheta(std::uint64_t count, std::uint64_t master_seed, double dt, double t0,
                 unsigned jobs, const std::string& out_path) {
    kslab::VarthetaConfig cfg;
    cfg.dt = dt;
    cfg.t0 = t0;
    const std::vector<kslab::VarthetaSample> samples =
        kslab::sample_vartheta(count, master_seed, cfg, jobs);
    std::ofstream file;
    std::ostream& payload = open_payload(file, out_path);
    for (const kslab::VarthetaSample& s : samples) payload << fmt_double(s.value) << '\n';
    payload.flush();
    if (!out_path.empty()) {
        std::vector<double> values;
        values.reserve(samples.size());
        std::uint64_t refined = 0;
        for (const kslab::VarthetaSample& s : samples) {
            values.push_back(s.value);
            if (s.crossed_at_refinement) ++refined;
        }
        ordered_json out;
        out["count"] = count;
        out["median"] = kslab::median(values);
        out["refined_fraction"] =
            static_cast<double>(refined) / static_cast<double>(samples.size());
        out["out"] = out_path;
        std::cout << out.dump() << '\n';
    }
    return 0;
}

std::vector<double> read_value_column(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            std::size_t used = 0;
            const double v = std::stod(line, &used);
            if (used == line.size()) values.push_back(v);
        } catch (const std::exception&) {
            // Non-numeric lines (e.g. a header) are skipped.
        }
    }
    if (values.empty()) throw std::invalid_argument("no numeric values in " + path);
    return values;
}

int run_compare(const std::string& path_a, const std::string& path_b) {
    const kslab::KsReport report =
        kslab::two_sample_distance(read_value_column(path_a), read_value_column(path_b));
    ordered_json out;
    out["statistic"] = report.statistic;
    out["critical_value_5pct"] = report.critical_5pct;
    out["m"] = report.m;
    out["n"] = report.n;
    out["pass_5pct"] = report.pass_5pct();
    std::cout << out.dump() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Karp-Sipser core laboratory for {1,2,3}-degree configuration models"};
    app.require_subcommand(1);

    std::uint64_t cli_seed = 0;
    bool no_timestamp = false;
    CLI::Option* seed_opt =
        app.add_option("--seed", cli_seed, "master seed (fallback: KSLAB_SEED, then 0)");
    app.add_flag("--no-timestamp", no_timestamp, "omit the timestamp header field");

    std::string p_text;
    std::string seq_text;
    std::string in_path;
    std::string out_path;
    std::string export_path;
    std::string record_text = "endpoints";
    std::vector<std::uint64_t> n_values;
    std::uint64_t trials = 1;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    bool resume = false;
    std::uint64_t count = 1000;
    double dt = 1e-5;
    double t0 = 0.05;
    std::string compare_a;
    std::string compare_b;

    CLI::App* phase = app.add_subcommand("phase", "classify proportions by the phase parameter");
    phase->add_option("--p", p_text, "half-edge proportions p1,p2,p3")->required();

    CLI::App* sample = app.add_subcommand("sample", "sample a configuration-model pairing");
    sample->add_option("--seq", seq_text, "degree counts d1,d2,d3")->required();
    sample->add_option("--out", out_path, "edge-list output file (default stdout)");

    CLI::App* core = app.add_subcommand("core", "extract the leaf-free core");
    core->add_option("--seq", seq_text, "degree counts d1,d2,d3 (samples a pairing)");
    core->add_option("--in", in_path, "read an edge-list file instead of sampling");
    core->add_option("--export-core", export_path, "write the core as an edge list");

    CLI::App* explore = app.add_subcommand("explore", "run the leaf-removal exploration chain");
    explore->add_option("--seq", seq_text, "degree counts d1,d2,d3")->required();
    explore->add_option("--record", record_text, "endpoints, full, or a subsample stride");
    explore->add_option("--out", out_path, "trajectory CSV output file (default stdout)");

    CLI::App* fluid = app.add_subcommand("fluid", "integrate the deterministic limit");
    fluid->add_option("--p", p_text, "half-edge proportions p1,p2,p3")->required();
    fluid->add_option("--out", out_path, "trajectory CSV output file (default stdout)");

    CLI::App* critical = app.add_subcommand("critical", "run critical-point ensembles");
    critical->add_option("--n", n_values, "half-edge count (repeatable)")->required();
    critical->add_option("--trials", trials, "trials per n")->required();
    critical->add_option("--jobs", jobs, "worker threads");
    critical->add_option("--out", out_path, "JSON-lines record file");
    critical->add_flag("--resume", resume, "skip trials already present in --out");

    CLI::App* vartheta = app.add_subcommand("vartheta", "sample the limiting hitting time");
    vartheta->add_option("--count", count, "number of samples")->required();
    vartheta->add_option("--dt", dt, "near-barrier grid step");
    vartheta->add_option("--t0", t0, "start time of the simulated path");
    vartheta->add_option("--jobs", jobs, "worker threads");
    vartheta->add_option("--out", out_path, "single-column CSV output file (default stdout)");

    CLI::App* compare = app.add_subcommand("compare", "two-sample distribution distance");
    compare->add_option("a", compare_a, "first single-column CSV")->required();
    compare->add_option("b", compare_b, "second single-column CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const std::uint64_t master_seed = resolve_master_seed(seed_opt, cli_seed);

        std::ostringstream canon;
        canon << "seed=" << master_seed;
        if (app.got_subcommand(phase)) canon << ";cmd=phase;p=" << p_text;
        if (app.got_subcommand(sample)) canon << ";cmd=sample;seq=" << seq_text << ";out=" << out_path;
        if (app.got_subcommand(core)) {
            canon << ";cmd=core;seq=" << seq_text << ";in=" << in_path
                  << ";export=" << export_path;
        }
        if (app.got_subcommand(explore)) {
            canon << ";cmd=explore;seq=" << seq_text << ";record=" << record_text
                  << ";out=" << out_path;
        }
        if (app.got_subcommand(fluid)) canon << ";cmd=fluid;p=" << p_text << ";out=" << out_path;
        if (app.got_subcommand(critical)) {
            canon << ";cmd=critical;n=";
            for (const std::uint64_t n : n_values) canon << n << ',';
            canon << ";trials=" << trials << ";out=" << out_path << ";resume=" << resume;
        }
        if (app.got_subcommand(vartheta)) {
            canon << ";cmd=vartheta;count=" << count << ";dt=" << fmt_double(dt)
                  << ";t0=" << fmt_double(t0) << ";out=" << out_path;
        }
        if (app.got_subcommand(compare)) {
            canon << ";cmd=compare;a=" << compare_a << ";b=" << compare_b;
        }

        const std::string subcommand = app.get_subcommands().front()->get_name();
        print_header(subcommand, master_seed, canon.str(), no_timestamp);

        if (app.got_subcommand(phase)) return run_phase(parse_double_triple(p_text, "--p"));
        if (app.got_subcommand(sample)) {
            return run_sample(parse_u64_triple(seq_text, "--seq"), master_seed, out_path);
        }
        if (app.got_subcommand(core)) return run_core(seq_text, master_seed, in_path, export_path);
        if (app.got_subcommand(explore)) {
            return run_explore(parse_u64_triple(seq_text, "--seq"), master_seed, record_text,
                               out_path);
        }
        if (app.got_subcommand(fluid)) return run_fluid(parse_double_triple(p_text, "--p"), out_path);
        if (app.got_subcommand(critical)) {
            return run_critical(n_values, trials, master_seed, jobs, out_path, resume);
        }
        if (app.got_subcommand(vartheta)) {
            return run_vartheta(count, master_seed, dt, t0, jobs, out_path);
        }
        if (app.got_subcommand(compare)) return run_compare(compare_a, compare_b);
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
