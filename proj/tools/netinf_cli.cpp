#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "netinf/ccm.hpp"
#include "netinf/dynsim.hpp"
#include "netinf/error.hpp"
#include "netinf/granger.hpp"
#include "netinf/harness.hpp"
#include "netinf/netgen.hpp"
#include "netinf/network.hpp"
#include "netinf/pci.hpp"

using namespace netinf;
namespace fs = std::filesystem;

namespace {

struct Globals {
    std::uint64_t seed = 1;
    std::string out;
    std::size_t threads = 1;
};

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw ParameterError("cannot write " + path);
    }
    return out;
}

std::string require_out(const Globals& g, const char* what)
{
    if (g.out.empty()) {
        throw ParameterError(std::string("--out is required for ") + what);
    }
    return g.out;
}

// `base.ext` -> `base.suffix`
std::string sibling(const std::string& path, const std::string& suffix)
{
    fs::path p(path);
    p.replace_extension(suffix);
    return p.string();
}

std::string fixed6(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// --- generate ---------------------------------------------------------------

struct GenerateArgs {
    std::string type = "er";
    std::size_t n = 5;
    double p = 0.5;
    std::size_t clique = 8;
    std::size_t m = 2;
};

void run_generate(const Globals& g, const GenerateArgs& a)
{
    GraphSpec spec;
    spec.type = parse_graph_type(a.type);
    spec.p_conn = a.p;
    spec.clique = a.clique;
    spec.ba_m = a.m;
    const auto net = make_graph(spec, a.n, g.seed);
    if (g.out.empty()) {
        std::cout << to_json(net);
    } else {
        save_network(net, g.out);
    }
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
    std::string network;
    std::string model = "mass-spring";
    double coupling = 1.0;
    double end = 10.0;
    double dt = 1e-2;
    std::size_t record_every = 1;
    double mass = 1.0;
    double damping = 0.25;
    double omega_std = 1.0;
    double initial_scale = 1.0;
    std::vector<std::size_t> pulse_nodes;
    double force = 50.0;
    double pulse_start = 0.0;
    double pulse_duration = 0.5;
    double noise = 0.0;
};

OscillatorModel build_model(const DirectedNetwork& net, ModelKind kind, double coupling, double mass,
                            double damping, double omega_std, std::uint64_t seed)
{
    if (kind == ModelKind::MassSpring) {
        MassSpringParams p;
        p.mass = mass;
        p.damping = damping;
        p.spring = coupling;
        return MassSpringModel{net, p};
    }
    KuramotoParams p;
    p.coupling = coupling;
    p.omega = draw_frequencies(net.size(), 0.0, omega_std, mix_seed(seed, 2));
    return KuramotoModel{net, p};
}

void run_simulate(const Globals& g, const SimulateArgs& a)
{
    const auto net = load_network(a.network);
    const auto kind = parse_model(a.model);
    const auto model = build_model(net, kind, a.coupling, a.mass, a.damping, a.omega_std, g.seed);
    const auto start = kind == ModelKind::Kuramoto
                           ? random_initial_state(net.size(), std::numbers::pi, mix_seed(g.seed, 3), true)
                           : random_initial_state(net.size(), a.initial_scale, mix_seed(g.seed, 3));
    std::vector<ForcingSpec> pulses;
    for (auto node : a.pulse_nodes) {
        pulses.push_back(impulse_forcing(node, a.force, a.pulse_start, a.pulse_duration));
    }
    auto traj = simulate(model, pulses, start, TimeGrid{0.0, a.end, a.dt, a.record_every});
    if (a.noise > 0.0) {
        // measurement noise on the recorded states; rates stay exact
        std::mt19937_64 rng(mix_seed(g.seed, 6));
        std::normal_distribution<double> normal(0.0, a.noise);
        traj.states = traj.states.unaryExpr([&](double v) { return v + normal(rng); });
    }
    if (g.out.empty()) {
        write_trajectory_csv(std::cout, traj);
    } else {
        save_trajectory(traj, g.out);
    }
}

// --- infer ------------------------------------------------------------------

struct InferArgs {
    std::string method;
    std::vector<std::string> trajectories;
    std::string model = "mass-spring";
    // gc
    std::string order = "auto";
    std::size_t max_order = 8;
    double alpha = 0.05;
    double window = 0.0;
    // pci
    std::string network;
    double coupling = 1.0;
    std::string perturb_order = "random";
    std::size_t perturb_count = 0;
    double force = 50.0;
    double eta = 0.05;
    double gap_factor = 2.0;
    double omega_std = 1.0;
    // ccm
    std::size_t embed_dim = 3;
    std::size_t tau = 1;
    double rho = 0.7;
};

void report_against_truth(const InferArgs& a, const DirectedNetwork& predicted)
{
    if (a.network.empty()) {
        return;
    }
    const auto truth = load_network(a.network);
    std::cerr << "accuracy " << format_double(accuracy(truth, predicted)) << "  spectral_distance "
              << format_double(spectral_distance(truth, predicted)) << '\n';
}

void run_infer_gc(const Globals& g, const InferArgs& a)
{
    if (a.trajectories.empty()) {
        throw ParameterError("gc needs at least one --trajectory");
    }
    const auto kind = parse_model(a.model);
    std::vector<Eigen::MatrixXd> trials;
    for (const auto& path : a.trajectories) {
        auto traj = load_trajectory(path, kind);
        if (a.window > 0.0) {
            traj = traj.head(a.window);
        }
        trials.push_back(traj.states);
    }
    GcOptions opts;
    if (a.order != "auto") {
        opts.order = std::stoul(a.order);
    }
    opts.max_order = a.max_order;
    opts.alpha = a.alpha;
    const auto result = gc_infer_network(trials, opts);

    const auto out = require_out(g, "infer");
    save_network(result.network, out);
    auto stats = open_out(sibling(out, ".stats.csv"));
    stats << "source,target,F,p,significant\n";
    const auto n = result.network.size();
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t t = 0; t < n; ++t) {
            if (s == t) {
                continue;
            }
            const auto ti = static_cast<Eigen::Index>(t);
            const auto si = static_cast<Eigen::Index>(s);
            stats << s << ',' << t << ',' << format_double(result.stats.f_stat(ti, si)) << ','
                  << format_double(result.stats.p_values(ti, si)) << ','
                  << (result.stats.significant[t][s] ? 1 : 0) << '\n';
        }
    }
    std::cerr << "VAR order " << result.stats.order << ", " << result.network.edge_count() << " edges\n";
    report_against_truth(a, result.network);
}

void run_infer_pci(const Globals& g, const InferArgs& a)
{
    if (a.network.empty()) {
        throw ParameterError("pci perturbs a simulated system; pass its --network");
    }
    const auto net = load_network(a.network);
    const auto kind = parse_model(a.model);
    const auto model = build_model(net, kind, a.coupling, 1.0, 0.25, a.omega_std, g.seed);
    const auto start = kind == ModelKind::Kuramoto
                           ? random_initial_state(net.size(), std::numbers::pi, mix_seed(g.seed, 3), true)
                           : random_initial_state(net.size(), 0.0, 0);
    PerturbationProtocol proto;
    proto.force = a.force;
    proto.window = a.window;
    proto.eta = a.eta;
    proto.gap_factor = a.gap_factor;
    SimulatedShells observer(model, start, proto);

    std::vector<std::size_t> order;
    switch (parse_perturb_order(a.perturb_order)) {
    case PerturbOrder::Random: order = random_order(net.size(), mix_seed(g.seed, 4)); break;
    case PerturbOrder::Outdegree: order = outdegree_order(net); break;
    case PerturbOrder::Outcloseness: order = outcloseness_order(net); break;
    }
    const auto count = a.perturb_count == 0 ? net.size() : a.perturb_count;
    const auto result = pci_infer(observer, order, count);
    for (const auto& f : result.failures) {
        std::cerr << "perturbation of node " << f.node << " failed: " << f.reason << '\n';
    }

    const auto out = require_out(g, "infer");
    save_network(result.network, out);
    auto probs = open_out(sibling(out, ".probs.csv"));
    const auto n = net.size();
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = 0; y < n; ++y) {
            probs << (y ? "," : "") << (x == y ? "nan" : fixed6(result.probs(x, y)));
        }
        probs << '\n';
    }
    report_against_truth(a, result.network);
}

void run_infer_ccm(const Globals& g, const InferArgs& a)
{
    if (a.trajectories.size() != 1) {
        throw ParameterError("ccm reads exactly one --trajectory");
    }
    auto traj = load_trajectory(a.trajectories.front(), parse_model(a.model));
    if (a.window > 0.0) {
        traj = traj.head(a.window);
    }
    CcmOptions opts;
    opts.dim = a.embed_dim;
    opts.tau = a.tau;
    opts.rho_threshold = a.rho;
    opts.seed = g.seed;
    const auto result = ccm_infer_network(traj.states, opts);
    save_network(result.network, require_out(g, "infer"));
    report_against_truth(a, result.network);
}

void run_infer(const Globals& g, const InferArgs& a)
{
    switch (parse_method(a.method)) {
    case Method::Gc: run_infer_gc(g, a); break;
    case Method::Pci: run_infer_pci(g, a); break;
    case Method::Ccm: run_infer_ccm(g, a); break;
    }
}

// --- experiment -------------------------------------------------------------

void run_experiment(const Globals& g, const std::string& config_path, bool seed_given)
{
    auto cfg = load_config(config_path);
    if (seed_given) {
        cfg.master_seed = g.seed;
    }
    SweepOptions opts;
    opts.threads = g.threads;
    std::ofstream file;
    if (g.out.empty()) {
        opts.out = &std::cout;
    } else {
        file = open_out(g.out);
        opts.out = &file;
    }
    const auto records = run_sweep(cfg, opts);
    std::size_t failed = 0;
    for (const auto& r : records) {
        failed += r.ok ? 0 : 1;
    }
    std::cerr << records.size() << " trials, " << failed << " failed\n";
}

// --- report -----------------------------------------------------------------

struct ReportArgs {
    std::string results;
    std::string x = "n";
    std::string y = "coupling";
    std::string value = "accuracy";
};

void run_report(const Globals& g, const ReportArgs& a)
{
    std::ifstream in(a.results);
    if (!in) {
        throw ParameterError("cannot open results file " + a.results);
    }
    const auto rows = read_results_csv(in);
    if (rows.empty()) {
        throw ParameterError("results file has no records");
    }
    const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
    fs::create_directories(dir);

    // one heatmap per (method, model) pair
    std::map<std::pair<std::string, std::string>, std::vector<ResultRow>> groups;
    for (const auto& row : rows) {
        groups[{row.at("method"), row.at("model")}].push_back(row);
    }
    for (const auto& [key, subset] : groups) {
        const auto table = summarize(subset, {a.y, a.x}, a.value);
        const auto stem = key.first + "_" + key.second;
        auto csv = open_out((dir / (stem + "_summary.csv")).string());
        write_summary_csv(csv, table);
        auto svg = open_out((dir / (stem + "_heatmap.svg")).string());
        svg << render_heatmap(table, a.x, a.y, key.first + " on " + key.second + ": mean " + a.value);
        std::cerr << "wrote " << (dir / (stem + "_heatmap.svg")).string() << '\n';
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Causal network inference on simulated oscillator networks"};
    app.require_subcommand(1);
    Globals g;
    auto* seed_opt = app.add_option("--seed", g.seed, "random seed")->capture_default_str();
    app.add_option("--out", g.out, "output file (directory for report)");
    app.add_option("--threads", g.threads, "worker threads for experiment sweeps")->capture_default_str();

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "write a random directed network");
    generate->add_option("--type", gen.type, "er | er-clique | ba")->capture_default_str();
    generate->add_option("--n", gen.n, "node count")->capture_default_str();
    generate->add_option("--p", gen.p, "connection probability")->capture_default_str();
    generate->add_option("--clique", gen.clique, "planted clique size")->capture_default_str();
    generate->add_option("--m", gen.m, "links per new node (ba)")->capture_default_str();

    SimulateArgs sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "integrate a network and write its trajectory");
    simulate_cmd->add_option("--network", sim.network, "network file")->required();
    simulate_cmd->add_option("--model", sim.model, "mass-spring | kuramoto")->capture_default_str();
    simulate_cmd->add_option("--coupling", sim.coupling, "spring constant or K")->capture_default_str();
    simulate_cmd->add_option("--end", sim.end, "end time in seconds")->capture_default_str();
    simulate_cmd->add_option("--dt", sim.dt, "RK4 step")->capture_default_str();
    simulate_cmd->add_option("--record-every", sim.record_every, "keep every k-th step")->capture_default_str();
    simulate_cmd->add_option("--mass", sim.mass)->capture_default_str();
    simulate_cmd->add_option("--damping", sim.damping)->capture_default_str();
    simulate_cmd->add_option("--omega-std", sim.omega_std, "spread of natural frequencies")->capture_default_str();
    simulate_cmd->add_option("--initial-scale", sim.initial_scale, "mass-spring initial displacement range")
        ->capture_default_str();
    simulate_cmd->add_option("--pulse-node", sim.pulse_nodes, "nodes receiving an impulse");
    simulate_cmd->add_option("--force", sim.force, "impulse magnitude")->capture_default_str();
    simulate_cmd->add_option("--pulse-start", sim.pulse_start)->capture_default_str();
    simulate_cmd->add_option("--pulse-duration", sim.pulse_duration)->capture_default_str();
    simulate_cmd->add_option("--noise", sim.noise, "observation noise std added to states")->capture_default_str();

    InferArgs inf;
    auto* infer = app.add_subcommand("infer", "reconstruct a network with gc, pci or ccm");
    infer->add_option("--method", inf.method, "gc | pci | ccm")->required();
    infer->add_option("--trajectory", inf.trajectories, "trajectory files (gc pools several)");
    infer->add_option("--model", inf.model, "mass-spring | kuramoto")->capture_default_str();
    infer->add_option("--order", inf.order, "VAR order or auto")->capture_default_str();
    infer->add_option("--max-order", inf.max_order, "AIC search limit")->capture_default_str();
    infer->add_option("--alpha", inf.alpha, "FDR level")->capture_default_str();
    infer->add_option("--window", inf.window, "seconds of data to use (0: all / default)")->capture_default_str();
    infer->add_option("--network", inf.network, "true network (required for pci, scored otherwise)");
    infer->add_option("--coupling", inf.coupling)->capture_default_str();
    infer->add_option("--perturb-order", inf.perturb_order, "random | outdegree | outcloseness")
        ->capture_default_str();
    infer->add_option("--perturb-count", inf.perturb_count, "0 perturbs every node")->capture_default_str();
    infer->add_option("--force", inf.force, "impulse magnitude")->capture_default_str();
    infer->add_option("--eta", inf.eta, "activation threshold, fraction of peak")->capture_default_str();
    infer->add_option("--gap-factor", inf.gap_factor, "shell split factor")->capture_default_str();
    infer->add_option("--omega-std", inf.omega_std)->capture_default_str();
    infer->add_option("--embed-dim", inf.embed_dim)->capture_default_str();
    infer->add_option("--tau", inf.tau)->capture_default_str();
    infer->add_option("--rho", inf.rho)->capture_default_str();

    std::string config_path;
    auto* experiment = app.add_subcommand("experiment", "run a configured sweep and write the results file");
    experiment->add_option("--config", config_path, "JSON config")->required();

    ReportArgs rep;
    auto* report = app.add_subcommand("report", "summaries and heatmaps from a results file");
    report->add_option("--results", rep.results)->required();
    report->add_option("--x", rep.x, "column along the x axis")->capture_default_str();
    report->add_option("--y", rep.y, "column along the y axis")->capture_default_str();
    report->add_option("--value", rep.value)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*generate) {
            run_generate(g, gen);
        } else if (*simulate_cmd) {
            run_simulate(g, sim);
        } else if (*infer) {
            run_infer(g, inf);
        } else if (*experiment) {
            run_experiment(g, config_path, seed_opt->count() > 0);
        } else if (*report) {
            run_report(g, rep);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
