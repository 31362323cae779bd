#include "netinf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <istream>
#include <mutex>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "netinf/ccm.hpp"
#include "netinf/error.hpp"
#include "netinf/granger.hpp"
#include "netinf/netgen.hpp"
#include "netinf/pci.hpp"

namespace netinf {

using nlohmann::json;

// ---------------------------------------------------------------------------
// metrics

double accuracy(const DirectedNetwork& truth, const DirectedNetwork& predicted)
{
    const auto n = truth.size();
    if (predicted.size() != n) {
        throw ParameterError("accuracy: networks differ in size");
    }
    if (n < 2) {
        return 1.0;
    }
    std::size_t agree = 0;
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t s = 0; s < n; ++s) {
            if (s != t && truth.causes(s, t) == predicted.causes(s, t)) {
                ++agree;
            }
        }
    }
    return static_cast<double>(agree) / static_cast<double>(n * (n - 1));
}

namespace {

std::vector<std::complex<double>> sorted_spectrum(const DirectedNetwork& net)
{
    const auto n = static_cast<Eigen::Index>(net.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            a(i, j) = net.adj(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) ? 1.0 : 0.0;
        }
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(a, false);
    std::vector<std::complex<double>> ev(solver.eigenvalues().begin(), solver.eigenvalues().end());
    // round away solver noise so conjugate pairs and repeated roots order stably
    auto snap = [](double v) { return std::round(v * 1e9) / 1e9; };
    std::sort(ev.begin(), ev.end(), [&](const auto& a, const auto& b) {
        const double ar = snap(a.real());
        const double br = snap(b.real());
        if (ar != br) {
            return ar < br;
        }
        return snap(a.imag()) < snap(b.imag());
    });
    return ev;
}

} // namespace

double spectral_distance(const DirectedNetwork& truth, const DirectedNetwork& predicted)
{
    if (truth.size() != predicted.size()) {
        throw ParameterError("spectral_distance: networks differ in size");
    }
    const auto a = sorted_spectrum(truth);
    const auto b = sorted_spectrum(predicted);
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        total += std::abs(a[i] - b[i]);
    }
    return total / static_cast<double>(a.size());
}

// ---------------------------------------------------------------------------
// names

std::string to_string(ModelKind kind)
{
    return kind == ModelKind::MassSpring ? "mass-spring" : "kuramoto";
}

std::string to_string(Method method)
{
    switch (method) {
    case Method::Pci: return "pci";
    case Method::Gc: return "gc";
    case Method::Ccm: return "ccm";
    }
    return "?";
}

std::string to_string(PerturbOrder order)
{
    switch (order) {
    case PerturbOrder::Random: return "random";
    case PerturbOrder::Outdegree: return "outdegree";
    case PerturbOrder::Outcloseness: return "outcloseness";
    }
    return "?";
}

std::string to_string(GraphType type)
{
    switch (type) {
    case GraphType::ErdosRenyi: return "er";
    case GraphType::ErdosRenyiClique: return "er-clique";
    case GraphType::BarabasiAlbert: return "ba";
    }
    return "?";
}

ModelKind parse_model(const std::string& text)
{
    if (text == "mass-spring") return ModelKind::MassSpring;
    if (text == "kuramoto") return ModelKind::Kuramoto;
    throw ParameterError("unknown model '" + text + "' (mass-spring|kuramoto)");
}

Method parse_method(const std::string& text)
{
    if (text == "pci") return Method::Pci;
    if (text == "gc") return Method::Gc;
    if (text == "ccm") return Method::Ccm;
    throw ParameterError("unknown method '" + text + "' (pci|gc|ccm)");
}

PerturbOrder parse_perturb_order(const std::string& text)
{
    if (text == "random") return PerturbOrder::Random;
    if (text == "outdegree") return PerturbOrder::Outdegree;
    if (text == "outcloseness") return PerturbOrder::Outcloseness;
    throw ParameterError("unknown perturbation order '" + text + "' (random|outdegree|outcloseness)");
}

GraphType parse_graph_type(const std::string& text)
{
    if (text == "er") return GraphType::ErdosRenyi;
    if (text == "er-clique") return GraphType::ErdosRenyiClique;
    if (text == "ba") return GraphType::BarabasiAlbert;
    throw ParameterError("unknown graph type '" + text + "' (er|er-clique|ba)");
}

DirectedNetwork make_graph(const GraphSpec& spec, std::size_t n, std::uint64_t seed)
{
    switch (spec.type) {
    case GraphType::ErdosRenyi: return erdos_renyi(n, spec.p_conn, seed);
    case GraphType::ErdosRenyiClique: return erdos_renyi_with_clique(n, spec.p_conn, spec.clique, seed);
    case GraphType::BarabasiAlbert: return barabasi_albert(n, spec.ba_m, seed);
    }
    throw ParameterError("unknown graph type");
}

// ---------------------------------------------------------------------------
// configuration

void validate(const ExperimentConfig& cfg)
{
    auto positive = [](const auto& values, const char* name) {
        for (auto v : values) {
            if (!(v > 0)) {
                throw ParameterError(std::string("grid.") + name + " values must be positive");
            }
        }
    };
    positive(cfg.grid.n, "n");
    positive(cfg.grid.coupling, "coupling");
    positive(cfg.grid.force, "force");
    positive(cfg.grid.endtime, "endtime");
    if (cfg.trials < 1) {
        throw ParameterError("trials must be at least 1");
    }
    if (cfg.graph.n < 1) {
        throw ParameterError("graph.n must be positive");
    }
    if (!(cfg.sim.dt > 0.0)) {
        throw ParameterError("sim.dt must be positive");
    }
    if (cfg.method == Method::Gc && (cfg.gc.runs < 1 || !(cfg.gc.sample_interval > 0.0))) {
        throw ParameterError("gc.runs and gc.sample_interval must be positive");
    }
    if (!(cfg.pci.gap_factor > 1.0) || !(cfg.pci.eta > 0.0)) {
        throw ParameterError("pci.eta must be positive and pci.gap_factor above 1");
    }
}

namespace {

template <typename T>
void read_if(const json& obj, const char* key, T& into)
{
    if (obj.contains(key)) {
        into = obj.at(key).get<T>();
    }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where)
{
    for (const auto& [key, _] : obj.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
            throw ParameterError("config: unknown key '" + key + "' in " + where);
        }
    }
}

} // namespace

ExperimentConfig config_from_json(const std::string& text)
{
    ExperimentConfig cfg;
    try {
        const json doc = json::parse(text);
        reject_unknown(doc,
                       {"model", "graph", "grid", "method", "perturbation", "trials", "master_seed",
                        "record_wall_time", "coupling", "force", "sim", "pci", "gc", "ccm"},
                       "top level");
        if (doc.contains("model")) cfg.model = parse_model(doc["model"].get<std::string>());
        if (doc.contains("method")) cfg.method = parse_method(doc["method"].get<std::string>());
        read_if(doc, "trials", cfg.trials);
        read_if(doc, "master_seed", cfg.master_seed);
        read_if(doc, "record_wall_time", cfg.record_wall_time);
        read_if(doc, "coupling", cfg.coupling);
        read_if(doc, "force", cfg.force);
        if (doc.contains("graph")) {
            const auto& g = doc["graph"];
            reject_unknown(g, {"type", "n", "p_conn", "clique", "ba_m"}, "graph");
            if (g.contains("type")) cfg.graph.type = parse_graph_type(g["type"].get<std::string>());
            read_if(g, "n", cfg.graph.n);
            read_if(g, "p_conn", cfg.graph.p_conn);
            read_if(g, "clique", cfg.graph.clique);
            read_if(g, "ba_m", cfg.graph.ba_m);
        }
        if (doc.contains("grid")) {
            const auto& g = doc["grid"];
            reject_unknown(g, {"n", "coupling", "force", "endtime"}, "grid");
            read_if(g, "n", cfg.grid.n);
            read_if(g, "coupling", cfg.grid.coupling);
            read_if(g, "force", cfg.grid.force);
            read_if(g, "endtime", cfg.grid.endtime);
        }
        if (doc.contains("perturbation")) {
            const auto& p = doc["perturbation"];
            reject_unknown(p, {"order", "count"}, "perturbation");
            if (p.contains("order")) cfg.perturb_order = parse_perturb_order(p["order"].get<std::string>());
            read_if(p, "count", cfg.perturb_count);
        }
        if (doc.contains("sim")) {
            const auto& s = doc["sim"];
            reject_unknown(s,
                           {"dt", "mass", "damping", "spring_coupling", "omega_mean", "omega_std",
                            "pulse_duration", "settle_tol", "settle_time", "initial_scale"},
                           "sim");
            read_if(s, "dt", cfg.sim.dt);
            read_if(s, "mass", cfg.sim.mass);
            read_if(s, "damping", cfg.sim.damping);
            if (s.contains("spring_coupling")) {
                const auto mode = s["spring_coupling"].get<std::string>();
                if (mode == "laplacian") {
                    cfg.sim.spring_coupling = SpringCoupling::Laplacian;
                } else if (mode == "literal") {
                    cfg.sim.spring_coupling = SpringCoupling::Literal;
                } else {
                    throw ParameterError("sim.spring_coupling must be laplacian or literal");
                }
            }
            read_if(s, "omega_mean", cfg.sim.omega_mean);
            read_if(s, "omega_std", cfg.sim.omega_std);
            read_if(s, "pulse_duration", cfg.sim.pulse_duration);
            read_if(s, "settle_tol", cfg.sim.settle_tol);
            read_if(s, "settle_time", cfg.sim.settle_time);
            read_if(s, "initial_scale", cfg.sim.initial_scale);
        }
        if (doc.contains("pci")) {
            const auto& p = doc["pci"];
            reject_unknown(p, {"eta", "gap_factor"}, "pci");
            read_if(p, "eta", cfg.pci.eta);
            read_if(p, "gap_factor", cfg.pci.gap_factor);
        }
        if (doc.contains("gc")) {
            const auto& g = doc["gc"];
            reject_unknown(g, {"order", "max_order", "alpha", "runs", "sample_interval", "noise"}, "gc");
            if (g.contains("order")) {
                if (g["order"].is_string()) {
                    if (g["order"].get<std::string>() != "auto") {
                        throw ParameterError("gc.order must be \"auto\" or a positive integer");
                    }
                    cfg.gc.order.reset();
                } else {
                    cfg.gc.order = g["order"].get<std::size_t>();
                }
            }
            read_if(g, "max_order", cfg.gc.max_order);
            read_if(g, "alpha", cfg.gc.alpha);
            read_if(g, "runs", cfg.gc.runs);
            read_if(g, "sample_interval", cfg.gc.sample_interval);
            read_if(g, "noise", cfg.gc.noise);
        }
        if (doc.contains("ccm")) {
            const auto& c = doc["ccm"];
            reject_unknown(c, {"dim", "tau", "rho", "margin", "sample_interval"}, "ccm");
            read_if(c, "dim", cfg.ccm.dim);
            read_if(c, "tau", cfg.ccm.tau);
            read_if(c, "rho", cfg.ccm.rho);
            read_if(c, "margin", cfg.ccm.margin);
            read_if(c, "sample_interval", cfg.ccm.sample_interval);
        }
    } catch (const json::exception& e) {
        throw ParameterError(std::string("config: ") + e.what());
    }
    validate(cfg);
    return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg)
{
    json doc;
    doc["model"] = to_string(cfg.model);
    doc["method"] = to_string(cfg.method);
    doc["graph"] = {{"type", to_string(cfg.graph.type)},
                    {"n", cfg.graph.n},
                    {"p_conn", cfg.graph.p_conn},
                    {"clique", cfg.graph.clique},
                    {"ba_m", cfg.graph.ba_m}};
    doc["grid"] = {{"n", cfg.grid.n},
                   {"coupling", cfg.grid.coupling},
                   {"force", cfg.grid.force},
                   {"endtime", cfg.grid.endtime}};
    doc["perturbation"] = {{"order", to_string(cfg.perturb_order)}, {"count", cfg.perturb_count}};
    doc["trials"] = cfg.trials;
    doc["master_seed"] = cfg.master_seed;
    doc["record_wall_time"] = cfg.record_wall_time;
    doc["coupling"] = cfg.coupling;
    doc["force"] = cfg.force;
    doc["sim"] = {{"dt", cfg.sim.dt},
                  {"mass", cfg.sim.mass},
                  {"damping", cfg.sim.damping},
                  {"spring_coupling", cfg.sim.spring_coupling == SpringCoupling::Laplacian ? "laplacian" : "literal"},
                  {"omega_mean", cfg.sim.omega_mean},
                  {"omega_std", cfg.sim.omega_std},
                  {"pulse_duration", cfg.sim.pulse_duration},
                  {"settle_tol", cfg.sim.settle_tol},
                  {"settle_time", cfg.sim.settle_time},
                  {"initial_scale", cfg.sim.initial_scale}};
    doc["pci"] = {{"eta", cfg.pci.eta}, {"gap_factor", cfg.pci.gap_factor}};
    json gc = {{"max_order", cfg.gc.max_order},
               {"alpha", cfg.gc.alpha},
               {"runs", cfg.gc.runs},
               {"sample_interval", cfg.gc.sample_interval},
               {"noise", cfg.gc.noise}};
    if (cfg.gc.order) {
        gc["order"] = *cfg.gc.order;
    } else {
        gc["order"] = "auto";
    }
    doc["gc"] = gc;
    doc["ccm"] = {{"dim", cfg.ccm.dim},
                  {"tau", cfg.ccm.tau},
                  {"rho", cfg.ccm.rho},
                  {"margin", cfg.ccm.margin},
                  {"sample_interval", cfg.ccm.sample_interval}};
    return doc.dump(2) + "\n";
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParameterError("cannot open config file " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_json(buf.str());
}

std::vector<Cell> enumerate_cells(const ExperimentConfig& cfg)
{
    const auto ns = cfg.grid.n.empty() ? std::vector<std::size_t>{cfg.graph.n} : cfg.grid.n;
    const auto ks = cfg.grid.coupling.empty() ? std::vector<double>{cfg.coupling} : cfg.grid.coupling;
    const auto fs = cfg.grid.force.empty() ? std::vector<double>{cfg.force} : cfg.grid.force;
    const auto ts = cfg.grid.endtime.empty() ? std::vector<double>{0.0} : cfg.grid.endtime;
    std::vector<Cell> cells;
    for (auto n : ns) {
        for (auto k : ks) {
            for (auto f : fs) {
                for (auto t : ts) {
                    cells.push_back({n, k, f, t});
                }
            }
        }
    }
    return cells;
}

// ---------------------------------------------------------------------------
// trials

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b)
{
    // splitmix64 finaliser over a combined state
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL + (b * 0xbf58476d1ce4e5b9ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t trial_seed(std::uint64_t master_seed, const Cell& cell, std::size_t trial)
{
    std::uint64_t h = mix_seed(master_seed, cell.n);
    h = mix_seed(h, std::bit_cast<std::uint64_t>(cell.coupling));
    h = mix_seed(h, std::bit_cast<std::uint64_t>(cell.force));
    h = mix_seed(h, std::bit_cast<std::uint64_t>(cell.endtime));
    return mix_seed(h, trial);
}

std::vector<double> draw_frequencies(std::size_t n, double mean, double std_dev, std::uint64_t seed)
{
    std::vector<double> omega(n, mean);
    if (std_dev > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(mean, std_dev);
        for (auto& w : omega) {
            w = normal(rng);
        }
    }
    return omega;
}

double default_gc_window(std::size_t n, double coupling)
{
    return 4.5 * static_cast<double>(n) / coupling;
}

namespace {

enum SeedStream : std::uint64_t {
    kGraphStream = 1,
    kOmegaStream = 2,
    kInitialStream = 3,
    kOrderStream = 4,
    kRunStream = 5,
    kNoiseStream = 6,
    kLibraryStream = 7,
};

std::size_t record_stride(double interval, double dt)
{
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(interval / dt)));
}

double snap_to_grid(double duration, double dt)
{
    return std::max(1.0, std::round(duration / dt)) * dt;
}

OscillatorState initial_state(const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed)
{
    if (cfg.model == ModelKind::Kuramoto) {
        return random_initial_state(n, std::numbers::pi, seed, true);
    }
    return random_initial_state(n, 0.0, seed);
}

std::vector<std::size_t> perturbation_order(const ExperimentConfig& cfg, const DirectedNetwork& net,
                                            std::uint64_t seed)
{
    switch (cfg.perturb_order) {
    case PerturbOrder::Random: return random_order(net.size(), mix_seed(seed, kOrderStream));
    case PerturbOrder::Outdegree: return outdegree_order(net);
    case PerturbOrder::Outcloseness: return outcloseness_order(net);
    }
    return {};
}

std::size_t perturbation_count(const ExperimentConfig& cfg, std::size_t n)
{
    return cfg.perturb_count == 0 ? n : std::min(cfg.perturb_count, n);
}

PerturbationProtocol protocol_for(const ExperimentConfig& cfg, const Cell& cell)
{
    PerturbationProtocol proto;
    proto.force = cell.force;
    proto.pulse_duration = cfg.sim.pulse_duration;
    proto.window = cell.endtime;
    proto.dt = cfg.sim.dt;
    proto.settle_tol = cfg.sim.settle_tol;
    proto.settle_time = cfg.sim.settle_time;
    proto.eta = cfg.pci.eta;
    proto.gap_factor = cfg.pci.gap_factor;
    return proto;
}

DirectedNetwork infer_pci(const ExperimentConfig& cfg, const OscillatorModel& model, const Cell& cell,
                          std::uint64_t seed, ExperimentRecord& rec)
{
    const auto& net = network_of(model);
    SimulatedShells observer(model, initial_state(cfg, net.size(), mix_seed(seed, kInitialStream)),
                             protocol_for(cfg, cell));
    const auto order = perturbation_order(cfg, net, seed);
    const auto result = pci_infer(observer, order, perturbation_count(cfg, net.size()));
    rec.perturbations_used = result.perturbed.size();
    rec.failed_perturbations = result.failures.size();
    // nothing observed: the prior-only graph is not a prediction
    if (result.perturbed.empty() && !result.failures.empty()) {
        throw std::runtime_error("every perturbation failed; first: " + result.failures.front().reason);
    }
    return result.network;
}

DirectedNetwork infer_gc(const ExperimentConfig& cfg, const OscillatorModel& model, const Cell& cell,
                         std::uint64_t seed)
{
    const auto runs = gc_observations(cfg, model, cell, seed);
    GcOptions opts;
    opts.order = cfg.gc.order;
    opts.max_order = cfg.gc.max_order;
    opts.alpha = cfg.gc.alpha;
    return gc_infer_network(runs, opts).network;
}

// One continuous record: settle, then pulse each scheduled node in turn, one
// observation window apart. Kuramoto phases are detrended by the common settled frequency.
DirectedNetwork infer_ccm(const ExperimentConfig& cfg, const OscillatorModel& model, const Cell& cell,
                          std::uint64_t seed, ExperimentRecord& rec)
{
    const auto& net = network_of(model);
    const auto n = net.size();
    const auto proto = protocol_for(cfg, cell);
    const double window =
        snap_to_grid(proto.window > 0.0 ? proto.window : default_observation_window(model), cfg.sim.dt);
    const auto settled = settle_to_steady_state(
        model, initial_state(cfg, n, mix_seed(seed, kInitialStream)), proto.settle_tol, proto.settle_time, proto.dt);

    const auto order = perturbation_order(cfg, net, seed);
    const auto count = perturbation_count(cfg, n);
    std::vector<ForcingSpec> pulses;
    for (std::size_t i = 0; i < count; ++i) {
        pulses.push_back(impulse_forcing(order[i], cell.force, static_cast<double>(i) * window, proto.pulse_duration));
    }
    const double span = window * static_cast<double>(std::max<std::size_t>(count, 1));
    const auto traj = simulate(model, pulses, settled.state,
                               TimeGrid{0.0, span, cfg.sim.dt, record_stride(cfg.ccm.sample_interval, cfg.sim.dt)});
    Eigen::MatrixXd series = traj.states;
    if (cfg.model == ModelKind::Kuramoto) {
        const double drift = settled.rate.mean();
        for (std::size_t s = 0; s < traj.samples(); ++s) {
            series.col(static_cast<Eigen::Index>(s)).array() -= drift * traj.times[s];
        }
    }
    CcmOptions opts;
    opts.dim = cfg.ccm.dim;
    opts.tau = cfg.ccm.tau;
    opts.rho_threshold = cfg.ccm.rho;
    opts.convergence_margin = cfg.ccm.margin;
    opts.seed = mix_seed(seed, kLibraryStream);
    rec.perturbations_used = count;
    return ccm_infer_network(series, opts).network;
}

std::string sanitize(std::string text)
{
    for (auto& c : text) {
        if (c == ',' || c == '\n' || c == '\r') {
            c = ';';
        }
    }
    return text;
}

} // namespace

OscillatorModel make_model(const ExperimentConfig& cfg, const DirectedNetwork& net, const Cell& cell,
                           std::uint64_t seed)
{
    if (cfg.model == ModelKind::MassSpring) {
        MassSpringParams p;
        p.mass = cfg.sim.mass;
        p.damping = cfg.sim.damping;
        p.spring = cell.coupling;
        p.coupling = cfg.sim.spring_coupling;
        return MassSpringModel{net, p};
    }
    KuramotoParams p;
    p.coupling = cell.coupling;
    p.omega = draw_frequencies(net.size(), cfg.sim.omega_mean, cfg.sim.omega_std, mix_seed(seed, kOmegaStream));
    return KuramotoModel{net, p};
}

std::vector<Eigen::MatrixXd> gc_observations(const ExperimentConfig& cfg, const OscillatorModel& model,
                                             const Cell& cell, std::uint64_t seed)
{
    const auto n = network_of(model).size();
    double window = cell.endtime;
    if (window <= 0.0) {
        // the 4.5 n / K law is a phase-locking time; a mass-spring network rings down instead
        window = cfg.model == ModelKind::Kuramoto ? default_gc_window(n, cell.coupling)
                                                  : default_observation_window(model);
    }
    window = snap_to_grid(window, cfg.sim.dt);
    const auto stride = record_stride(cfg.gc.sample_interval, cfg.sim.dt);
    std::vector<Eigen::MatrixXd> runs;
    runs.reserve(cfg.gc.runs);
    std::mt19937_64 noise_rng(mix_seed(seed, kNoiseStream));
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t r = 0; r < cfg.gc.runs; ++r) {
        const auto run_seed = mix_seed(mix_seed(seed, kRunStream), r);
        OscillatorState start = cfg.model == ModelKind::Kuramoto
                                    ? random_initial_state(n, std::numbers::pi, run_seed, true)
                                    : random_initial_state(n, cfg.sim.initial_scale, run_seed);
        auto traj = simulate(model, {}, start, TimeGrid{0.0, window, cfg.sim.dt, stride});
        Eigen::MatrixXd obs = std::move(traj.states);
        if (cfg.gc.noise > 0.0) {
            for (Eigen::Index c = 0; c < obs.cols(); ++c) {
                for (Eigen::Index i = 0; i < obs.rows(); ++i) {
                    obs(i, c) += cfg.gc.noise * noise(noise_rng);
                }
            }
        }
        runs.push_back(std::move(obs));
    }
    return runs;
}

ExperimentRecord run_trial(const ExperimentConfig& cfg, const Cell& cell, std::size_t trial_index)
{
    const auto started = std::chrono::steady_clock::now();
    ExperimentRecord rec;
    rec.model = cfg.model;
    rec.graph_type = cfg.graph.type;
    rec.cell = cell;
    rec.method = cfg.method;
    rec.perturb_order = cfg.perturb_order;
    rec.perturb_count = perturbation_count(cfg, cell.n);
    rec.trial = trial_index;
    rec.seed = trial_seed(cfg.master_seed, cell, trial_index);
    try {
        const auto truth = make_graph(cfg.graph, cell.n, mix_seed(rec.seed, kGraphStream));
        const auto model = make_model(cfg, truth, cell, rec.seed);
        DirectedNetwork predicted(cell.n);
        switch (cfg.method) {
        case Method::Pci: predicted = infer_pci(cfg, model, cell, rec.seed, rec); break;
        case Method::Gc: predicted = infer_gc(cfg, model, cell, rec.seed); break;
        case Method::Ccm: predicted = infer_ccm(cfg, model, cell, rec.seed, rec); break;
        }
        rec.accuracy = accuracy(truth, predicted);
        rec.spectral_distance = spectral_distance(truth, predicted);
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.status = "failed: " + sanitize(e.what());
        rec.accuracy = std::numeric_limits<double>::quiet_NaN();
        rec.spectral_distance = std::numeric_limits<double>::quiet_NaN();
    }
    if (cfg.record_wall_time) {
        rec.wall_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    return rec;
}

// ---------------------------------------------------------------------------
// results files

const char* const kResultsHeader =
    "model,graph_type,n,coupling,force,endtime,method,perturb_order,perturb_count,trial,seed,accuracy,"
    "spectral_distance,wall_secs,status";

void write_results_header(std::ostream& out)
{
    out << kResultsHeader << '\n';
}

std::string format_record(const ExperimentRecord& rec)
{
    std::ostringstream os;
    os << to_string(rec.model) << ',' << to_string(rec.graph_type) << ',' << rec.cell.n << ','
       << format_double(rec.cell.coupling) << ',' << format_double(rec.cell.force) << ','
       << format_double(rec.cell.endtime) << ',' << to_string(rec.method) << ',' << to_string(rec.perturb_order)
       << ',' << rec.perturb_count << ',' << rec.trial << ',' << rec.seed << ','
       << (rec.ok ? format_double(rec.accuracy) : "nan") << ','
       << (rec.ok ? format_double(rec.spectral_distance) : "nan") << ',' << format_double(rec.wall_secs) << ','
       << rec.status;
    return os.str();
}

std::vector<ExperimentRecord> run_sweep(const ExperimentConfig& cfg, const SweepOptions& options)
{
    validate(cfg);
    const auto cells = enumerate_cells(cfg);
    const auto total = cells.size() * cfg.trials;
    std::vector<std::optional<ExperimentRecord>> slots(total);
    std::atomic<std::size_t> next{0};
    std::mutex flush_mutex;
    std::size_t flushed = 0;

    if (options.out != nullptr) {
        write_results_header(*options.out);
    }
    // Completed records are written as soon as every earlier (cell, trial) is done.
    auto worker = [&] {
        while (true) {
            const auto job = next.fetch_add(1);
            if (job >= total) {
                return;
            }
            auto rec = run_trial(cfg, cells[job / cfg.trials], job % cfg.trials);
            std::lock_guard lock(flush_mutex);
            slots[job] = std::move(rec);
            while (flushed < total && slots[flushed]) {
                if (options.out != nullptr) {
                    *options.out << format_record(*slots[flushed]) << '\n';
                    options.out->flush();
                }
                ++flushed;
            }
        }
    };
    const auto threads = std::max<std::size_t>(1, std::min(options.threads, total));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }

    std::vector<ExperimentRecord> records;
    records.reserve(total);
    std::size_t failed = 0;
    for (auto& slot : slots) {
        failed += slot->ok ? 0 : 1;
        records.push_back(std::move(*slot));
    }
    if (options.out != nullptr) {
        *options.out << "# trials=" << total << " failed=" << failed << '\n';
        options.out->flush();
    }
    return records;
}

ResultRow to_row(const ExperimentRecord& rec)
{
    std::istringstream header(kResultsHeader);
    std::istringstream line(format_record(rec));
    ResultRow row;
    std::string key;
    std::string value;
    while (std::getline(header, key, ',')) {
        std::getline(line, value, ',');
        row[key] = value;
    }
    return row;
}

std::vector<ResultRow> read_results_csv(std::istream& in)
{
    std::string line;
    std::vector<std::string> header;
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (header.empty()) {
            header = std::move(cells);
            continue;
        }
        if (cells.size() != header.size()) {
            throw ParameterError("results file: row has " + std::to_string(cells.size()) + " fields, expected " +
                                 std::to_string(header.size()));
        }
        ResultRow row;
        for (std::size_t i = 0; i < header.size(); ++i) {
            row[header[i]] = cells[i];
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// summaries

SummaryTable summarize(const std::vector<ResultRow>& rows, const std::vector<std::string>& keys,
                       const std::string& value)
{
    if (rows.empty()) {
        throw ParameterError("summarize: no records");
    }
    SummaryTable table;
    table.keys = keys;
    table.value = value;
    std::vector<std::vector<double>> samples;
    for (const auto& row : rows) {
        std::vector<std::string> key;
        for (const auto& k : keys) {
            const auto it = row.find(k);
            if (it == row.end()) {
                throw ParameterError("summarize: unknown key '" + k + "'");
            }
            key.push_back(it->second);
        }
        auto found = std::find_if(table.rows.begin(), table.rows.end(), [&](const auto& r) { return r.key == key; });
        if (found == table.rows.end()) {
            table.rows.push_back({key, 0.0, 0.0, 0, 0});
            samples.emplace_back();
            found = table.rows.end() - 1;
        }
        const auto idx = static_cast<std::size_t>(found - table.rows.begin());
        const auto status = row.find("status");
        const auto val = row.find(value);
        if (val == row.end()) {
            throw ParameterError("summarize: unknown value column '" + value + "'");
        }
        double v = std::numeric_limits<double>::quiet_NaN();
        try {
            v = std::stod(val->second);
        } catch (const std::exception&) {
        }
        const bool ok = (status == row.end() || status->second == "ok") && std::isfinite(v);
        if (ok) {
            samples[idx].push_back(v);
        } else {
            ++table.rows[idx].failed;
        }
    }
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& xs = samples[i];
        auto& r = table.rows[i];
        r.count = xs.size();
        if (xs.empty()) {
            continue;
        }
        double mean = 0.0;
        for (double x : xs) {
            mean += x;
        }
        mean /= static_cast<double>(xs.size());
        double ss = 0.0;
        for (double x : xs) {
            ss += (x - mean) * (x - mean);
        }
        r.mean = mean;
        r.std_dev = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
    }
    return table;
}

void write_summary_csv(std::ostream& out, const SummaryTable& table)
{
    for (const auto& k : table.keys) {
        out << k << ',';
    }
    out << "mean,std,count,failed\n";
    for (const auto& r : table.rows) {
        for (const auto& k : r.key) {
            out << k << ',';
        }
        out << format_double(r.mean) << ',' << format_double(r.std_dev) << ',' << r.count << ',' << r.failed << '\n';
    }
}

namespace {

std::vector<std::string> axis_values(const SummaryTable& table, std::size_t col)
{
    std::vector<std::string> values;
    for (const auto& r : table.rows) {
        if (std::find(values.begin(), values.end(), r.key[col]) == values.end()) {
            values.push_back(r.key[col]);
        }
    }
    const bool numeric = std::all_of(values.begin(), values.end(), [](const std::string& s) {
        char* end = nullptr;
        std::strtod(s.c_str(), &end);
        return !s.empty() && end == s.c_str() + s.size();
    });
    if (numeric) {
        std::stable_sort(values.begin(), values.end(),
                         [](const auto& a, const auto& b) { return std::stod(a) < std::stod(b); });
    }
    return values;
}

std::string fixed(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string escape_xml(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

// light (0.5) to dark blue (1.0)
std::string cell_colour(double value, bool& dark)
{
    const double u = std::clamp((value - 0.5) / 0.5, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(247 + (8 - 247) * u));
    const int g = static_cast<int>(std::lround(251 + (48 - 251) * u));
    const int b = static_cast<int>(std::lround(255 + (107 - 255) * u));
    dark = u > 0.55;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

} // namespace

std::string render_heatmap(const SummaryTable& table, const std::string& x_key, const std::string& y_key,
                           const std::string& title)
{
    const auto xi = std::find(table.keys.begin(), table.keys.end(), x_key);
    const auto yi = std::find(table.keys.begin(), table.keys.end(), y_key);
    if (xi == table.keys.end() || yi == table.keys.end()) {
        throw ParameterError("render_heatmap: table lacks key '" + (xi == table.keys.end() ? x_key : y_key) + "'");
    }
    const auto xc = static_cast<std::size_t>(xi - table.keys.begin());
    const auto yc = static_cast<std::size_t>(yi - table.keys.begin());
    const auto xs = axis_values(table, xc);
    const auto ys = axis_values(table, yc);

    constexpr int cw = 64;
    constexpr int ch = 40;
    constexpr int left = 90;
    constexpr int top = 50;
    const int width = std::max(320, left + cw * static_cast<int>(xs.size()) + 20);
    const int height = top + ch * static_cast<int>(ys.size()) + 60;

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\">\n"
        << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"#ffffff\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << escape_xml(title.empty() ? table.value : title) << "</text>\n";

    // y values grow upwards
    for (std::size_t row = 0; row < ys.size(); ++row) {
        const int y = top + ch * static_cast<int>(ys.size() - 1 - row);
        svg << "<text x=\"" << left - 8 << "\" y=\"" << y + ch / 2 + 4
            << "\" text-anchor=\"end\" font-size=\"12\">" << escape_xml(ys[row]) << "</text>\n";
        for (std::size_t col = 0; col < xs.size(); ++col) {
            const int x = left + cw * static_cast<int>(col);
            const auto hit = std::find_if(table.rows.begin(), table.rows.end(), [&](const SummaryRow& r) {
                return r.key[xc] == xs[col] && r.key[yc] == ys[row];
            });
            if (hit == table.rows.end() || hit->count == 0) {
                svg << "<rect x=\"" << x + 1 << "\" y=\"" << y + 1 << "\" width=\"" << cw - 2 << "\" height=\""
                    << ch - 2 << "\" fill=\"none\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";
                continue;
            }
            bool dark = false;
            const auto colour = cell_colour(hit->mean, dark);
            svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw << "\" height=\"" << ch
                << "\" fill=\"" << colour << "\" stroke=\"#ffffff\"/>\n";
            svg << "<text x=\"" << x + cw / 2 << "\" y=\"" << y + ch / 2 + 4
                << "\" text-anchor=\"middle\" font-size=\"12\" fill=\"" << (dark ? "#ffffff" : "#000000") << "\">"
                << fixed(hit->mean, 2) << "</text>\n";
        }
    }
    const int axis_y = top + ch * static_cast<int>(ys.size());
    for (std::size_t col = 0; col < xs.size(); ++col) {
        svg << "<text x=\"" << left + cw * static_cast<int>(col) + cw / 2 << "\" y=\"" << axis_y + 18
            << "\" text-anchor=\"middle\" font-size=\"12\">" << escape_xml(xs[col]) << "</text>\n";
    }
    svg << "<text x=\"" << left + cw * static_cast<int>(xs.size()) / 2 << "\" y=\"" << axis_y + 42
        << "\" text-anchor=\"middle\" font-size=\"13\">" << escape_xml(x_key) << "</text>\n";
    svg << "<text x=\"16\" y=\"" << top + ch * static_cast<int>(ys.size()) / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
        << top + ch * static_cast<int>(ys.size()) / 2 << ")\">" << escape_xml(y_key) << "</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

} // namespace netinf
