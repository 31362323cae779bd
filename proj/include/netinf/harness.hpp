#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netinf/dynsim.hpp"
#include "netinf/network.hpp"

namespace netinf {

/// Off-diagonal agreement fraction, n (n - 1) positions.
double accuracy(const DirectedNetwork& truth, const DirectedNetwork& predicted);

/// Mean absolute difference of the two adjacency spectra, each sorted by
/// (real, imaginary).
double spectral_distance(const DirectedNetwork& truth, const DirectedNetwork& predicted);

enum class Method { Pci, Gc, Ccm };
enum class PerturbOrder { Random, Outdegree, Outcloseness };
enum class GraphType { ErdosRenyi, ErdosRenyiClique, BarabasiAlbert };

std::string to_string(ModelKind kind);
std::string to_string(Method method);
std::string to_string(PerturbOrder order);
std::string to_string(GraphType type);
ModelKind parse_model(const std::string& text);
Method parse_method(const std::string& text);
PerturbOrder parse_perturb_order(const std::string& text);
GraphType parse_graph_type(const std::string& text);

struct GraphSpec {
    GraphType type = GraphType::ErdosRenyi;
    std::size_t n = 5;
    double p_conn = 0.5;
    std::size_t clique = 8;
    std::size_t ba_m = 2;
};

DirectedNetwork make_graph(const GraphSpec& spec, std::size_t n, std::uint64_t seed);

/// Sweep axes. An empty axis falls back to the scalar default.
struct SweepGrid {
    std::vector<std::size_t> n;
    std::vector<double> coupling;
    std::vector<double> force;
    std::vector<double> endtime;
};

struct SimSettings {
    double dt = 1e-2;
    double mass = 1.0;
    double damping = 0.25;
    SpringCoupling spring_coupling = SpringCoupling::Laplacian;
    double omega_mean = 0.0;
    double omega_std = 1.0;
    double pulse_duration = 0.5;
    double settle_tol = 1e-6;
    double settle_time = 60.0;
    double initial_scale = 1.0; ///< displacement scale for randomized mass-spring starts
};

struct PciSettings {
    double eta = 0.05;
    double gap_factor = 2.0;
};

struct GcSettings {
    std::optional<std::size_t> order; ///< nullopt: AIC selection
    std::size_t max_order = 8;
    double alpha = 0.05;
    std::size_t runs = 10;          ///< randomized initial conditions per trial
    double sample_interval = 0.1;   ///< seconds between observations
    double noise = 0.03;            ///< observation noise standard deviation
};

struct CcmSettings {
    std::size_t dim = 3;
    std::size_t tau = 1;
    double rho = 0.7;
    double margin = 0.05;
    double sample_interval = 0.05;
};

struct ExperimentConfig {
    ModelKind model = ModelKind::MassSpring;
    GraphSpec graph;
    SweepGrid grid;
    Method method = Method::Pci;
    PerturbOrder perturb_order = PerturbOrder::Random;
    std::size_t perturb_count = 0; ///< 0 perturbs every node
    std::size_t trials = 20;
    std::uint64_t master_seed = 1;
    bool record_wall_time = false;
    double coupling = 1.0; ///< used when grid.coupling is empty
    double force = 50.0;   ///< used when grid.force is empty
    SimSettings sim;
    PciSettings pci;
    GcSettings gc;
    CcmSettings ccm;
};

void validate(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

/// One point of the sweep grid. endtime 0 means the method default.
struct Cell {
    std::size_t n = 5;
    double coupling = 1.0;
    double force = 50.0;
    double endtime = 0.0;
};

/// Cartesian product of the grid axes, n outermost then coupling, force, endtime.
std::vector<Cell> enumerate_cells(const ExperimentConfig& cfg);

struct ExperimentRecord {
    ModelKind model = ModelKind::MassSpring;
    GraphType graph_type = GraphType::ErdosRenyi;
    Cell cell;
    Method method = Method::Pci;
    PerturbOrder perturb_order = PerturbOrder::Random;
    std::size_t perturb_count = 0;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    double spectral_distance = 0.0;
    double wall_secs = 0.0;
    bool ok = true;
    std::string status = "ok";
    std::size_t perturbations_used = 0;
    std::size_t failed_perturbations = 0;
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t trial_seed(std::uint64_t master_seed, const Cell& cell, std::size_t trial);

/// Natural frequencies drawn from the configured normal distribution.
std::vector<double> draw_frequencies(std::size_t n, double mean, double std_dev, std::uint64_t seed);

/// Kuramoto GC window default, 4.5 n / coupling. Mass-spring runs use the ring-down time.
double default_gc_window(std::size_t n, double coupling);

/// Builds the oscillator model for a cell.
OscillatorModel make_model(const ExperimentConfig& cfg, const DirectedNetwork& net, const Cell& cell,
                           std::uint64_t seed);

/// Randomized-initial-condition runs sampled for GC, each n x T.
std::vector<Eigen::MatrixXd> gc_observations(const ExperimentConfig& cfg, const OscillatorModel& model,
                                             const Cell& cell, std::uint64_t seed);

ExperimentRecord run_trial(const ExperimentConfig& cfg, const Cell& cell, std::size_t trial_index);

extern const char* const kResultsHeader;
std::string format_record(const ExperimentRecord& rec);
void write_results_header(std::ostream& out);

struct SweepOptions {
    std::size_t threads = 1;
    std::ostream* out = nullptr; ///< receives CSV rows in (cell, trial) order as they complete
};

std::vector<ExperimentRecord> run_sweep(const ExperimentConfig& cfg, const SweepOptions& options = {});

/// Parsed results row, keyed by column name.
using ResultRow = std::map<std::string, std::string>;
std::vector<ResultRow> read_results_csv(std::istream& in);
ResultRow to_row(const ExperimentRecord& rec);

struct SummaryRow {
    std::vector<std::string> key;
    double mean = 0.0;
    double std_dev = 0.0; ///< sample (n - 1) standard deviation, 0 for a single record
    std::size_t count = 0;
    std::size_t failed = 0;
};

struct SummaryTable {
    std::vector<std::string> keys;
    std::string value;
    std::vector<SummaryRow> rows;
};

SummaryTable summarize(const std::vector<ResultRow>& rows, const std::vector<std::string>& keys,
                       const std::string& value = "accuracy");
void write_summary_csv(std::ostream& out, const SummaryTable& table);

/// Standalone SVG heatmap of the summary means; colour scale anchored at [0.5, 1].
std::string render_heatmap(const SummaryTable& table, const std::string& x_key, const std::string& y_key,
                           const std::string& title = "");

} // namespace netinf
