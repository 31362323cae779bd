#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "netinf/network.hpp"

namespace netinf {

enum class ModelKind { MassSpring, Kuramoto };

/// How the spring network acts on displacements.
enum class SpringCoupling {
    /// Hooke coupling k * sum_j adj[i][j] (x_j - x_i), walls add -k x.
    Laplacian,
    /// Literal k * adj * x with no restoring diagonal (walls still add -k x).
    Literal,
};

struct MassSpringParams {
    double mass = 1.0;
    double damping = 0.25;
    double spring = 1.0;
    bool wall_first = true; ///< node 0 attached to a wall
    bool wall_last = true;  ///< node n-1 attached to a wall
    SpringCoupling coupling = SpringCoupling::Laplacian;
};

struct KuramotoParams {
    double coupling = 1.0;
    std::vector<double> omega; ///< natural frequencies, rad/s
};

/// Rectangular pulse on one node: active on [t_start, t_start + duration).
struct ForcingSpec {
    std::size_t node = 0;
    double magnitude = 0.0;
    double t_start = 0.0;
    double duration = 0.5;

    bool active(double t) const { return t >= t_start && t < t_start + duration; }
};

ForcingSpec impulse_forcing(std::size_t node, double magnitude, double t_start, double duration);

/// Sum of all active pulses, per node.
Eigen::VectorXd forcing_at(const std::vector<ForcingSpec>& forcings, std::size_t n, double t);

/// Uniformly sampled oscillator states (displacements or phases) and their rates.
struct Trajectory {
    ModelKind kind = ModelKind::MassSpring;
    std::vector<double> times;
    Eigen::MatrixXd states; ///< n x T
    Eigen::MatrixXd rates;  ///< n x T

    std::size_t nodes() const { return static_cast<std::size_t>(states.rows()); }
    std::size_t samples() const { return times.size(); }
    double step() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }

    /// Samples with times[0] <= t <= times[0] + duration (to within half a step).
    Trajectory head(double duration) const;
    /// Samples from index `first` on.
    Trajectory tail_from(std::size_t first) const;
};

/// Positions (displacements or phases) and velocities of every oscillator.
struct OscillatorState {
    Eigen::VectorXd position;
    Eigen::VectorXd velocity; ///< ignored by the Kuramoto model
};

struct MassSpringModel {
    DirectedNetwork net;
    MassSpringParams params;
};

struct KuramotoModel {
    DirectedNetwork net;
    KuramotoParams params;
};

using OscillatorModel = std::variant<MassSpringModel, KuramotoModel>;

ModelKind kind_of(const OscillatorModel& model);
const DirectedNetwork& network_of(const OscillatorModel& model);

/// Integration grid: fixed RK4 step `dt` from t_begin to t_end, storing every
/// `record_every`-th step (the first sample is always stored).
struct TimeGrid {
    double t_begin = 0.0;
    double t_end = 1.0;
    double dt = 1e-2;
    std::size_t record_every = 1;
};

/// Directed spring operator L with wall terms, so that m x'' = k L x - c x' + f.
Eigen::MatrixXd spring_operator(const DirectedNetwork& net, const MassSpringParams& params);

Trajectory simulate_mass_spring(const DirectedNetwork& net, const MassSpringParams& params,
                                const std::vector<ForcingSpec>& forcings,
                                const Eigen::VectorXd& x0, const Eigen::VectorXd& v0,
                                double t_end, double dt);
Trajectory simulate_mass_spring(const MassSpringModel& model, const std::vector<ForcingSpec>& forcings,
                                const OscillatorState& start, const TimeGrid& grid);

Trajectory simulate_kuramoto(const DirectedNetwork& net, const KuramotoParams& params,
                             const std::vector<ForcingSpec>& forcings,
                             const Eigen::VectorXd& theta0, double t_end, double dt);
Trajectory simulate_kuramoto(const KuramotoModel& model, const std::vector<ForcingSpec>& forcings,
                             const OscillatorState& start, const TimeGrid& grid);

Trajectory simulate(const OscillatorModel& model, const std::vector<ForcingSpec>& forcings,
                    const OscillatorState& start, const TimeGrid& grid);

/// Uniform draws in [-scale, scale]; velocities zero. With `phases`, values
/// are wrapped into [0, 2*pi) when scale exceeds pi.
OscillatorState random_initial_state(std::size_t n, double scale, std::uint64_t seed, bool phases = false);

/// Mass-spring: max |x_i| and |v_i| below tol. Kuramoto: spread of
/// instantaneous frequencies below tol.
bool settled(ModelKind kind, const Eigen::VectorXd& state, const Eigen::VectorXd& rate, double tol);

struct SettleResult {
    OscillatorState state;
    Eigen::VectorXd rate; ///< velocities or instantaneous frequencies at settle time
    double time = 0.0;
    bool settled = false;
};

SettleResult settle_to_steady_state(const OscillatorModel& model, const OscillatorState& start,
                                    double tol, double t_max, double dt = 1e-2);

/// Earliest time (relative to the first sample) after which the settle
/// criterion holds for every remaining sample; +infinity if it never does.
double estimate_transient_time(const Trajectory& traj, double tol);

/// Kuramoto order parameter |mean(exp(i theta))|.
double order_parameter(const Eigen::VectorXd& phases);

/// CSV with header t,x_0..x_{n-1},v_0..v_{n-1}; shortest round-trip decimals.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& in, ModelKind kind = ModelKind::MassSpring);
void save_trajectory(const Trajectory& traj, const std::string& path);
Trajectory load_trajectory(const std::string& path, ModelKind kind = ModelKind::MassSpring);

std::string format_double(double value);

} // namespace netinf
