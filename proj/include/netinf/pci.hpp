#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netinf/dynsim.hpp"
#include "netinf/network.hpp"

namespace netinf {

/// Belief that x causes y, stored as probs(x, y). Off-diagonal entries stay in (0, 1].
class EdgeProbabilityMatrix {
public:
    explicit EdgeProbabilityMatrix(std::size_t n);

    std::size_t size() const noexcept { return static_cast<std::size_t>(probs_.rows()); }
    double operator()(std::size_t source, std::size_t target) const
    {
        return probs_(static_cast<Eigen::Index>(source), static_cast<Eigen::Index>(target));
    }
    double& operator()(std::size_t source, std::size_t target)
    {
        return probs_(static_cast<Eigen::Index>(source), static_cast<Eigen::Index>(target));
    }
    const Eigen::MatrixXd& matrix() const noexcept { return probs_; }

    /// Edge source -> target kept when its probability is strictly above `threshold`.
    DirectedNetwork threshold(double threshold = 0.5) const;

private:
    Eigen::MatrixXd probs_;
};

/// Activation times after a pulse at `perturbed`, measured from pulse onset.
struct ActivationRecord {
    static constexpr double never = std::numeric_limits<double>::infinity();

    std::size_t perturbed = 0;
    std::vector<double> times;
    double window = 0.0;
};

/// Pre-pulse reference: s_i(t) = |state_i(t) - value_i - drift_i (t - t_onset)|.
struct ResponseBaseline {
    Eigen::VectorXd value;
    Eigen::VectorXd drift; ///< zero for mass-spring; the synchronized frequency for Kuramoto
    bool circular = false; ///< wrap deviations into (-pi, pi] (phases)
};

/// First threshold crossing of each node's deviation from its baseline,
/// with threshold eta * max_t s_p(t). The trajectory must start at pulse onset.
ActivationRecord detect_activation_times(const Trajectory& traj, const ResponseBaseline& baseline,
                                         std::size_t perturbed, double eta);

/// Groups finite activation times into shells, splitting wherever the gap
/// between consecutive sorted times exceeds t_first / gap_factor, t_first being
/// the earliest activation after onset. Never-activated nodes go to D_inf.
DistanceSets build_distance_sets(const ActivationRecord& record, double gap_factor);

/// One round of the cascade update for a pulse at `perturbed`, reading every
/// prior from a snapshot taken on entry.
EdgeProbabilityMatrix pci_update(const EdgeProbabilityMatrix& probs, std::size_t perturbed,
                                 const DistanceSets& sets);

/// Something that can be pulsed at a node and report the resulting shells.
class ShellObserver {
public:
    virtual ~ShellObserver() = default;
    virtual std::size_t size() const = 0;
    virtual DistanceSets observe(std::size_t perturbed) = 0;
};

/// Exact shells from breadth-first search on a known network.
class OracleShells final : public ShellObserver {
public:
    explicit OracleShells(DirectedNetwork net) : net_(std::move(net)) {}
    std::size_t size() const override { return net_.size(); }
    DistanceSets observe(std::size_t perturbed) override { return bfs_distance_sets(net_, perturbed); }

private:
    DirectedNetwork net_;
};

struct PerturbationProtocol {
    double force = 50.0;
    double pulse_duration = 0.5;
    /// Observation window after onset; <= 0 picks the model default.
    double window = 0.0;
    double dt = 1e-2;
    double settle_tol = 1e-6;
    double settle_time = 60.0;
    double eta = 0.05;
    double gap_factor = 2.0;
};

/// Default window: 20/K for Kuramoto, ring-down time 2 m / c for
/// mass-spring, capped at 30 s.
double default_observation_window(const OscillatorModel& model);

/// Settles the model once, then for each observation pulses the node from
/// the settled state and detects activation shells.
class SimulatedShells final : public ShellObserver {
public:
    SimulatedShells(OscillatorModel model, OscillatorState initial, PerturbationProtocol protocol);

    std::size_t size() const override;
    DistanceSets observe(std::size_t perturbed) override;

    const ActivationRecord& last_record() const { return last_; }
    const SettleResult& settled_state() const { return settle_; }
    /// Trajectory of the most recent pulse, from onset to the end of the window.
    const Trajectory& last_response() const { return response_; }

private:
    OscillatorModel model_;
    PerturbationProtocol protocol_;
    SettleResult settle_;
    ActivationRecord last_;
    Trajectory response_;
};

struct FailedPerturbation {
    std::size_t node = 0;
    std::string reason;
};

struct PciResult {
    DirectedNetwork network;
    EdgeProbabilityMatrix probs;
    std::vector<std::size_t> perturbed;
    std::vector<FailedPerturbation> failures;
};

/// Perturbs the first `count` nodes of `order`, updating the edge
/// probabilities after each, and thresholds the result at 0.5 (strict).
PciResult pci_infer(ShellObserver& observer, const std::vector<std::size_t>& order, std::size_t count);

} // namespace netinf
