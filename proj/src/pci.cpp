#include "netinf/pci.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "netinf/error.hpp"

namespace netinf {

EdgeProbabilityMatrix::EdgeProbabilityMatrix(std::size_t n)
    : probs_(Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), 0.5))
{
    if (n == 0) {
        throw ParameterError("edge probability matrix needs at least one node");
    }
}

DirectedNetwork EdgeProbabilityMatrix::threshold(double threshold) const
{
    DirectedNetwork net(size());
    for (std::size_t x = 0; x < size(); ++x) {
        for (std::size_t y = 0; y < size(); ++y) {
            if (x != y && (*this)(x, y) > threshold) {
                net.set_edge(x, y);
            }
        }
    }
    return net;
}

ActivationRecord detect_activation_times(const Trajectory& traj, const ResponseBaseline& baseline,
                                         std::size_t perturbed, double eta)
{
    if (traj.samples() == 0) {
        throw ParameterError("detect_activation_times: empty trajectory");
    }
    const auto n = traj.nodes();
    const auto ni = static_cast<Eigen::Index>(n);
    if (perturbed >= n) {
        throw ParameterError("detect_activation_times: perturbed node out of range");
    }
    if (baseline.value.size() != ni || baseline.drift.size() != ni) {
        throw ParameterError("detect_activation_times: baseline must have length n");
    }
    if (!(eta > 0.0)) {
        throw ParameterError("detect_activation_times: eta must be positive");
    }

    const double t0 = traj.times.front();
    Eigen::MatrixXd signal(ni, static_cast<Eigen::Index>(traj.samples()));
    for (std::size_t s = 0; s < traj.samples(); ++s) {
        const auto col = static_cast<Eigen::Index>(s);
        Eigen::VectorXd dev = traj.states.col(col) - baseline.value - baseline.drift * (traj.times[s] - t0);
        if (baseline.circular) {
            // a node that slips whole cycles is back in phase, not 2*pi away
            dev = dev.unaryExpr([](double d) { return std::remainder(d, 2.0 * std::numbers::pi); });
        }
        signal.col(col) = dev.cwiseAbs();
    }
    const double peak = signal.row(static_cast<Eigen::Index>(perturbed)).maxCoeff();
    if (!(peak > 0.0)) {
        throw DegeneratePulseError("perturbed node " + std::to_string(perturbed) +
                                   " shows no response; increase the forcing");
    }
    const double level = eta * peak;

    ActivationRecord rec;
    rec.perturbed = perturbed;
    rec.window = traj.times.back() - t0;
    rec.times.assign(n, ActivationRecord::never);
    for (Eigen::Index i = 0; i < ni; ++i) {
        for (Eigen::Index s = 0; s < signal.cols(); ++s) {
            if (signal(i, s) > level) {
                rec.times[static_cast<std::size_t>(i)] = traj.times[static_cast<std::size_t>(s)] - t0;
                break;
            }
        }
    }
    rec.times[perturbed] = 0.0;
    return rec;
}

DistanceSets build_distance_sets(const ActivationRecord& record, double gap_factor)
{
    if (!(gap_factor > 1.0)) {
        throw ParameterError("gap_factor must exceed 1");
    }
    const auto n = record.times.size();
    if (record.perturbed >= n) {
        throw ParameterError("build_distance_sets: perturbed node out of range");
    }
    DistanceSets sets;
    sets.source = record.perturbed;

    std::vector<std::size_t> active;
    for (std::size_t v = 0; v < n; ++v) {
        if (v == record.perturbed) {
            continue;
        }
        if (std::isfinite(record.times[v])) {
            active.push_back(v);
        } else {
            sets.unreachable.push_back(v);
        }
    }
    if (active.empty()) {
        return sets;
    }
    std::stable_sort(active.begin(), active.end(),
                     [&](auto a, auto b) { return record.times[a] < record.times[b]; });

    // The onset-to-first-activation delay is one hop of propagation; a later
    // gap bigger than a fraction of it opens the next shell.
    const double split = record.times[active.front()] / gap_factor;

    sets.shells.push_back({active.front()});
    for (std::size_t k = 1; k < active.size(); ++k) {
        const double g = record.times[active[k]] - record.times[active[k - 1]];
        if (g > split) {
            sets.shells.emplace_back();
        }
        sets.shells.back().push_back(active[k]);
    }
    for (auto& shell : sets.shells) {
        std::sort(shell.begin(), shell.end());
    }
    return sets;
}

EdgeProbabilityMatrix pci_update(const EdgeProbabilityMatrix& probs, std::size_t perturbed,
                                 const DistanceSets& sets)
{
    const auto n = probs.size();
    if (sets.source != perturbed) {
        throw ParameterError("pci_update: distance sets belong to another source");
    }
    const auto dist = sets.distances(n); // validates the partition

    // D_0 = {p}, D_k = shells[k-1]
    const std::vector<std::size_t> origin{perturbed};
    auto level = [&](std::size_t k) -> const std::vector<std::size_t>* {
        if (k == 0) {
            return &origin;
        }
        return k <= sets.shells.size() ? &sets.shells[k - 1] : nullptr;
    };

    const EdgeProbabilityMatrix& prior = probs;
    EdgeProbabilityMatrix next = probs;
    for (std::size_t x = 0; x < n; ++x) {
        if (!dist[x]) {
            continue; // case 1
        }
        const auto k = *dist[x];
        // case 2: targets strictly beyond shell k+1, or unreachable
        for (std::size_t y = 0; y < n; ++y) {
            if (!dist[y] || *dist[y] > k + 1) {
                next(x, y) = prior(x, y) / 10.0;
            }
        }
        // case 3: targets in shell k+1
        const auto* causes = level(k);
        const auto* effects = level(k + 1);
        if (effects == nullptr) {
            continue;
        }
        for (auto y : *effects) {
            double none = 1.0;
            for (auto v : *causes) {
                none *= 1.0 - prior(v, y);
            }
            next(x, y) = std::min(1.0, prior(x, y) / (1.0 - none));
        }
    }
    return next;
}

double default_observation_window(const OscillatorModel& model)
{
    constexpr double cap = 30.0;
    if (const auto* ku = std::get_if<KuramotoModel>(&model)) {
        return ku->params.coupling > 0.0 ? std::min(cap, 20.0 / ku->params.coupling) : cap;
    }
    const auto& ms = std::get<MassSpringModel>(model).params;
    return ms.damping > 0.0 ? std::min(cap, 2.0 * ms.mass / ms.damping) : cap;
}

SimulatedShells::SimulatedShells(OscillatorModel model, OscillatorState initial, PerturbationProtocol protocol)
    : model_(std::move(model)), protocol_(protocol)
{
    if (protocol_.window <= 0.0) {
        protocol_.window = default_observation_window(model_);
    }
    settle_ = settle_to_steady_state(model_, initial, protocol_.settle_tol, protocol_.settle_time, protocol_.dt);
}

std::size_t SimulatedShells::size() const
{
    return network_of(model_).size();
}

DistanceSets SimulatedShells::observe(std::size_t perturbed)
{
    const auto n = static_cast<Eigen::Index>(size());
    const std::vector<ForcingSpec> pulse{
        impulse_forcing(perturbed, protocol_.force, 0.0, protocol_.pulse_duration)};
    const double steps = std::max(1.0, std::round(protocol_.window / protocol_.dt));
    response_ = simulate(model_, pulse, settle_.state, TimeGrid{0.0, steps * protocol_.dt, protocol_.dt, 1});

    ResponseBaseline base;
    base.value = settle_.state.position;
    // one shared synchronized frequency; an unlocked node drifts away from it
    base.drift = kind_of(model_) == ModelKind::Kuramoto ? Eigen::VectorXd::Constant(n, settle_.rate.mean())
                                                        : Eigen::VectorXd::Zero(n);
    base.circular = kind_of(model_) == ModelKind::Kuramoto;
    last_ = detect_activation_times(response_, base, perturbed, protocol_.eta);
    return build_distance_sets(last_, protocol_.gap_factor);
}

PciResult pci_infer(ShellObserver& observer, const std::vector<std::size_t>& order, std::size_t count)
{
    const auto n = observer.size();
    if (count > order.size() || count > n) {
        throw ParameterError("pci_infer: more perturbations requested than nodes available");
    }
    EdgeProbabilityMatrix probs(n);
    PciResult result{DirectedNetwork(n), probs, {}, {}};
    for (std::size_t i = 0; i < count; ++i) {
        const auto p = order[i];
        if (p >= n) {
            throw ParameterError("pci_infer: perturbation node out of range");
        }
        try {
            const auto sets = observer.observe(p);
            probs = pci_update(probs, p, sets);
            result.perturbed.push_back(p);
        } catch (const std::exception& e) {
            result.failures.push_back({p, e.what()});
        }
    }
    result.network = probs.threshold(0.5);
    result.probs = std::move(probs);
    return result;
}

} // namespace netinf
