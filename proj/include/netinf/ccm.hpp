#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "netinf/network.hpp"

namespace netinf {

/// Point t holds (s_t, s_{t-tau}, ..., s_{t-(E-1)tau}).
struct DelayEmbedding {
    std::size_t dim = 1;
    std::size_t tau = 1;
    Eigen::MatrixXd points;          ///< count x E
    std::vector<std::size_t> times;  ///< series index of each point

    std::size_t size() const { return times.size(); }
};

DelayEmbedding delay_embed(std::span<const double> series, std::size_t dim, std::size_t tau);

/// Skill of predicting y from the delay manifold of x (simplex projection with
/// E+1 neighbours drawn from a seeded random library of `library_size` points).
/// Returns the Pearson correlation between predictions and truth, 0 when either
/// has zero variance.
double cross_map_correlation(std::span<const double> x, std::span<const double> y, std::size_t dim,
                             std::size_t tau, std::size_t library_size, std::uint64_t seed = 0);

struct CcmOptions {
    std::size_t dim = 3;
    std::size_t tau = 1;
    double rho_threshold = 0.7;
    double convergence_margin = 0.05;
    std::size_t small_library_samples = 10;
    std::uint64_t seed = 0;
};

struct CcmInference {
    DirectedNetwork network;
    Eigen::MatrixXd rho_full;  ///< [target][source]: skill of recovering source from target's manifold
    Eigen::MatrixXd rho_small;
};

/// Edge j -> i when j's series is recovered from i's manifold with rho above
/// the threshold at full library, and rho grew by at least the margin from
/// the smallest library. `series` is n x T.
CcmInference ccm_infer_network(const Eigen::MatrixXd& series, const CcmOptions& options);

double pearson(std::span<const double> a, std::span<const double> b);

} // namespace netinf
