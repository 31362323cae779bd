#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "netinf/network.hpp"

namespace netinf {

/// X_t = sum_k A_k X_{t-k} + e_t, fitted by least squares.
struct VarModel {
    std::size_t order = 1;
    std::vector<Eigen::MatrixXd> coeffs; ///< A_1..A_p, each n x n
    Eigen::MatrixXd residual_cov;        ///< denominator: samples - n*p
    std::size_t sample_count = 0;        ///< regression rows pooled over trials
};

/// Pairwise-conditional G-causality. Matrices are indexed [target][source].
struct GcResult {
    Eigen::MatrixXd f_stat;
    Eigen::MatrixXd p_values;
    std::vector<std::vector<bool>> significant;
    std::size_t order = 1;
    std::size_t sample_count = 0;
};

/// Each trial is an n x T block (one row per variable). Every trial is
/// demeaned per channel before lagging; no regression row crosses a trial
/// boundary.
VarModel fit_var(std::span<const Eigen::MatrixXd> trials, std::size_t order);

/// AIC(p) = ln|Sigma_p| + 2 p n^2 / T_eff over p in [1, p_max], where
/// Sigma_p is the maximum-likelihood residual covariance.
std::size_t select_model_order(std::span<const Eigen::MatrixXd> trials, std::size_t p_max);

/// Largest order whose per-trial sample requirement (T > p + n p) holds for every trial.
std::size_t max_feasible_order(std::span<const Eigen::MatrixXd> trials);

GcResult pairwise_conditional_gc(std::span<const Eigen::MatrixXd> trials, std::size_t order,
                                 double fdr_q = 0.05);

/// Benjamini-Hochberg step-up; returns the rejected hypotheses.
std::vector<bool> benjamini_hochberg(const std::vector<double>& p_values, double q);

struct GcOptions {
    std::optional<std::size_t> order; ///< nullopt selects by AIC
    std::size_t max_order = 8;
    double alpha = 0.05;
};

struct GcInference {
    DirectedNetwork network;
    GcResult stats;
};

GcInference gc_infer_network(std::span<const Eigen::MatrixXd> trials, const GcOptions& options);

} // namespace netinf
