#include "netinf/granger.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>

#include "netinf/error.hpp"

namespace netinf {

namespace {

constexpr double kRankTolerance = 1e-10;

struct Design {
    Eigen::MatrixXd lags;    ///< T_eff x (n p), column (k-1) n + j holds x_j at lag k
    Eigen::MatrixXd targets; ///< T_eff x n
};

std::size_t check_trials(std::span<const Eigen::MatrixXd> trials, std::size_t order)
{
    if (trials.empty()) {
        throw ParameterError("no trials given");
    }
    if (order < 1) {
        throw ParameterError("VAR order must be at least 1");
    }
    const auto n = static_cast<std::size_t>(trials.front().rows());
    if (n < 1) {
        throw ParameterError("trials must have at least one variable");
    }
    for (std::size_t t = 0; t < trials.size(); ++t) {
        if (static_cast<std::size_t>(trials[t].rows()) != n) {
            throw ParameterError("all trials must share the same number of variables");
        }
        if (static_cast<std::size_t>(trials[t].cols()) <= order + n * order) {
            throw ParameterError("trial " + std::to_string(t) + " has " + std::to_string(trials[t].cols()) +
                                 " samples; order " + std::to_string(order) + " needs more than " +
                                 std::to_string(order + n * order));
        }
        if (!trials[t].allFinite()) {
            throw ParameterError("trial " + std::to_string(t) + " contains non-finite values");
        }
    }
    return n;
}

Design build_design(std::span<const Eigen::MatrixXd> trials, std::size_t order)
{
    const auto n = static_cast<Eigen::Index>(trials.front().rows());
    const auto p = static_cast<Eigen::Index>(order);
    Eigen::Index rows = 0;
    for (const auto& tr : trials) {
        rows += tr.cols() - p;
    }
    Design d{Eigen::MatrixXd(rows, n * p), Eigen::MatrixXd(rows, n)};
    Eigen::Index r = 0;
    for (const auto& tr : trials) {
        const Eigen::VectorXd mean = tr.rowwise().mean();
        const Eigen::MatrixXd centered = tr.colwise() - mean;
        for (Eigen::Index t = p; t < centered.cols(); ++t, ++r) {
            d.targets.row(r) = centered.col(t).transpose();
            for (Eigen::Index k = 1; k <= p; ++k) {
                d.lags.block(r, (k - 1) * n, 1, n) = centered.col(t - k).transpose();
            }
        }
    }
    return d;
}

Eigen::ColPivHouseholderQR<Eigen::MatrixXd> factor(const Eigen::MatrixXd& regressors, std::size_t order)
{
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(regressors.rows(), regressors.cols());
    qr.setThreshold(kRankTolerance);
    qr.compute(regressors);
    if (qr.rank() < regressors.cols()) {
        throw SingularityError("rank-deficient regressors (rank " + std::to_string(qr.rank()) + " of " +
                               std::to_string(regressors.cols()) + ") at VAR order " +
                               std::to_string(order) + "; try a smaller order");
    }
    return qr;
}

Eigen::VectorXd residual_sum_squares(const Eigen::MatrixXd& regressors, const Eigen::MatrixXd& targets,
                                     std::size_t order)
{
    const auto qr = factor(regressors, order);
    const Eigen::MatrixXd beta = qr.solve(targets);
    return (targets - regressors * beta).colwise().squaredNorm().transpose();
}

double log_determinant(const Eigen::MatrixXd& sym)
{
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sym);
    double total = 0.0;
    for (Eigen::Index i = 0; i < sym.rows(); ++i) {
        const double d = ldlt.vectorD()[i];
        if (!(d > 0.0)) {
            return -std::numeric_limits<double>::infinity();
        }
        total += std::log(d);
    }
    return total;
}

} // namespace

VarModel fit_var(std::span<const Eigen::MatrixXd> trials, std::size_t order)
{
    const auto n = check_trials(trials, order);
    const auto d = build_design(trials, order);
    const auto qr = factor(d.lags, order);
    const Eigen::MatrixXd beta = qr.solve(d.targets);
    const Eigen::MatrixXd resid = d.targets - d.lags * beta;

    VarModel model;
    model.order = order;
    model.sample_count = static_cast<std::size_t>(d.lags.rows());
    const auto ni = static_cast<Eigen::Index>(n);
    for (std::size_t k = 0; k < order; ++k) {
        model.coeffs.push_back(beta.block(static_cast<Eigen::Index>(k) * ni, 0, ni, ni).transpose());
    }
    const double dof = static_cast<double>(model.sample_count - n * order);
    Eigen::MatrixXd cov = resid.transpose() * resid / dof;
    model.residual_cov = 0.5 * (cov + cov.transpose());
    return model;
}

std::size_t max_feasible_order(std::span<const Eigen::MatrixXd> trials)
{
    if (trials.empty()) {
        return 0;
    }
    const auto n = static_cast<std::size_t>(trials.front().rows());
    std::size_t shortest = std::numeric_limits<std::size_t>::max();
    for (const auto& tr : trials) {
        shortest = std::min(shortest, static_cast<std::size_t>(tr.cols()));
    }
    // need T > p (n + 1)
    if (shortest <= n + 1) {
        return 0;
    }
    return (shortest - 1) / (n + 1);
}

std::size_t select_model_order(std::span<const Eigen::MatrixXd> trials, std::size_t p_max)
{
    if (p_max < 1) {
        throw ParameterError("p_max must be at least 1");
    }
    if (p_max == 1) {
        return 1;
    }
    const auto n = static_cast<double>(check_trials(trials, p_max));
    std::size_t best = 1;
    double best_aic = std::numeric_limits<double>::infinity();
    for (std::size_t p = 1; p <= p_max; ++p) {
        const auto model = fit_var(trials, p);
        const double t_eff = static_cast<double>(model.sample_count);
        const double dof = t_eff - n * static_cast<double>(p);
        const Eigen::MatrixXd ml_cov = model.residual_cov * (dof / t_eff);
        const double aic = log_determinant(ml_cov) + 2.0 * static_cast<double>(p) * n * n / t_eff;
        if (aic < best_aic) {
            best_aic = aic;
            best = p;
        }
    }
    return best;
}

std::vector<bool> benjamini_hochberg(const std::vector<double>& p_values, double q)
{
    const auto m = p_values.size();
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return p_values[a] < p_values[b]; });
    std::size_t cutoff = 0; // number of rejections
    for (std::size_t k = m; k >= 1; --k) {
        if (p_values[idx[k - 1]] <= q * static_cast<double>(k) / static_cast<double>(m)) {
            cutoff = k;
            break;
        }
    }
    std::vector<bool> reject(m, false);
    for (std::size_t k = 0; k < cutoff; ++k) {
        reject[idx[k]] = true;
    }
    return reject;
}

GcResult pairwise_conditional_gc(std::span<const Eigen::MatrixXd> trials, std::size_t order, double fdr_q)
{
    const auto n = check_trials(trials, order);
    if (n < 2) {
        throw ParameterError("pairwise-conditional GC needs at least two variables");
    }
    const auto d = build_design(trials, order);
    const auto ni = static_cast<Eigen::Index>(n);
    const auto p = static_cast<Eigen::Index>(order);
    const Eigen::VectorXd rss_full = residual_sum_squares(d.lags, d.targets, order);

    GcResult res;
    res.order = order;
    res.sample_count = static_cast<std::size_t>(d.lags.rows());
    res.f_stat = Eigen::MatrixXd::Zero(ni, ni);
    res.p_values = Eigen::MatrixXd::Ones(ni, ni);
    res.significant.assign(n, std::vector<bool>(n, false));

    const double t_eff = static_cast<double>(res.sample_count);
    const boost::math::chi_squared_distribution<double> null_dist(static_cast<double>(order));

    Eigen::MatrixXd reduced(d.lags.rows(), (ni - 1) * p);
    for (Eigen::Index src = 0; src < ni; ++src) {
        Eigen::Index c = 0;
        for (Eigen::Index k = 0; k < p; ++k) {
            for (Eigen::Index j = 0; j < ni; ++j) {
                if (j != src) {
                    reduced.col(c++) = d.lags.col(k * ni + j);
                }
            }
        }
        const Eigen::VectorXd rss_red = residual_sum_squares(reduced, d.targets, order);
        for (Eigen::Index tgt = 0; tgt < ni; ++tgt) {
            if (tgt == src) {
                continue;
            }
            double f = std::log(rss_red[tgt] / rss_full[tgt]);
            if (!std::isfinite(f)) {
                f = rss_red[tgt] > rss_full[tgt] ? std::numeric_limits<double>::max() : 0.0;
            }
            f = std::max(f, 0.0);
            res.f_stat(tgt, src) = f;
            const double stat = t_eff * f;
            res.p_values(tgt, src) =
                std::isfinite(stat) ? boost::math::cdf(boost::math::complement(null_dist, stat)) : 0.0;
        }
    }

    std::vector<double> pv;
    pv.reserve(n * (n - 1));
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t s = 0; s < n; ++s) {
            if (s != t) {
                pv.push_back(res.p_values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)));
            }
        }
    }
    const auto reject = benjamini_hochberg(pv, fdr_q);
    std::size_t k = 0;
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t s = 0; s < n; ++s) {
            if (s != t) {
                res.significant[t][s] = reject[k++];
            }
        }
    }
    return res;
}

GcInference gc_infer_network(std::span<const Eigen::MatrixXd> trials, const GcOptions& options)
{
    std::size_t order = 0;
    if (options.order) {
        order = *options.order;
    } else {
        const auto feasible = max_feasible_order(trials);
        if (feasible < 1) {
            throw ParameterError("trials too short for any VAR order");
        }
        order = select_model_order(trials, std::min(options.max_order, feasible));
    }
    auto stats = pairwise_conditional_gc(trials, order, options.alpha);
    DirectedNetwork net(static_cast<std::size_t>(stats.f_stat.rows()));
    for (std::size_t t = 0; t < net.size(); ++t) {
        for (std::size_t s = 0; s < net.size(); ++s) {
            if (stats.significant[t][s]) {
                net.set_edge(s, t);
            }
        }
    }
    return {std::move(net), std::move(stats)};
}

} // namespace netinf
