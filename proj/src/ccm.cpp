#include "netinf/ccm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "netinf/error.hpp"

namespace netinf {

DelayEmbedding delay_embed(std::span<const double> series, std::size_t dim, std::size_t tau)
{
    if (dim < 1 || tau < 1) {
        throw ParameterError("delay_embed: E and tau must be at least 1");
    }
    const auto span = (dim - 1) * tau;
    if (series.size() <= span) {
        throw ParameterError("delay_embed: series too short for E and tau");
    }
    DelayEmbedding emb;
    emb.dim = dim;
    emb.tau = tau;
    const auto count = series.size() - span;
    emb.points.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < count; ++r) {
        const auto t = r + span;
        emb.times.push_back(t);
        for (std::size_t e = 0; e < dim; ++e) {
            emb.points(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(e)) = series[t - e * tau];
        }
    }
    return emb;
}

double pearson(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size() || a.size() < 2) {
        return 0.0;
    }
    const auto n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) {
        return 0.0;
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double cross_map_correlation(std::span<const double> x, std::span<const double> y, std::size_t dim,
                             std::size_t tau, std::size_t library_size, std::uint64_t seed)
{
    if (x.size() != y.size()) {
        throw ParameterError("cross_map_correlation: series lengths differ");
    }
    const auto emb = delay_embed(x, dim, tau);
    const auto count = emb.size();
    const auto k = dim + 1;
    if (library_size > count) {
        throw ParameterError("cross_map_correlation: library larger than the manifold");
    }
    if (library_size < k + 1) {
        throw ParameterError("cross_map_correlation: library must hold at least E + 2 points");
    }

    std::vector<std::size_t> library(count);
    std::iota(library.begin(), library.end(), std::size_t{0});
    if (library_size < count) {
        std::mt19937_64 rng(seed);
        std::shuffle(library.begin(), library.end(), rng);
        library.resize(library_size);
        std::sort(library.begin(), library.end());
    }

    std::vector<double> predicted(count);
    std::vector<double> truth(count);
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(library.size());
    for (std::size_t r = 0; r < count; ++r) {
        cand.clear();
        const auto target = emb.points.row(static_cast<Eigen::Index>(r));
        for (auto l : library) {
            if (l == r) {
                continue;
            }
            const double d = (emb.points.row(static_cast<Eigen::Index>(l)) - target).norm();
            cand.emplace_back(d, l);
        }
        // (distance, index) ordering breaks ties by time index
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
        const double nearest = cand.front().first;
        double wsum = 0.0;
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            double w = 0.0;
            if (nearest > 0.0) {
                w = std::max(std::exp(-cand[j].first / nearest), 1e-6);
            } else {
                w = cand[j].first == 0.0 ? 1.0 : 1e-6;
            }
            wsum += w;
            acc += w * y[emb.times[cand[j].second]];
        }
        predicted[r] = acc / wsum;
        truth[r] = y[emb.times[r]];
    }
    return pearson(predicted, truth);
}

CcmInference ccm_infer_network(const Eigen::MatrixXd& series, const CcmOptions& options)
{
    const auto n = static_cast<std::size_t>(series.rows());
    const auto len = static_cast<std::size_t>(series.cols());
    if (n < 1) {
        throw ParameterError("ccm_infer_network: no series");
    }
    if (len <= (options.dim - 1) * options.tau) {
        throw ParameterError("ccm_infer_network: series too short");
    }
    const auto points = len - (options.dim - 1) * options.tau;
    const auto small = options.dim + 2;

    std::vector<std::vector<double>> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        rows[i].resize(len);
        for (std::size_t t = 0; t < len; ++t) {
            rows[i][t] = series(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
        }
    }

    CcmInference out{DirectedNetwork(n), Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)),
                     Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))};
    const auto samples = std::max<std::size_t>(1, options.small_library_samples);
    for (std::size_t tgt = 0; tgt < n; ++tgt) {
        for (std::size_t src = 0; src < n; ++src) {
            if (src == tgt) {
                continue;
            }
            const double full = cross_map_correlation(rows[tgt], rows[src], options.dim, options.tau, points);
            double low = 0.0;
            for (std::size_t s = 0; s < samples; ++s) {
                const auto seed = options.seed + 7919 * (tgt * n + src) + s;
                low += cross_map_correlation(rows[tgt], rows[src], options.dim, options.tau, small, seed);
            }
            low /= static_cast<double>(samples);
            out.rho_full(static_cast<Eigen::Index>(tgt), static_cast<Eigen::Index>(src)) = full;
            out.rho_small(static_cast<Eigen::Index>(tgt), static_cast<Eigen::Index>(src)) = low;
            if (full > options.rho_threshold && full - low >= options.convergence_margin) {
                out.network.set_edge(src, tgt);
            }
        }
    }
    return out;
}

} // namespace netinf
