#include "netinf/netgen.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "netinf/error.hpp"

namespace netinf {

namespace {

// Seed streams are salted so that ER edges and clique placement stay
// independent for the same user seed.
constexpr std::uint64_t kCliqueSalt = 0x9e3779b97f4a7c15ULL;

void fill_erdos_renyi(DirectedNetwork& net, double p_conn, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const auto n = net.size();
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t s = 0; s < n; ++s) {
            if (s != t && unif(rng) < p_conn) {
                net.set_edge(s, t);
            }
        }
    }
}

// Integer closeness parts: reachable count r and total distance.
std::pair<std::size_t, std::size_t> closeness_parts(const DirectedNetwork& net, std::size_t node)
{
    const auto sets = bfs_distance_sets(net, node);
    std::size_t reach = 0;
    std::size_t total = 0;
    for (std::size_t k = 0; k < sets.shells.size(); ++k) {
        reach += sets.shells[k].size();
        total += (k + 1) * sets.shells[k].size();
    }
    return {reach, total};
}

} // namespace

DirectedNetwork erdos_renyi(std::size_t n, double p_conn, std::uint64_t seed)
{
    if (n < 1) {
        throw ParameterError("erdos_renyi: n must be positive");
    }
    if (!(p_conn >= 0.0 && p_conn <= 1.0)) {
        throw ParameterError("erdos_renyi: p_conn must lie in [0, 1]");
    }
    DirectedNetwork net(n);
    std::mt19937_64 rng(seed);
    fill_erdos_renyi(net, p_conn, rng);
    return net;
}

std::vector<std::size_t> planted_clique_members(std::size_t n, std::size_t clique_size,
                                                std::uint64_t seed)
{
    if (clique_size < 1 || clique_size > n) {
        throw ParameterError("clique_size must lie in [1, n]");
    }
    auto labels = random_order(n, seed ^ kCliqueSalt);
    labels.resize(clique_size);
    std::sort(labels.begin(), labels.end());
    return labels;
}

DirectedNetwork erdos_renyi_with_clique(std::size_t n, double p_conn, std::size_t clique_size,
                                        std::uint64_t seed)
{
    if (clique_size < 1 || clique_size > n) {
        throw ParameterError("erdos_renyi_with_clique: clique_size must lie in [1, n]");
    }
    auto net = erdos_renyi(n, p_conn, seed);
    const auto members = planted_clique_members(n, clique_size, seed);
    for (auto a : members) {
        for (auto b : members) {
            if (a != b) {
                net.set_edge(a, b);
            }
        }
    }
    return net;
}

DirectedNetwork barabasi_albert(std::size_t n, std::size_t m_attach, std::uint64_t seed)
{
    if (m_attach < 1 || m_attach >= n) {
        throw ParameterError("barabasi_albert: m_attach must satisfy 1 <= m < n");
    }
    DirectedNetwork net(n);
    std::vector<double> degree(n, 0.0);
    auto link = [&](std::size_t a, std::size_t b) {
        net.set_edge(a, b);
        net.set_edge(b, a);
        degree[a] += 1.0;
        degree[b] += 1.0;
    };
    for (std::size_t a = 0; a < m_attach; ++a) {
        for (std::size_t b = a + 1; b < m_attach; ++b) {
            link(a, b);
        }
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t v = m_attach; v < n; ++v) {
        // Weighted sampling without replacement over existing nodes [0, v).
        std::vector<double> weight(degree.begin(), degree.begin() + static_cast<std::ptrdiff_t>(v));
        std::vector<std::size_t> targets;
        for (std::size_t pick = 0; pick < m_attach; ++pick) {
            double total = std::accumulate(weight.begin(), weight.end(), 0.0);
            if (total <= 0.0) {
                for (std::size_t u = 0; u < v; ++u) {
                    if (std::find(targets.begin(), targets.end(), u) == targets.end()) {
                        weight[u] = 1.0;
                    }
                }
                total = std::accumulate(weight.begin(), weight.end(), 0.0);
            }
            double r = unif(rng) * total;
            std::size_t chosen = v;
            for (std::size_t u = 0; u < v; ++u) {
                if (weight[u] <= 0.0) {
                    continue;
                }
                chosen = u;
                if (r < weight[u]) {
                    break;
                }
                r -= weight[u];
            }
            targets.push_back(chosen);
            weight[chosen] = 0.0;
        }
        for (auto u : targets) {
            link(v, u);
        }
    }
    return net;
}

std::vector<std::size_t> outdegree_order(const DirectedNetwork& net)
{
    const auto n = net.size();
    std::vector<std::size_t> deg(n);
    for (std::size_t v = 0; v < n; ++v) {
        deg[v] = net.out_degree(v);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return deg[a] > deg[b]; });
    return order;
}

double outcloseness(const DirectedNetwork& net, std::size_t node)
{
    const auto [reach, total] = closeness_parts(net, node);
    if (reach == 0) {
        return 0.0;
    }
    const auto n = static_cast<double>(net.size());
    return static_cast<double>(reach * reach) / ((n - 1.0) * static_cast<double>(total));
}

std::vector<std::size_t> outcloseness_order(const DirectedNetwork& net)
{
    const auto n = net.size();
    std::vector<std::pair<std::size_t, std::size_t>> parts(n);
    for (std::size_t v = 0; v < n; ++v) {
        parts[v] = closeness_parts(net, v);
    }
    // Exact comparison of r_a^2 / S_a against r_b^2 / S_b; a zero-reach node scores 0.
    auto greater = [&](std::size_t a, std::size_t b) {
        const auto [ra, sa] = parts[a];
        const auto [rb, sb] = parts[b];
        if (ra == 0 || rb == 0) {
            return ra != 0 && rb == 0;
        }
        return ra * ra * sb > rb * rb * sa;
    };
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), greater);
    return order;
}

std::vector<std::size_t> random_order(std::size_t n, std::uint64_t seed)
{
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

} // namespace netinf
