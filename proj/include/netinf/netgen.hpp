#pragma once

#include <cstdint>
#include <vector>

#include "netinf/network.hpp"

namespace netinf {

/// Each ordered off-diagonal pair present independently with probability p_conn.
DirectedNetwork erdos_renyi(std::size_t n, double p_conn, std::uint64_t seed);

/// Erdos-Renyi graph plus a bidirectionally complete clique on clique_size
/// randomly chosen nodes.
DirectedNetwork erdos_renyi_with_clique(std::size_t n, double p_conn, std::size_t clique_size,
                                        std::uint64_t seed);

/// Nodes of the clique planted by erdos_renyi_with_clique for the same arguments.
std::vector<std::size_t> planted_clique_members(std::size_t n, std::size_t clique_size,
                                                std::uint64_t seed);

/// Preferential attachment grown from an m_attach-node complete seed graph.
/// Every attachment is bidirectional.
DirectedNetwork barabasi_albert(std::size_t n, std::size_t m_attach, std::uint64_t seed);

/// Decreasing outdegree, ties by ascending index.
std::vector<std::size_t> outdegree_order(const DirectedNetwork& net);

/// r^2 / ((n-1) * sum of distances to the r reachable nodes); 0 when r = 0.
double outcloseness(const DirectedNetwork& net, std::size_t node);

/// Decreasing outcloseness, ties by ascending index.
std::vector<std::size_t> outcloseness_order(const DirectedNetwork& net);

/// Seeded uniform permutation of [0, n).
std::vector<std::size_t> random_order(std::size_t n, std::uint64_t seed);

} // namespace netinf
