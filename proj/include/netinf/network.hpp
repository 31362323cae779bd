#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace netinf {

/// Boolean adjacency of a directed graph stored as adj[target][source]:
/// `causes(j, i)` is true when there is an edge j -> i.
class DirectedNetwork {
public:
    explicit DirectedNetwork(std::size_t n);

    std::size_t size() const noexcept { return n_; }

    bool causes(std::size_t source, std::size_t target) const { return adj_[target * n_ + source] != 0; }
    /// adj[target][source] accessor, matching the stored convention.
    bool adj(std::size_t target, std::size_t source) const { return causes(source, target); }

    void set_edge(std::size_t source, std::size_t target, bool present = true);

    std::size_t edge_count() const;
    std::size_t out_degree(std::size_t node) const;
    std::size_t in_degree(std::size_t node) const;

    /// Relabel nodes: node v becomes perm[v].
    DirectedNetwork permuted(const std::vector<std::size_t>& perm) const;

    /// Edges as (source, target) pairs, sorted by source then target.
    std::vector<std::pair<std::size_t, std::size_t>> edges() const;

    friend bool operator==(const DirectedNetwork&, const DirectedNetwork&) = default;

private:
    std::size_t n_;
    std::vector<unsigned char> adj_;
};

/// Nodes grouped by directed shortest-path distance from `source`.
/// shells[k-1] holds D_k; `unreachable` holds D_inf.
struct DistanceSets {
    std::size_t source = 0;
    std::vector<std::vector<std::size_t>> shells;
    std::vector<std::size_t> unreachable;

    /// Distance of every node from the source (0 for the source itself),
    /// nullopt for unreachable nodes. Throws ParameterError if the sets do
    /// not partition [n].
    std::vector<std::optional<std::size_t>> distances(std::size_t n) const;
};

/// Throws ParameterError unless `sets` partitions [n] with non-empty shells.
void validate(const DistanceSets& sets, std::size_t n);

DistanceSets bfs_distance_sets(const DirectedNetwork& net, std::size_t source);

/// {"n": int, "edges": [[source, target], ...]}
std::string to_json(const DirectedNetwork& net);
DirectedNetwork network_from_json(const std::string& text);

DirectedNetwork load_network(const std::string& path);
void save_network(const DirectedNetwork& net, const std::string& path);

} // namespace netinf
