#include "netinf/network.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "netinf/error.hpp"

namespace netinf {

DirectedNetwork::DirectedNetwork(std::size_t n) : n_(n), adj_(n * n, 0)
{
    if (n == 0) {
        throw ParameterError("network must have at least one node");
    }
}

void DirectedNetwork::set_edge(std::size_t source, std::size_t target, bool present)
{
    if (source >= n_ || target >= n_) {
        throw ParameterError("edge endpoint out of range");
    }
    if (source == target) {
        if (present) {
            throw ParameterError("self-loops are not allowed");
        }
        return;
    }
    adj_[target * n_ + source] = present ? 1 : 0;
}

std::size_t DirectedNetwork::edge_count() const
{
    return static_cast<std::size_t>(std::count(adj_.begin(), adj_.end(), 1));
}

std::size_t DirectedNetwork::out_degree(std::size_t node) const
{
    std::size_t d = 0;
    for (std::size_t t = 0; t < n_; ++t) {
        d += causes(node, t) ? 1 : 0;
    }
    return d;
}

std::size_t DirectedNetwork::in_degree(std::size_t node) const
{
    std::size_t d = 0;
    for (std::size_t s = 0; s < n_; ++s) {
        d += causes(s, node) ? 1 : 0;
    }
    return d;
}

DirectedNetwork DirectedNetwork::permuted(const std::vector<std::size_t>& perm) const
{
    if (perm.size() != n_) {
        throw ParameterError("permutation size mismatch");
    }
    DirectedNetwork out(n_);
    for (std::size_t t = 0; t < n_; ++t) {
        for (std::size_t s = 0; s < n_; ++s) {
            if (causes(s, t)) {
                out.set_edge(perm[s], perm[t]);
            }
        }
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> DirectedNetwork::edges() const
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t s = 0; s < n_; ++s) {
        for (std::size_t t = 0; t < n_; ++t) {
            if (causes(s, t)) {
                out.emplace_back(s, t);
            }
        }
    }
    return out;
}

std::vector<std::optional<std::size_t>> DistanceSets::distances(std::size_t n) const
{
    validate(*this, n);
    std::vector<std::optional<std::size_t>> dist(n);
    dist[source] = 0;
    for (std::size_t k = 0; k < shells.size(); ++k) {
        for (auto v : shells[k]) {
            dist[v] = k + 1;
        }
    }
    return dist;
}

void validate(const DistanceSets& sets, std::size_t n)
{
    if (sets.source >= n) {
        throw ParameterError("distance sets: source out of range");
    }
    std::vector<int> seen(n, 0);
    seen[sets.source] = 1;
    auto mark = [&](std::size_t v) {
        if (v >= n) {
            throw ParameterError("distance sets: node out of range");
        }
        if (seen[v]++ != 0) {
            throw ParameterError("distance sets: node listed twice");
        }
    };
    for (const auto& shell : sets.shells) {
        if (shell.empty()) {
            throw ParameterError("distance sets: empty shell");
        }
        for (auto v : shell) {
            mark(v);
        }
    }
    for (auto v : sets.unreachable) {
        mark(v);
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
        throw ParameterError("distance sets: not a partition of the node set");
    }
}

DistanceSets bfs_distance_sets(const DirectedNetwork& net, std::size_t source)
{
    const auto n = net.size();
    if (source >= n) {
        throw ParameterError("bfs source out of range");
    }
    std::vector<std::optional<std::size_t>> dist(n);
    dist[source] = 0;
    std::queue<std::size_t> frontier;
    frontier.push(source);
    while (!frontier.empty()) {
        const auto u = frontier.front();
        frontier.pop();
        for (std::size_t v = 0; v < n; ++v) {
            if (!dist[v] && net.causes(u, v)) {
                dist[v] = *dist[u] + 1;
                frontier.push(v);
            }
        }
    }

    DistanceSets sets;
    sets.source = source;
    for (std::size_t v = 0; v < n; ++v) {
        if (!dist[v]) {
            sets.unreachable.push_back(v);
        } else if (*dist[v] > 0) {
            if (sets.shells.size() < *dist[v]) {
                sets.shells.resize(*dist[v]);
            }
            sets.shells[*dist[v] - 1].push_back(v);
        }
    }
    return sets;
}

std::string to_json(const DirectedNetwork& net)
{
    nlohmann::json doc;
    doc["n"] = net.size();
    doc["edges"] = nlohmann::json::array();
    for (const auto& [s, t] : net.edges()) {
        doc["edges"].push_back({s, t});
    }
    return doc.dump(2) + "\n";
}

DirectedNetwork network_from_json(const std::string& text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("network file: ") + e.what());
    }
    if (!doc.contains("n") || !doc["n"].is_number_integer() || doc["n"].get<long long>() < 1) {
        throw ParameterError("network file: missing or invalid \"n\"");
    }
    DirectedNetwork net(doc["n"].get<std::size_t>());
    if (!doc.contains("edges") || !doc["edges"].is_array()) {
        throw ParameterError("network file: missing \"edges\" array");
    }
    for (const auto& e : doc["edges"]) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
            throw ParameterError("network file: edges must be [source, target] pairs");
        }
        const auto s = e[0].get<long long>();
        const auto t = e[1].get<long long>();
        if (s < 0 || t < 0) {
            throw ParameterError("edge endpoint out of range");
        }
        net.set_edge(static_cast<std::size_t>(s), static_cast<std::size_t>(t));
    }
    return net;
}

DirectedNetwork load_network(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParameterError("cannot open network file " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return network_from_json(buf.str());
}

void save_network(const DirectedNetwork& net, const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw ParameterError("cannot write network file " + path);
    }
    out << to_json(net);
}

} // namespace netinf
