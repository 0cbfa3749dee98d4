#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sketchlab/errors.hpp"
#include "sketchlab/graph.hpp"
#include "sketchlab/graph_io.hpp"
#include "sketchlab/random.hpp"

namespace sketchlab {

// Layered clique chain plus one uniformly random pair e*.
struct HardInstance {
    Graph graph;  // without e*
    Edge e_star;
    std::vector<std::uint32_t> layers;  // vertex -> layer in [0, d)
    std::uint32_t d = 0;

    std::vector<std::size_t> layer_sizes() const {
        std::vector<std::size_t> sizes(d, 0);
        for (auto l : layers) ++sizes[l];
        return sizes;
    }
    bool has_empty_layer() const {
        for (auto s : layer_sizes())
            if (s == 0) return true;
        return false;
    }
};

struct ThetaInstance {
    HardInstance base;
    int theta = 0;
    Graph realized;  // base.graph, plus e* when theta = 1
};

struct EndpointInstance {
    ThetaInstance theta_instance;
    Vertex a = 0;
    Vertex b = 0;
    Graph realized;  // n + 2 vertices with edges (a, u*) and (v*, b)
};

// Edges between every pair of vertices whose layers differ by at most one.
inline Graph clique_chain(const std::vector<std::uint32_t>& layers, std::uint32_t d) {
    const auto n = static_cast<Vertex>(layers.size());
    for (auto l : layers) require(l < d, "layer index out of range");
    std::vector<Edge> edges;
    for (Vertex u = 0; u < n; ++u)
        for (Vertex v = u + 1; v < n; ++v) {
            const auto lu = layers[u], lv = layers[v];
            if ((lu > lv ? lu - lv : lv - lu) <= 1) edges.push_back(Edge{u, v});
        }
    return Graph(n, std::move(edges));
}

// Layers and e* come from separate derived streams, so G and e* are independent.
inline HardInstance sample_mu(Vertex n, std::uint32_t d, std::uint64_t seed) {
    require(d >= 2, "sample_mu needs d >= 2");
    require(n >= d, "sample_mu needs n >= d");
    HardInstance inst;
    inst.d = d;
    inst.layers.resize(n);
    CounterRng layer_rng(derive_seed(seed, std::string_view("mu-layers")));
    for (auto& l : inst.layers) l = static_cast<std::uint32_t>(layer_rng.below(d));
    CounterRng pair_rng(derive_seed(seed, std::string_view("mu-estar")));
    inst.e_star = pair_unindex(PairIndex{pair_rng.below(pair_count(n))}, n);
    inst.graph = clique_chain(inst.layers, d);
    return inst;
}

inline ThetaInstance sample_mu_prime(Vertex n, std::uint32_t d, std::uint64_t seed) {
    ThetaInstance out;
    out.base = sample_mu(n, d, seed);
    CounterRng theta_rng(derive_seed(seed, std::string_view("mu-theta")));
    out.theta = static_cast<int>(theta_rng.below(2));
    out.realized = (out.theta == 1 && !out.base.graph.has_edge(out.base.e_star)) ? out.base.graph.with_edge(out.base.e_star)
                                                                                  : out.base.graph;
    return out;
}

inline EndpointInstance sample_mu_double_prime(Vertex n, std::uint32_t d, std::uint64_t seed) {
    EndpointInstance out;
    out.theta_instance = sample_mu_prime(n, d, seed);
    out.a = n;
    out.b = n + 1;
    std::vector<Edge> edges(out.theta_instance.realized.edges().begin(), out.theta_instance.realized.edges().end());
    edges.push_back(make_edge(out.a, out.theta_instance.base.e_star.u));
    edges.push_back(make_edge(out.theta_instance.base.e_star.v, out.b));
    out.realized = Graph(n + 2, std::move(edges));
    return out;
}

// dist_G(u*, v*) > d/2, decided by BFS on G (which excludes e*).
inline bool check_distance_property(const HardInstance& inst) {
    const auto dist = bfs_distance(inst.graph, inst.e_star.u, inst.e_star.v);
    return !dist || 2.0 * *dist > inst.d;
}

// True iff every edge (u,v) of G has dist_H(u,v) <= stretch.
inline bool verify_spanner(const Graph& g, const Graph& h, double stretch) {
    require(is_subgraph(h, g), "verify_spanner needs H to be a subgraph of G");
    for (Vertex u = 0; u < g.n(); ++u) {
        bool needed = false;
        for (Vertex v : g.neighbors(u)) needed |= v > u;
        if (!needed) continue;
        const auto dist = bfs_distances(h, u);
        for (Vertex v : g.neighbors(u))
            if (v > u && (dist[v] == kUnreachable || dist[v] > stretch)) return false;
    }
    return true;
}

inline nlohmann::json instance_json(const HardInstance& inst) {
    auto doc = to_json(inst.graph);
    doc["e_star"] = {inst.e_star.u, inst.e_star.v};
    doc["layers"] = inst.layers;
    doc["d"] = inst.d;
    return doc;
}

// Realized graph (G + e* when theta = 1) with the instance metadata.
inline nlohmann::json instance_json(const ThetaInstance& inst) {
    auto doc = to_json(inst.realized);
    doc["e_star"] = {inst.base.e_star.u, inst.base.e_star.v};
    doc["layers"] = inst.base.layers;
    doc["d"] = inst.base.d;
    doc["theta"] = inst.theta;
    return doc;
}

inline nlohmann::json instance_json(const EndpointInstance& inst) {
    auto doc = to_json(inst.realized);
    doc["e_star"] = {inst.theta_instance.base.e_star.u, inst.theta_instance.base.e_star.v};
    doc["layers"] = inst.theta_instance.base.layers;
    doc["d"] = inst.theta_instance.base.d;
    doc["theta"] = inst.theta_instance.theta;
    doc["a"] = inst.a;
    doc["b"] = inst.b;
    return doc;
}

}  // namespace sketchlab
