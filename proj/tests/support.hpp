#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "sketchlab/graph.hpp"
#include "sketchlab/random.hpp"

namespace testing_support {

using sketchlab::Edge;
using sketchlab::Graph;
using sketchlab::Vertex;

inline Graph complete_graph(Vertex n) {
    std::vector<Edge> edges;
    for (Vertex u = 0; u < n; ++u)
        for (Vertex v = u + 1; v < n; ++v) edges.push_back({u, v});
    return Graph(n, std::move(edges));
}

inline Graph path_graph(Vertex n) {
    std::vector<Edge> edges;
    for (Vertex v = 0; v + 1 < n; ++v) edges.push_back({v, v + 1});
    return Graph(n, std::move(edges));
}

inline Graph cycle_graph(Vertex n) {
    std::vector<Edge> edges;
    for (Vertex v = 0; v + 1 < n; ++v) edges.push_back({v, v + 1});
    edges.push_back({0, n - 1});
    return Graph(n, std::move(edges));
}

// Two disjoint cliques on [0,k) and [k,2k) joined by the edge (0, k).
inline Graph barbell(Vertex k) {
    std::vector<Edge> edges;
    for (Vertex u = 0; u < k; ++u)
        for (Vertex v = u + 1; v < k; ++v) {
            edges.push_back({u, v});
            edges.push_back({u + k, v + k});
        }
    edges.push_back({0, k});
    return Graph(2 * k, std::move(edges));
}

// Random recursive tree plus `extra` random chords (duplicates dropped).
inline Graph random_connected(Vertex n, std::size_t extra, std::uint64_t seed) {
    sketchlab::CounterRng rng(seed);
    std::vector<Edge> edges;
    for (Vertex v = 1; v < n; ++v) edges.push_back(sketchlab::make_edge(v, static_cast<Vertex>(rng.below(v))));
    for (std::size_t i = 0; i < extra; ++i) {
        const auto a = static_cast<Vertex>(rng.below(n)), b = static_cast<Vertex>(rng.below(n));
        if (a != b) edges.push_back(sketchlab::make_edge(a, b));
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return Graph(n, std::move(edges));
}

inline Graph erdos_renyi(Vertex n, double p, std::uint64_t seed) {
    sketchlab::CounterRng rng(seed);
    std::vector<Edge> edges;
    for (Vertex u = 0; u < n; ++u)
        for (Vertex v = u + 1; v < n; ++v)
            if (rng.bernoulli(p)) edges.push_back({u, v});
    return Graph(n, std::move(edges));
}

}  // namespace testing_support
