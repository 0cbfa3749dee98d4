#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "sketchlab/errors.hpp"

namespace sketchlab {

using Vertex = std::uint32_t;

struct PairIndex {
    std::uint64_t value = 0;
    friend auto operator<=>(const PairIndex&, const PairIndex&) = default;
};

struct Edge {
    Vertex u = 0;
    Vertex v = 0;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge make_edge(Vertex a, Vertex b) {
    require(a != b, "self-loop (" + std::to_string(a) + "," + std::to_string(b) + ")");
    return a < b ? Edge{a, b} : Edge{b, a};
}

constexpr std::uint64_t pair_count(Vertex n) noexcept {
    return static_cast<std::uint64_t>(n) * (n == 0 ? 0 : n - 1) / 2;
}

// Lexicographic rank of (u, v), u < v, among all pairs of [0, n).
inline PairIndex pair_index(Vertex u, Vertex v, Vertex n) {
    require(u < v && v < n, "pair_index needs 0 <= u < v < n, got (" + std::to_string(u) + "," +
                                std::to_string(v) + ") with n=" + std::to_string(n));
    const std::uint64_t uu = u;
    return PairIndex{uu * n - uu * (uu + 1) / 2 + (v - u - 1)};
}

inline PairIndex pair_index(Edge e, Vertex n) { return pair_index(e.u, e.v, n); }

inline Edge pair_unindex(PairIndex p, Vertex n) {
    require(p.value < pair_count(n), "pair index " + std::to_string(p.value) + " out of range");
    // Row u starts at u*n - u(u+1)/2; solve the quadratic then fix rounding.
    const double nn = static_cast<double>(n);
    const double disc = (2 * nn - 1) * (2 * nn - 1) - 8.0 * static_cast<double>(p.value);
    auto u = static_cast<std::int64_t>(std::floor(((2 * nn - 1) - std::sqrt(std::max(0.0, disc))) / 2));
    auto row_start = [n](std::int64_t r) {
        return static_cast<std::uint64_t>(r) * n - static_cast<std::uint64_t>(r) * (r + 1) / 2;
    };
    u = std::clamp<std::int64_t>(u, 0, static_cast<std::int64_t>(n) - 2);
    while (u > 0 && row_start(u) > p.value) --u;
    while (u + 1 <= static_cast<std::int64_t>(n) - 2 && row_start(u + 1) <= p.value) ++u;
    const auto v = static_cast<Vertex>(p.value - row_start(u) + u + 1);
    return Edge{static_cast<Vertex>(u), v};
}

// Immutable simple undirected graph. Edges are stored sorted (u < v), so edge order is pair-index order.
class Graph {
public:
    Graph() = default;
    explicit Graph(Vertex n) : n_(n), offsets_(static_cast<std::size_t>(n) + 1, 0) {}

    Graph(Vertex n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
        for (auto& e : edges_) {
            require(e.u < n_ && e.v < n_, "edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                                              ") out of range for n=" + std::to_string(n_));
            e = make_edge(e.u, e.v);
        }
        std::sort(edges_.begin(), edges_.end());
        auto dup = std::adjacent_find(edges_.begin(), edges_.end());
        require(dup == edges_.end(), dup == edges_.end() ? "" :
                "duplicate edge (" + std::to_string(dup->u) + "," + std::to_string(dup->v) + ")");
        build_adjacency();
    }

    Vertex n() const noexcept { return n_; }
    std::size_t m() const noexcept { return edges_.size(); }
    std::span<const Edge> edges() const noexcept { return edges_; }

    std::span<const Vertex> neighbors(Vertex v) const {
        return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
    }
    std::uint32_t degree(Vertex v) const { return offsets_[v + 1] - offsets_[v]; }

    bool has_edge(Vertex a, Vertex b) const {
        if (a == b || a >= n_ || b >= n_) return false;
        auto nb = neighbors(a);
        return std::binary_search(nb.begin(), nb.end(), b);
    }
    bool has_edge(Edge e) const { return has_edge(e.u, e.v); }

    std::uint64_t volume() const noexcept { return 2 * static_cast<std::uint64_t>(edges_.size()); }

    std::uint64_t volume(std::span<const Vertex> vertices) const {
        std::uint64_t total = 0;
        for (Vertex v : vertices) total += degree(v);
        return total;
    }

    std::uint32_t min_degree() const {
        std::uint32_t best = UINT32_MAX;
        for (Vertex v = 0; v < n_; ++v) best = std::min(best, degree(v));
        return n_ == 0 ? 0 : best;
    }

    std::vector<Vertex> degree_positive_vertices() const {
        std::vector<Vertex> out;
        for (Vertex v = 0; v < n_; ++v)
            if (degree(v) > 0) out.push_back(v);
        return out;
    }

    Graph with_edge(Edge e) const {
        auto edges = edges_;
        edges.push_back(e);
        return Graph(n_, std::move(edges));
    }

    Graph without_edge(Edge e) const {
        e = make_edge(e.u, e.v);
        auto edges = edges_;
        auto it = std::lower_bound(edges.begin(), edges.end(), e);
        require(it != edges.end() && *it == e, "edge not in graph");
        edges.erase(it);
        return Graph(n_, std::move(edges));
    }

    friend bool operator==(const Graph& a, const Graph& b) { return a.n_ == b.n_ && a.edges_ == b.edges_; }

private:
    void build_adjacency() {
        offsets_.assign(static_cast<std::size_t>(n_) + 1, 0);
        for (const auto& e : edges_) {
            ++offsets_[e.u + 1];
            ++offsets_[e.v + 1];
        }
        std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
        adjacency_.assign(2 * edges_.size(), 0);
        std::vector<std::uint32_t> fill(offsets_.begin(), offsets_.end() - 1);
        for (const auto& e : edges_) {
            adjacency_[fill[e.u]++] = e.v;
            adjacency_[fill[e.v]++] = e.u;
        }
        for (Vertex v = 0; v < n_; ++v)
            std::sort(adjacency_.begin() + offsets_[v], adjacency_.begin() + offsets_[v + 1]);
    }

    Vertex n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::uint32_t> offsets_{0};
    std::vector<Vertex> adjacency_;
};

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (size_[a] < size_[b] || (size_[a] == size_[b] && b < a)) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        return true;
    }

    bool same(std::size_t a, std::size_t b) { return find(a) == find(b); }
    std::size_t size() const noexcept { return parent_.size(); }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
};

// Component label per vertex; labels are 0.. in order of each component's smallest vertex.
inline std::vector<std::uint32_t> connected_components(const Graph& g) {
    DisjointSets sets(g.n());
    for (const auto& e : g.edges()) sets.unite(e.u, e.v);
    std::vector<std::uint32_t> label(g.n(), UINT32_MAX);
    std::vector<std::uint32_t> root_label(g.n(), UINT32_MAX);
    std::uint32_t next = 0;
    for (Vertex v = 0; v < g.n(); ++v) {
        auto r = sets.find(v);
        if (root_label[r] == UINT32_MAX) root_label[r] = next++;
        label[v] = root_label[r];
    }
    return label;
}

inline std::size_t component_count(const Graph& g) {
    auto labels = connected_components(g);
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

inline constexpr std::uint32_t kUnreachable = UINT32_MAX;

inline std::vector<std::uint32_t> bfs_distances(const Graph& g, Vertex source) {
    require(source < g.n(), "bfs source out of range");
    std::vector<std::uint32_t> dist(g.n(), kUnreachable);
    std::queue<Vertex> frontier;
    dist[source] = 0;
    frontier.push(source);
    while (!frontier.empty()) {
        Vertex x = frontier.front();
        frontier.pop();
        for (Vertex y : g.neighbors(x)) {
            if (dist[y] == kUnreachable) {
                dist[y] = dist[x] + 1;
                frontier.push(y);
            }
        }
    }
    return dist;
}

inline std::optional<std::uint32_t> bfs_distance(const Graph& g, Vertex u, Vertex v) {
    require(u < g.n() && v < g.n(), "bfs_distance vertex out of range");
    if (u == v) return 0u;
    std::vector<std::uint32_t> dist(g.n(), kUnreachable);
    std::queue<Vertex> frontier;
    dist[u] = 0;
    frontier.push(u);
    while (!frontier.empty()) {
        Vertex x = frontier.front();
        frontier.pop();
        for (Vertex y : g.neighbors(x)) {
            if (dist[y] != kUnreachable) continue;
            dist[y] = dist[x] + 1;
            if (y == v) return dist[y];
            frontier.push(y);
        }
    }
    return std::nullopt;
}

inline Graph intersect(const Graph& g, const Graph& h) {
    require(g.n() == h.n(), "intersect: vertex counts differ");
    std::vector<Edge> out;
    std::set_intersection(g.edges().begin(), g.edges().end(), h.edges().begin(), h.edges().end(),
                          std::back_inserter(out));
    return Graph(g.n(), std::move(out));
}

inline Graph edge_union(const Graph& g, const Graph& h) {
    require(g.n() == h.n(), "edge_union: vertex counts differ");
    std::vector<Edge> out;
    std::set_union(g.edges().begin(), g.edges().end(), h.edges().begin(), h.edges().end(),
                   std::back_inserter(out));
    return Graph(g.n(), std::move(out));
}

inline bool is_subgraph(const Graph& h, const Graph& g) {
    return h.n() == g.n() && std::includes(g.edges().begin(), g.edges().end(), h.edges().begin(), h.edges().end());
}

// Same vertex labels; keeps edges with both endpoints selected.
inline Graph induced_subgraph(const Graph& g, std::span<const Vertex> vertices) {
    std::vector<char> keep(g.n(), 0);
    for (Vertex v : vertices) {
        require(v < g.n(), "induced_subgraph vertex out of range");
        keep[v] = 1;
    }
    std::vector<Edge> out;
    for (const auto& e : g.edges())
        if (keep[e.u] && keep[e.v]) out.push_back(e);
    return Graph(g.n(), std::move(out));
}

// Relabelled induced subgraph on 0..k-1; `vertices` maps new labels back to old ones.
struct CompactSubgraph {
    Graph graph;
    std::vector<Vertex> vertices;
};

inline CompactSubgraph compact_induced_subgraph(const Graph& g, std::vector<Vertex> vertices) {
    std::sort(vertices.begin(), vertices.end());
    vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
    std::vector<Vertex> local(g.n(), UINT32_MAX);
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        require(vertices[i] < g.n(), "compact_induced_subgraph vertex out of range");
        local[vertices[i]] = static_cast<Vertex>(i);
    }
    std::vector<Edge> out;
    for (Vertex v : vertices)
        for (Vertex w : g.neighbors(v))
            if (v < w && local[w] != UINT32_MAX) out.push_back(Edge{local[v], local[w]});
    return {Graph(static_cast<Vertex>(vertices.size()), std::move(out)), std::move(vertices)};
}

// ---- matrices ----

inline Eigen::MatrixXd adjacency_matrix(const Graph& g) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(g.n(), g.n());
    for (const auto& e : g.edges()) a(e.u, e.v) = a(e.v, e.u) = 1.0;
    return a;
}

inline Eigen::MatrixXd degree_matrix(const Graph& g) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(g.n(), g.n());
    for (Vertex v = 0; v < g.n(); ++v) d(v, v) = g.degree(v);
    return d;
}

inline Eigen::MatrixXd laplacian_matrix(const Graph& g) {
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(g.n(), g.n());
    for (const auto& e : g.edges()) {
        l(e.u, e.u) += 1.0;
        l(e.v, e.v) += 1.0;
        l(e.u, e.v) -= 1.0;
        l(e.v, e.u) -= 1.0;
    }
    return l;
}

// Signed incidence matrix: one row per vertex pair, +1 at the smaller endpoint, -1 at the larger.
inline Eigen::SparseMatrix<double> incidence_matrix(const Graph& g) {
    Eigen::SparseMatrix<double> b(static_cast<Eigen::Index>(pair_count(g.n())), g.n());
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(2 * g.m());
    for (const auto& e : g.edges()) {
        const auto row = static_cast<Eigen::Index>(pair_index(e, g.n()).value);
        entries.emplace_back(row, e.u, 1.0);
        entries.emplace_back(row, e.v, -1.0);
    }
    b.setFromTriplets(entries.begin(), entries.end());
    return b;
}

inline Eigen::VectorXd incidence_vector(Edge e, Vertex n) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(e.u) = 1.0;
    b(e.v) = -1.0;
    return b;
}

// Normalized Laplacian on the degree-positive vertices only; `vertices[i]` is the graph vertex of row i.
struct NormalizedLaplacian {
    std::vector<Vertex> vertices;
    Eigen::MatrixXd matrix;
};

inline NormalizedLaplacian normalized_laplacian(const Graph& g) {
    NormalizedLaplacian out;
    out.vertices = g.degree_positive_vertices();
    const auto k = static_cast<Eigen::Index>(out.vertices.size());
    std::vector<Eigen::Index> local(g.n(), -1);
    for (Eigen::Index i = 0; i < k; ++i) local[out.vertices[i]] = i;
    out.matrix = Eigen::MatrixXd::Identity(k, k);
    for (const auto& e : g.edges()) {
        const double w = 1.0 / std::sqrt(static_cast<double>(g.degree(e.u)) * g.degree(e.v));
        out.matrix(local[e.u], local[e.v]) -= w;
        out.matrix(local[e.v], local[e.u]) -= w;
    }
    return out;
}

struct GraphMatrices {
    Eigen::MatrixXd adjacency;
    Eigen::MatrixXd degree;
    Eigen::SparseMatrix<double> incidence;
    Eigen::MatrixXd laplacian;
    NormalizedLaplacian normalized;
};

inline GraphMatrices build_matrices(const Graph& g) {
    return {adjacency_matrix(g), degree_matrix(g), incidence_matrix(g), laplacian_matrix(g), normalized_laplacian(g)};
}

}  // namespace sketchlab
