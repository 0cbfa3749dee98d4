#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include <json.hpp>

#include "sketchlab/errors.hpp"
#include "sketchlab/graph.hpp"
#include "sketchlab/graph_io.hpp"
#include "sketchlab/random.hpp"
#include "sketchlab/spectral.hpp"

namespace sketchlab {

struct ExpanderPart {
    std::vector<Vertex> vertices;
    std::vector<Edge> edges;
    ExpanderCertificate certificate;
    std::uint32_t min_degree = 0;
};

struct DecompositionResult {
    Vertex n = 0;
    std::size_t m = 0;
    double eps = 0;
    double d_min = 0;
    std::vector<ExpanderPart> parts;
    std::vector<Edge> leftover;

    // 8 eps m log2(n) + n d_min
    double leftover_bound() const {
        return 8.0 * eps * static_cast<double>(m) * (n > 1 ? std::log2(static_cast<double>(n)) : 0.0) +
               static_cast<double>(n) * d_min;
    }
};

namespace detail {

inline std::vector<Vertex> to_original(const std::vector<Vertex>& map, const std::vector<Vertex>& local) {
    std::vector<Vertex> out;
    out.reserve(local.size());
    for (Vertex v : local) out.push_back(map[v]);
    return out;
}

// Sweep over D^{-1/2} times a few low eigenvector combinations; returns the best cut found.
inline Cut multiway_sweep(const Graph& h, const SpectralEmbedding& emb) {
    std::vector<Eigen::VectorXd> directions;
    const Eigen::Index cols = emb.vectors.cols();
    for (Eigen::Index c = 1; c < std::min<Eigen::Index>(cols, 3); ++c) directions.push_back(emb.vectors.col(c));
    if (cols >= 3) {
        directions.push_back(emb.vectors.col(1) + emb.vectors.col(2));
        directions.push_back(emb.vectors.col(1) - emb.vectors.col(2));
    }
    std::optional<Cut> best;
    for (const auto& dir : directions) {
        Cut cut = sweep_by_scores(h, emb.vertices, degree_scaled(h, emb, dir));
        if (!best || cut.conductance() < best->conductance()) best = std::move(cut);
    }
    return *best;
}

}  // namespace detail

// Recursive pruning and sparse-cut splitting. `d_min` may be any non-negative real here.
inline DecompositionResult decompose_with_floor(const Graph& g, double eps, double d_min) {
    DecompositionResult result;
    result.n = g.n();
    result.m = g.m();
    result.eps = eps;
    result.d_min = d_min;

    std::vector<std::vector<Vertex>> work;
    work.emplace_back();
    for (Vertex v = 0; v < g.n(); ++v) work.back().push_back(v);

    while (!work.empty()) {
        auto sub = compact_induced_subgraph(g, std::move(work.back()));
        work.pop_back();
        const Graph& h = sub.graph;
        const Vertex k = h.n();

        // Iterated pruning of low-degree vertices.
        std::vector<std::uint32_t> deg(k);
        std::vector<char> alive(k, 1), queued(k, 0);
        std::queue<Vertex> q;
        for (Vertex v = 0; v < k; ++v) {
            deg[v] = h.degree(v);
            if (deg[v] < d_min) {
                queued[v] = 1;
                q.push(v);
            }
        }
        while (!q.empty()) {
            const Vertex x = q.front();
            q.pop();
            alive[x] = 0;
            for (Vertex y : h.neighbors(x)) {
                if (!alive[y]) continue;
                result.leftover.push_back(make_edge(sub.vertices[x], sub.vertices[y]));
                if (--deg[y] < d_min && !queued[y]) {
                    queued[y] = 1;
                    q.push(y);
                }
            }
        }
        std::vector<Vertex> survivors;
        for (Vertex v = 0; v < k; ++v)
            if (alive[v] && deg[v] > 0) survivors.push_back(sub.vertices[v]);
        if (survivors.size() < 2) continue;

        auto part = compact_induced_subgraph(g, survivors);
        const Graph& p = part.graph;
        const auto labels = connected_components(p);
        const auto comps = *std::max_element(labels.begin(), labels.end()) + 1;
        if (comps > 1) {
            std::vector<std::vector<Vertex>> groups(comps);
            for (Vertex v = 0; v < p.n(); ++v) groups[labels[v]].push_back(part.vertices[v]);
            for (auto it = groups.rbegin(); it != groups.rend(); ++it) work.push_back(std::move(*it));
            continue;
        }

        std::optional<ExpanderCertificate> certificate;
        std::optional<Cut> split;
        if (p.n() <= kMaxExactVertices) {
            Cut cut = conductance_exact(p);
            if (cut.conductance() >= eps)
                certificate = ExpanderCertificate{ExpanderCertificate::Method::exact, cut.conductance()};
            else
                split = std::move(cut);
        } else {
            const auto emb = spectral_embedding(p);
            const double lambda = std::max(0.0, emb.values(1));
            if (lambda / 2.0 >= eps) {
                certificate = ExpanderCertificate{ExpanderCertificate::Method::spectral, lambda / 2.0};
            } else {
                Cut cut = sweep_cut_with(p, emb);
                if (cut.conductance() >= eps) {
                    Cut retry = detail::multiway_sweep(p, emb);
                    if (retry.conductance() < cut.conductance()) cut = std::move(retry);
                }
                if (cut.conductance() >= eps)
                    throw NumericalFailure(
                        "certification gap: part of " + std::to_string(p.n()) + " vertices has lambda/2 = " +
                        std::to_string(lambda / 2.0) + " < eps = " + std::to_string(eps) +
                        " but the best sweep cut has conductance " + std::to_string(cut.conductance()));
                split = std::move(cut);
            }
        }

        if (certificate) {
            ExpanderPart out;
            out.vertices = part.vertices;
            for (const auto& e : p.edges())
                out.edges.push_back(make_edge(part.vertices[e.u], part.vertices[e.v]));
            out.certificate = *certificate;
            out.min_degree = p.min_degree();
            result.parts.push_back(std::move(out));
            continue;
        }

        std::vector<char> in_side(p.n(), 0);
        for (Vertex v : split->side) in_side[v] = 1;
        std::vector<Vertex> side, rest;
        for (Vertex v = 0; v < p.n(); ++v) (in_side[v] ? side : rest).push_back(part.vertices[v]);
        for (const auto& e : p.edges())
            if (in_side[e.u] != in_side[e.v]) result.leftover.push_back(make_edge(part.vertices[e.u], part.vertices[e.v]));
        work.push_back(std::move(rest));
        work.push_back(std::move(side));
    }

    std::sort(result.parts.begin(), result.parts.end(),
              [](const ExpanderPart& a, const ExpanderPart& b) { return a.vertices.front() < b.vertices.front(); });
    std::sort(result.leftover.begin(), result.leftover.end());
    if (static_cast<double>(result.leftover.size()) > result.leftover_bound() + 1e-9)
        throw NumericalFailure("leftover edge bound violated: |E0| = " + std::to_string(result.leftover.size()) +
                               " > " + std::to_string(result.leftover_bound()));
    return result;
}

// Parts are eps-expanders (certified) with minimum degree >= d_min; the rest of the edges form E0.
inline DecompositionResult expander_decompose(const Graph& g, double eps, double d_min) {
    require(eps > 0 && eps < 0.5, "expander_decompose needs eps in (0, 1/2)");
    require(d_min >= 1, "expander_decompose needs d_min >= 1");
    return decompose_with_floor(g, eps, d_min);
}

inline nlohmann::json parts_json(const std::vector<ExpanderPart>& parts) {
    auto out = nlohmann::json::array();
    for (const auto& p : parts)
        out.push_back({{"vertices", p.vertices},
                       {"edges", edges_to_json(p.edges)},
                       {"certificate", {{"method", p.certificate.method_name()}, {"value", p.certificate.value}}},
                       {"min_degree", p.min_degree}});
    return out;
}

inline nlohmann::json to_json(const DecompositionResult& r) {
    return {{"n", r.n},
            {"m", r.m},
            {"eps", r.eps},
            {"d_min", r.d_min},
            {"parts", parts_json(r.parts)},
            {"E0", edges_to_json(r.leftover)},
            {"E0_bound", r.leftover_bound()}};
}

// ---- hierarchical decomposition ----

struct HierarchyLevel {
    std::size_t input_edges = 0;  // |F_{i-1}|
    double d_min = 0;             // D_i = |F_{i-1}| / (36 n)
    std::vector<Edge> edges;      // E_i
    std::vector<ExpanderPart> expanders;
    std::size_t leftover_edges = 0;  // |F_i|
};

struct HierarchicalDecomposition {
    Vertex n = 0;
    std::size_t m = 0;
    double eps = 0;
    std::vector<HierarchyLevel> levels;
    std::vector<Edge> terminal;  // F_t
    std::optional<double> threshold;  // n^{1+delta} d^{3/2} when chosen automatically
    bool rule_attained = true;

    std::size_t t() const { return levels.size(); }

    // m_1 <= m, m_{i+1} <= m_i / 2, |F_i| <= |F_{i-1}| / 4.
    bool schedule_holds() const {
        std::size_t prev_m = m;
        for (std::size_t i = 0; i < levels.size(); ++i) {
            const auto& lv = levels[i];
            if (4 * lv.leftover_edges > lv.input_edges) return false;
            const std::size_t mi = lv.edges.size();
            if (i == 0 ? mi > m : 2 * mi > prev_m) return false;
            prev_m = mi;
        }
        return true;
    }
};

inline double hierarchy_eps(Vertex n) { return 1.0 / (36.0 * std::log2(static_cast<double>(n))); }

namespace detail {

inline HierarchyLevel decompose_level(Vertex n, const std::vector<Edge>& remaining, std::vector<Edge>& next) {
    HierarchyLevel level;
    level.input_edges = remaining.size();
    level.d_min = static_cast<double>(remaining.size()) / (36.0 * n);
    const auto result = decompose_with_floor(Graph(n, remaining), hierarchy_eps(n), level.d_min);
    for (const auto& part : result.parts) level.edges.insert(level.edges.end(), part.edges.begin(), part.edges.end());
    std::sort(level.edges.begin(), level.edges.end());
    level.expanders = result.parts;
    next = result.leftover;
    level.leftover_edges = next.size();
    if (4 * level.leftover_edges > level.input_edges)
        throw NumericalFailure("hierarchy level left " + std::to_string(level.leftover_edges) + " of " +
                               std::to_string(level.input_edges) + " edges (more than a quarter)");
    return level;
}

}  // namespace detail

// t rounds of decomposition; level i uses eps = 1/(36 log2 n) and d_min = |F_{i-1}|/(36 n).
inline HierarchicalDecomposition hierarchical_decompose(const Graph& g, std::size_t t) {
    require(t >= 1, "hierarchical_decompose needs t >= 1");
    require(g.n() >= 2, "hierarchical_decompose needs n >= 2");
    HierarchicalDecomposition out;
    out.n = g.n();
    out.m = g.m();
    out.eps = hierarchy_eps(g.n());
    std::vector<Edge> remaining(g.edges().begin(), g.edges().end());
    for (std::size_t i = 0; i < t; ++i) {
        std::vector<Edge> next;
        out.levels.push_back(detail::decompose_level(g.n(), remaining, next));
        remaining = std::move(next);
    }
    out.terminal = std::move(remaining);
    return out;
}

// Picks t as the largest index with m_{t-1} >= n^{1+delta} d^{3/2} (m_0 = m).
inline HierarchicalDecomposition hierarchical_decompose_auto(const Graph& g, double d, double delta) {
    require(g.n() >= 2, "hierarchical_decompose needs n >= 2");
    require(d > 0 && delta >= 0, "auto rule needs d > 0 and delta >= 0");
    HierarchicalDecomposition out;
    out.n = g.n();
    out.m = g.m();
    out.eps = hierarchy_eps(g.n());
    const double threshold = std::pow(static_cast<double>(g.n()), 1.0 + delta) * std::pow(d, 1.5);
    out.threshold = threshold;
    out.rule_attained = static_cast<double>(g.m()) >= threshold;
    std::vector<Edge> remaining(g.edges().begin(), g.edges().end());
    while (true) {
        std::vector<Edge> next;
        out.levels.push_back(detail::decompose_level(g.n(), remaining, next));
        remaining = std::move(next);
        if (static_cast<double>(out.levels.back().edges.size()) < threshold) break;
    }
    out.terminal = std::move(remaining);
    return out;
}

inline nlohmann::json to_json(const HierarchicalDecomposition& h) {
    auto levels = nlohmann::json::array();
    for (const auto& lv : h.levels)
        levels.push_back({{"input_edges", lv.input_edges},
                          {"d_min", lv.d_min},
                          {"m", lv.edges.size()},
                          {"leftover_edges", lv.leftover_edges},
                          {"expanders", parts_json(lv.expanders)}});
    nlohmann::json doc = {{"n", h.n},         {"m", h.m},
                          {"eps", h.eps},     {"t", h.t()},
                          {"levels", levels}, {"terminal", edges_to_json(h.terminal)},
                          {"schedule_holds", h.schedule_holds()}};
    if (h.threshold) {
        doc["threshold"] = *h.threshold;
        doc["rule_attained"] = h.rule_attained;
    }
    return doc;
}

// ---- vertex sampling and layered paths ----

struct VertexSample {
    Graph graph;  // same labels; edges with both endpoints kept
    std::vector<Vertex> kept;
};

inline VertexSample vertex_sample(const Graph& g, double p, std::uint64_t seed) {
    require(p > 0 && p <= 1, "vertex_sample needs p in (0, 1]");
    CounterRng rng(derive_seed(seed, std::string_view("vertex-sample")));
    VertexSample out;
    for (Vertex v = 0; v < g.n(); ++v)
        if (rng.bernoulli(p)) out.kept.push_back(v);
    out.graph = induced_subgraph(g, out.kept);
    return out;
}

inline std::uint32_t layer_gap(std::uint32_t a, std::uint32_t b) { return a > b ? a - b : b - a; }

// Keeps within-layer and adjacent-layer edges.
inline Graph partition_intersect(const Graph& h, const std::vector<std::uint32_t>& layers) {
    require(layers.size() == h.n(), "partition_intersect needs a layer for every vertex");
    std::vector<Edge> kept;
    for (const auto& e : h.edges())
        if (layer_gap(layers[e.u], layers[e.v]) <= 1) kept.push_back(e);
    return Graph(h.n(), std::move(kept));
}

inline std::vector<std::vector<Vertex>> layer_sets(const std::vector<std::uint32_t>& layers, std::uint32_t d) {
    std::vector<std::vector<Vertex>> sets(d);
    for (Vertex v = 0; v < layers.size(); ++v) {
        require(layers[v] < d, "layer index out of range");
        sets[layers[v]].push_back(v);
    }
    return sets;
}

// within[i] = ordered pairs (u,v) in V_i x V_i with uv in E; adjacent[i] = edges between V_i and V_{i+1}.
struct LayerCounts {
    std::vector<std::uint64_t> within;
    std::vector<std::uint64_t> adjacent;
    std::uint32_t min_degree = 0;

    // Every count lies in [lo, hi] * (2m/d^2).
    bool in_band(std::size_t m, std::uint32_t d, double lo = 49.0 / 64.0, double hi = 81.0 / 64.0) const {
        const double unit = 2.0 * static_cast<double>(m) / (static_cast<double>(d) * d);
        auto ok = [&](std::uint64_t c) { return c >= lo * unit && c <= hi * unit; };
        return std::all_of(within.begin(), within.end(), ok) && std::all_of(adjacent.begin(), adjacent.end(), ok);
    }
};

inline LayerCounts layer_counts(const Graph& h, const std::vector<std::uint32_t>& layers, std::uint32_t d) {
    require(layers.size() == h.n(), "layer_counts needs a layer for every vertex");
    LayerCounts out;
    out.within.assign(d, 0);
    out.adjacent.assign(d > 0 ? d - 1 : 0, 0);
    for (const auto& e : h.edges()) {
        const auto a = layers[e.u], b = layers[e.v];
        require(a < d && b < d, "layer index out of range");
        if (a == b)
            out.within[a] += 2;
        else if (layer_gap(a, b) == 1)
            ++out.adjacent[std::min(a, b)];
    }
    out.min_degree = h.n() == 0 ? 0 : h.min_degree();
    return out;
}

struct BalancedPathReport {
    std::uint32_t d = 0;
    double phi = 0;
    std::vector<ExpanderCertificate> windows;
    bool expanders_ok = false;
    bool volumes_ok = false;
    bool heavy_layers_ok = false;
    double worst_expansion = 0;     // min window certificate
    double worst_volume_ratio = 0;  // max_i vol(U_i) / min_j vol_{H_j}(U_j), must be <= 3
    double worst_heavy_ratio = 0;   // min |E(V_j,V_j)| / vol_{H_i}(U_i), must be >= 1/8

    bool all_ok() const { return expanders_ok && volumes_ok && heavy_layers_ok; }
};

// |E(V_j, V_j)| counts ordered pairs (u, v) with both ends in V_j, i.e. twice the number of edges.
inline BalancedPathReport check_balanced_path(const Graph& h, const std::vector<std::uint32_t>& layers,
                                              std::uint32_t d, double phi) {
    require(d >= 2, "check_balanced_path needs d >= 2");
    require(layers.size() == h.n(), "check_balanced_path needs a layer for every vertex");
    const auto sets = layer_sets(layers, d);
    BalancedPathReport report;
    report.d = d;
    report.phi = phi;

    std::vector<std::uint64_t> inner_pairs(d, 0);
    for (const auto& e : h.edges())
        if (layers[e.u] == layers[e.v]) inner_pairs[layers[e.u]] += 2;

    std::vector<std::uint64_t> vol_whole, vol_window;
    report.worst_expansion = std::numeric_limits<double>::infinity();
    report.worst_heavy_ratio = std::numeric_limits<double>::infinity();
    for (std::uint32_t i = 0; i + 1 < d; ++i) {
        std::vector<Vertex> window = sets[i];
        window.insert(window.end(), sets[i + 1].begin(), sets[i + 1].end());
        auto sub = compact_induced_subgraph(h, window);
        const Graph& hi = sub.graph;
        ExpanderCertificate cert{ExpanderCertificate::Method::exact, 0.0};
        if (hi.n() >= 2 && hi.min_degree() > 0 && component_count(hi) == 1) cert = certify_conductance(hi);
        report.windows.push_back(cert);
        report.worst_expansion = std::min(report.worst_expansion, cert.value);
        vol_whole.push_back(h.volume(sub.vertices));
        vol_window.push_back(hi.volume());
        for (std::uint32_t j : {i, i + 1}) {
            const double ratio = hi.volume() == 0 ? 0.0
                                                  : static_cast<double>(inner_pairs[j]) / static_cast<double>(hi.volume());
            report.worst_heavy_ratio = std::min(report.worst_heavy_ratio, ratio);
        }
    }
    report.expanders_ok = report.worst_expansion >= phi;
    const auto max_whole = *std::max_element(vol_whole.begin(), vol_whole.end());
    const auto min_window = *std::min_element(vol_window.begin(), vol_window.end());
    report.worst_volume_ratio = min_window == 0 ? std::numeric_limits<double>::infinity()
                                                : static_cast<double>(max_whole) / static_cast<double>(min_window);
    report.volumes_ok = max_whole <= 3 * min_window && min_window > 0;
    report.heavy_layers_ok = report.worst_heavy_ratio >= 1.0 / 8.0;
    return report;
}

struct ExpansionReport {
    double min_ratio = std::numeric_limits<double>::infinity();
    std::vector<Vertex> worst_set;
    std::size_t tested = 0;
    bool exhaustive = false;
    double floor = 0;
    bool flagged = false;
};

// |E(S, V\S)| / (phi min{vol(S), vol(U_1)}) over sets with vol(S) <= vol(V)/2.
inline ExpansionReport check_expansion_lb(const Graph& h, const std::vector<std::uint32_t>& layers, std::uint32_t d,
                                          double phi, std::size_t trials, std::uint64_t seed,
                                          double floor = 1.0 / 72.0) {
    require(d >= 1 && phi > 0, "check_expansion_lb needs d >= 1 and phi > 0");
    require(layers.size() == h.n(), "check_expansion_lb needs a layer for every vertex");
    const auto sets = layer_sets(layers, d);
    std::vector<Vertex> first_window = sets[0];
    if (d >= 2) first_window.insert(first_window.end(), sets[1].begin(), sets[1].end());
    const std::uint64_t vol_u1 = h.volume(first_window);
    const std::uint64_t vol_all = h.volume();
    ExpansionReport report;
    report.floor = floor;

    auto consider = [&](std::uint64_t crossing, std::uint64_t vol_s, auto&& members) {
        if (vol_s == 0 || 2 * vol_s > vol_all) return;
        ++report.tested;
        const double ratio = static_cast<double>(crossing) / (phi * static_cast<double>(std::min(vol_s, vol_u1)));
        if (ratio < report.min_ratio) {
            report.min_ratio = ratio;
            report.worst_set = members();
        }
    };

    const auto vertices = h.degree_positive_vertices();
    if (vertices.size() <= kMaxExactVertices) {
        report.exhaustive = true;
        const std::size_t k = vertices.size();
        std::vector<Vertex> local(h.n(), UINT32_MAX);
        for (std::size_t i = 0; i < k; ++i) local[vertices[i]] = static_cast<Vertex>(i);
        std::vector<std::uint32_t> adj(k, 0), deg(k, 0);
        for (const auto& e : h.edges()) {
            adj[local[e.u]] |= 1u << local[e.v];
            adj[local[e.v]] |= 1u << local[e.u];
        }
        for (std::size_t i = 0; i < k; ++i) deg[i] = static_cast<std::uint32_t>(std::popcount(adj[i]));
        std::uint32_t mask = 0;
        std::uint64_t crossing = 0, vol_s = 0;
        const std::uint64_t steps = k == 0 ? 0 : (std::uint64_t{1} << k) - 1;
        for (std::uint64_t step = 1; step <= steps; ++step) {
            const int i = std::countr_zero(step);
            const std::uint32_t bit = 1u << i;
            const auto inside = static_cast<std::uint64_t>(std::popcount(adj[i] & mask));
            if (mask & bit) {
                mask &= ~bit;
                crossing = crossing + 2 * inside - deg[i];
                vol_s -= deg[i];
            } else {
                mask |= bit;
                crossing = crossing + deg[i] - 2 * inside;
                vol_s += deg[i];
            }
            consider(crossing, vol_s, [&] {
                std::vector<Vertex> out;
                for (std::size_t j = 0; j < k; ++j)
                    if (mask & (1u << j)) out.push_back(vertices[j]);
                return out;
            });
        }
    } else {
        CounterRng rng(derive_seed(seed, std::string_view("expansion-sets")));
        std::vector<char> in(h.n(), 0);
        for (std::size_t t = 0; t < trials; ++t) {
            std::fill(in.begin(), in.end(), 0);
            switch (t % 3) {
                case 0: {  // random density
                    const double p = rng.uniform01();
                    for (Vertex v = 0; v < h.n(); ++v) in[v] = rng.bernoulli(p);
                    break;
                }
                case 1: {  // contiguous block of layers
                    const auto a = static_cast<std::uint32_t>(rng.below(d));
                    const auto b = static_cast<std::uint32_t>(a + rng.below(d - a));
                    for (Vertex v = 0; v < h.n(); ++v) in[v] = layers[v] >= a && layers[v] <= b;
                    break;
                }
                default: {  // block of layers with random thinning
                    const auto a = static_cast<std::uint32_t>(rng.below(d));
                    const double keep = 0.5 + 0.5 * rng.uniform01();
                    for (Vertex v = 0; v < h.n(); ++v) in[v] = layers[v] <= a && rng.bernoulli(keep);
                    break;
                }
            }
            std::uint64_t vol_s = 0, crossing = 0;
            for (Vertex v = 0; v < h.n(); ++v)
                if (in[v]) vol_s += h.degree(v);
            if (2 * vol_s > vol_all) {
                for (auto& x : in) x = !x;
                vol_s = vol_all - vol_s;
            }
            for (const auto& e : h.edges()) crossing += in[e.u] != in[e.v];
            consider(crossing, vol_s, [&] {
                std::vector<Vertex> out;
                for (Vertex v = 0; v < h.n(); ++v)
                    if (in[v]) out.push_back(v);
                return out;
            });
        }
    }
    report.flagged = report.min_ratio < floor;
    return report;
}

}  // namespace sketchlab
