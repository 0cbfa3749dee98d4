#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sketchlab/errors.hpp"
#include "sketchlab/graph.hpp"

namespace sketchlab {

inline constexpr double kEigenTolerance = 1e-9;
inline constexpr std::size_t kMaxExactVertices = 22;

inline Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigensolve(const Eigen::MatrixXd& m,
                                                                   bool with_vectors = true) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        m, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalFailure("symmetric eigensolver did not converge");
    return solver;
}

// Eigenvalues below 1e-9 * (largest |eigenvalue|) are treated as zero.
inline Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m) {
    if (m.rows() == 0) return m;
    auto solver = eigensolve(m);
    const auto& values = solver.eigenvalues();
    const double cutoff = kEigenTolerance * values.cwiseAbs().maxCoeff();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i)
        if (std::abs(values(i)) > cutoff) inv(i) = 1.0 / values(i);
    const auto& q = solver.eigenvectors();
    return q * inv.asDiagonal() * q.transpose();
}

// Second smallest eigenvalue of the normalized Laplacian (degree-positive vertices).
inline double spectral_gap(const Graph& g) {
    auto nl = normalized_laplacian(g);
    require(nl.vertices.size() >= 2, "spectral_gap needs at least 2 vertices of positive degree");
    auto values = eigensolve(nl.matrix, false).eigenvalues();
    return std::clamp(values(1), 0.0, 2.0);
}

struct Cut {
    std::vector<Vertex> side;
    std::uint64_t crossing = 0;
    std::uint64_t vol_side = 0;
    std::uint64_t vol_complement = 0;

    double conductance() const {
        const auto denom = std::min(vol_side, vol_complement);
        return denom == 0 ? std::numeric_limits<double>::infinity() : static_cast<double>(crossing) / denom;
    }
};

// a/b < c/d on non-negative integers with positive denominators.
inline bool ratio_less(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
    return static_cast<unsigned __int128>(a) * d < static_cast<unsigned __int128>(c) * b;
}

inline bool ratio_equal(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
    return static_cast<unsigned __int128>(a) * d == static_cast<unsigned __int128>(c) * b;
}

// Builds the cut {side, rest} over the degree-positive vertices, normalized so `side` has the smaller
// volume (ties: lexicographically smaller vertex list).
inline Cut make_cut(const Graph& g, std::vector<Vertex> side) {
    std::sort(side.begin(), side.end());
    side.erase(std::unique(side.begin(), side.end()), side.end());
    std::vector<char> in(g.n(), 0);
    for (Vertex v : side) {
        require(v < g.n(), "cut vertex out of range");
        in[v] = 1;
    }
    Cut cut;
    for (const auto& e : g.edges())
        if (in[e.u] != in[e.v]) ++cut.crossing;
    std::vector<Vertex> rest;
    for (Vertex v = 0; v < g.n(); ++v) {
        if (g.degree(v) == 0) continue;
        if (in[v])
            cut.vol_side += g.degree(v);
        else {
            cut.vol_complement += g.degree(v);
            rest.push_back(v);
        }
    }
    std::erase_if(side, [&](Vertex v) { return g.degree(v) == 0; });
    if (cut.vol_complement < cut.vol_side ||
        (cut.vol_complement == cut.vol_side && std::lexicographical_compare(rest.begin(), rest.end(),
                                                                            side.begin(), side.end()))) {
        std::swap(cut.vol_side, cut.vol_complement);
        side.swap(rest);
    }
    cut.side = std::move(side);
    return cut;
}

namespace detail {

// Lexicographic order of the ascending element lists of two bitmasks.
inline bool mask_lex_less(std::uint32_t a, std::uint32_t b) {
    if (a == b) return false;
    const std::uint32_t x = a ^ b;
    const std::uint32_t t = x & (~x + 1);
    const std::uint32_t at_or_above = ~(t - 1);
    if (a & t) return (b & at_or_above) != 0;
    return (a & at_or_above) == 0;
}

}  // namespace detail

// Exact conductance by Gray-code enumeration of all cuts of the degree-positive vertices.
inline Cut conductance_exact(const Graph& g) {
    const auto vertices = g.degree_positive_vertices();
    const std::size_t k = vertices.size();
    require(k >= 2, "conductance_exact needs at least 2 vertices of positive degree");
    require(k <= kMaxExactVertices, "conductance_exact enumerates 2^(k-1) cuts and is limited to " +
                                        std::to_string(kMaxExactVertices) + " vertices of positive degree (got " +
                                        std::to_string(k) + "); use spectral_gap/2 as a lower bound instead");
    std::vector<Vertex> local(g.n(), UINT32_MAX);
    for (std::size_t i = 0; i < k; ++i) local[vertices[i]] = static_cast<Vertex>(i);
    std::vector<std::uint32_t> adj(k, 0), deg(k, 0);
    for (const auto& e : g.edges()) {
        adj[local[e.u]] |= 1u << local[e.v];
        adj[local[e.v]] |= 1u << local[e.u];
    }
    std::uint64_t vol = 0;
    for (std::size_t i = 0; i < k; ++i) {
        deg[i] = static_cast<std::uint32_t>(std::popcount(adj[i]));
        vol += deg[i];
    }
    const std::uint32_t all = k == 32 ? ~0u : ((1u << k) - 1);

    auto normalized = [&](std::uint32_t mask, std::uint64_t vol_mask) {
        const std::uint32_t comp = all & ~mask;
        const std::uint64_t vol_comp = vol - vol_mask;
        if (vol_mask < vol_comp) return mask;
        if (vol_comp < vol_mask) return comp;
        return detail::mask_lex_less(mask, comp) ? mask : comp;
    };

    // Subsets of the first k-1 vertices cover every cut once.
    std::uint32_t mask = 0;
    std::uint64_t crossing = 0, vol_mask = 0;
    std::uint64_t best_c = 0, best_v = 0;
    std::uint32_t best_side = 0;
    bool have_best = false;
    const std::uint64_t steps = (std::uint64_t{1} << (k - 1)) - 1;
    for (std::uint64_t step = 1; step <= steps; ++step) {
        const int i = std::countr_zero(step);
        const std::uint32_t bit = 1u << i;
        const auto inside = static_cast<std::uint64_t>(std::popcount(adj[i] & mask));
        if (mask & bit) {
            mask &= ~bit;
            crossing = crossing + 2 * inside - deg[i];
            vol_mask -= deg[i];
        } else {
            mask |= bit;
            crossing = crossing + deg[i] - 2 * inside;
            vol_mask += deg[i];
        }
        const std::uint64_t denom = std::min(vol_mask, vol - vol_mask);
        if (denom == 0) continue;
        if (!have_best || ratio_less(crossing, denom, best_c, best_v)) {
            best_c = crossing;
            best_v = denom;
            best_side = normalized(mask, vol_mask);
            have_best = true;
        } else if (ratio_equal(crossing, denom, best_c, best_v)) {
            const std::uint32_t side = normalized(mask, vol_mask);
            if (detail::mask_lex_less(side, best_side)) best_side = side;
        }
    }
    std::vector<Vertex> side;
    for (std::size_t i = 0; i < k; ++i)
        if (best_side & (1u << i)) side.push_back(vertices[i]);
    return make_cut(g, std::move(side));
}

// Best prefix cut of the degree-positive vertices ordered by `score` (ascending, ties by vertex id).
// `score` is indexed like g.degree_positive_vertices(). Equal conductance: smaller side volume wins.
inline Cut sweep_by_scores(const Graph& g, const std::vector<Vertex>& vertices, const Eigen::VectorXd& score) {
    const std::size_t k = vertices.size();
    require(k >= 2 && static_cast<std::size_t>(score.size()) == k, "sweep needs a score per vertex");
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score(a) < score(b); });
    std::vector<char> in(g.n(), 0);
    const std::uint64_t vol = g.volume();
    std::uint64_t crossing = 0, vol_prefix = 0;
    std::uint64_t best_c = 0, best_v = 0, best_side_vol = 0;
    std::size_t best_len = 0;
    for (std::size_t len = 1; len < k; ++len) {
        const Vertex x = vertices[order[len - 1]];
        std::uint64_t inside = 0;
        for (Vertex y : g.neighbors(x)) inside += in[y];
        in[x] = 1;
        crossing = crossing + g.degree(x) - 2 * inside;
        vol_prefix += g.degree(x);
        const std::uint64_t denom = std::min(vol_prefix, vol - vol_prefix);
        if (denom == 0) continue;
        const bool better = best_len == 0 || ratio_less(crossing, denom, best_c, best_v) ||
                            (ratio_equal(crossing, denom, best_c, best_v) && denom < best_side_vol);
        if (better) {
            best_c = crossing;
            best_v = denom;
            best_side_vol = denom;
            best_len = len;
        }
    }
    require(best_len > 0, "sweep found no proper cut");
    std::vector<Vertex> side;
    for (std::size_t i = 0; i < best_len; ++i) side.push_back(vertices[order[i]]);
    return make_cut(g, std::move(side));
}

struct SpectralEmbedding {
    std::vector<Vertex> vertices;
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;  // columns are eigenvectors of the normalized Laplacian
};

inline SpectralEmbedding spectral_embedding(const Graph& g) {
    auto nl = normalized_laplacian(g);
    require(nl.vertices.size() >= 2, "spectral embedding needs at least 2 vertices of positive degree");
    auto solver = eigensolve(nl.matrix);
    return {std::move(nl.vertices), solver.eigenvalues(), solver.eigenvectors()};
}

// Scores D^{-1/2} * (combination of eigenvectors).
inline Eigen::VectorXd degree_scaled(const Graph& g, const SpectralEmbedding& emb, const Eigen::VectorXd& vec) {
    Eigen::VectorXd out(vec.size());
    for (Eigen::Index i = 0; i < vec.size(); ++i)
        out(i) = vec(i) / std::sqrt(static_cast<double>(g.degree(emb.vertices[static_cast<std::size_t>(i)])));
    return out;
}

inline bool is_connected_on_support(const Graph& g) {
    auto vertices = g.degree_positive_vertices();
    if (vertices.empty()) return true;
    auto dist = bfs_distances(g, vertices.front());
    return std::all_of(vertices.begin(), vertices.end(), [&](Vertex v) { return dist[v] != kUnreachable; });
}

inline Cut sweep_cut_with(const Graph& g, const SpectralEmbedding& emb) {
    Cut cut = sweep_by_scores(g, emb.vertices, degree_scaled(g, emb, emb.vectors.col(1)));
    const double lambda = std::max(0.0, emb.values(1));
    if (cut.conductance() > std::sqrt(2.0 * lambda) + kEigenTolerance)
        throw NumericalFailure("sweep cut conductance " + std::to_string(cut.conductance()) +
                               " exceeds sqrt(2*lambda) = " + std::to_string(std::sqrt(2.0 * lambda)));
    return cut;
}

// Fiedler sweep; checks the Cheeger guarantee at runtime.
inline Cut sweep_cut(const Graph& g) {
    require(is_connected_on_support(g), "sweep_cut needs a connected graph (ignoring isolated vertices)");
    return sweep_cut_with(g, spectral_embedding(g));
}

// ---- effective resistance ----

inline double resistance_from_pinv(const Eigen::MatrixXd& pinv, Vertex u, Vertex v) {
    return pinv(u, u) + pinv(v, v) - 2.0 * pinv(u, v);
}

// Caches L^+ for repeated queries on one graph.
class ResistanceCalculator {
public:
    explicit ResistanceCalculator(const Graph& g)
        : n_(g.n()), component_(connected_components(g)), pinv_(pseudo_inverse(laplacian_matrix(g))) {}

    double operator()(Vertex u, Vertex v) const {
        require(u < n_ && v < n_, "resistance vertex out of range");
        require(u != v, "effective resistance needs distinct vertices");
        if (component_[u] != component_[v]) return std::numeric_limits<double>::infinity();
        return resistance_from_pinv(pinv_, u, v);
    }

    const Eigen::MatrixXd& laplacian_pinv() const noexcept { return pinv_; }

private:
    Vertex n_;
    std::vector<std::uint32_t> component_;
    Eigen::MatrixXd pinv_;
};

// b^T L^+ b; +infinity when u and v are disconnected.
inline double effective_resistance(const Graph& g, Vertex u, Vertex v) {
    require(u < g.n() && v < g.n(), "resistance vertex out of range");
    require(u != v, "effective resistance needs distinct vertices");
    DisjointSets sets(g.n());
    for (const auto& e : g.edges()) sets.unite(e.u, e.v);
    if (!sets.same(u, v)) return std::numeric_limits<double>::infinity();
    return resistance_from_pinv(pseudo_inverse(laplacian_matrix(g)), u, v);
}

// Same quantity via a Cholesky solve of the Laplacian of u's component grounded at v.
inline double effective_resistance_grounded(const Graph& g, Vertex u, Vertex v) {
    require(u < g.n() && v < g.n(), "resistance vertex out of range");
    require(u != v, "effective resistance needs distinct vertices");
    auto dist = bfs_distances(g, u);
    if (dist[v] == kUnreachable) return std::numeric_limits<double>::infinity();
    std::vector<Eigen::Index> local(g.n(), -1);
    Eigen::Index k = 0;
    for (Vertex x = 0; x < g.n(); ++x)
        if (dist[x] != kUnreachable && x != v) local[x] = k++;
    Eigen::MatrixXd lg = Eigen::MatrixXd::Zero(k, k);
    for (const auto& e : g.edges()) {
        if (dist[e.u] == kUnreachable) continue;
        const auto a = local[e.u], b = local[e.v];
        if (a >= 0) lg(a, a) += 1.0;
        if (b >= 0) lg(b, b) += 1.0;
        if (a >= 0 && b >= 0) {
            lg(a, b) -= 1.0;
            lg(b, a) -= 1.0;
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(lg);
    if (llt.info() != Eigen::Success) throw NumericalFailure("grounded Laplacian is not positive definite");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
    rhs(local[u]) = 1.0;
    return llt.solve(rhs)(local[u]);
}

// ---- walk matrix diagnostics ----

struct WalkMatrix {
    std::vector<Vertex> vertices;
    Eigen::MatrixXd matrix;  // I - L~/2 on the degree-positive vertices
};

inline WalkMatrix walk_matrix(const Graph& g) {
    auto nl = normalized_laplacian(g);
    require(!nl.vertices.empty(), "walk_matrix needs a vertex of positive degree");
    const auto k = static_cast<Eigen::Index>(nl.vertices.size());
    return {std::move(nl.vertices), Eigen::MatrixXd::Identity(k, k) - 0.5 * nl.matrix};
}

inline Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& m, int t) {
    require(t >= 0, "matrix power needs t >= 0");
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(m.rows(), m.cols());
    Eigen::MatrixXd base = m;
    while (t > 0) {
        if (t & 1) result = result * base;
        t >>= 1;
        if (t > 0) base = base * base;
    }
    return result;
}

inline double trace_power(const Eigen::MatrixXd& m, int t) {
    require(t >= 1, "trace_power needs t >= 1");
    return matrix_power(m, t).trace();
}

// (tr(M^t) - 1)^(1/t): bounds the second eigenvalue when all eigenvalues lie in [0, 1].
inline double lambda2_upper(const Eigen::MatrixXd& m, int t) {
    const double excess = trace_power(m, t) - 1.0;
    if (excess < -kEigenTolerance)
        throw NumericalFailure("trace of M^t fell below 1 (" + std::to_string(excess + 1.0) + ")");
    return std::pow(std::max(0.0, excess), 1.0 / t);
}

struct EntryBoundReport {
    int k = 0;
    double max_excess = 0;  // max over entries of (M^k)_{uv} - bound_{uv}; <= 0 means every entry passes
    std::size_t violations = 0;
    std::size_t entries = 0;
    bool passed() const { return violations == 0; }
};

// Checks (M^k)_{uv} <= sqrt(d_u d_v) (1/D + (1/d_min - 1/D) exp(-eps^2 k / 4)) for every pair.
inline EntryBoundReport entry_bound_check(const Graph& h, double eps, double d_min, int k) {
    require(eps > 0 && d_min > 0 && k >= 0, "entry_bound_check needs eps > 0, d_min > 0, k >= 0");
    const double lambda = spectral_gap(h);
    require(lambda >= eps * eps / 2 - kEigenTolerance,
            "entry_bound_check needs spectral gap >= eps^2/2 (gap " + std::to_string(lambda) + ")");
    auto walk = walk_matrix(h);
    const Eigen::MatrixXd power = matrix_power(walk.matrix, k);
    const double total = static_cast<double>(h.volume());
    const double decay = std::exp(-eps * eps * k / 4.0);
    EntryBoundReport report;
    report.k = k;
    report.max_excess = -std::numeric_limits<double>::infinity();
    const auto size = static_cast<Eigen::Index>(walk.vertices.size());
    for (Eigen::Index a = 0; a < size; ++a) {
        for (Eigen::Index b = 0; b < size; ++b) {
            const double du = h.degree(walk.vertices[static_cast<std::size_t>(a)]);
            const double dv = h.degree(walk.vertices[static_cast<std::size_t>(b)]);
            const double bound = std::sqrt(du * dv) * (1.0 / total + (1.0 / d_min - 1.0 / total) * decay);
            const double excess = power(a, b) - bound;
            report.max_excess = std::max(report.max_excess, excess);
            if (excess > 1e-12) ++report.violations;
            ++report.entries;
        }
    }
    return report;
}

// ---- certificates ----

struct ExpanderCertificate {
    enum class Method { exact, spectral };
    Method method = Method::spectral;
    double value = 0;  // a lower bound on the conductance (exact value for Method::exact)

    bool certifies(double eps) const { return value >= eps; }
    const char* method_name() const { return method == Method::exact ? "exact" : "spectral"; }
};

// Exact conductance when small enough, otherwise the Cheeger lower bound lambda/2.
inline ExpanderCertificate certify_conductance(const Graph& g) {
    const auto k = g.degree_positive_vertices().size();
    if (k < 2) return {ExpanderCertificate::Method::exact, 0.0};
    if (k <= kMaxExactVertices) return {ExpanderCertificate::Method::exact, conductance_exact(g).conductance()};
    return {ExpanderCertificate::Method::spectral, spectral_gap(g) / 2.0};
}

struct SpectralProfile {
    double lambda = 0;
    double conductance_lb = 0;
    std::optional<double> conductance_exact;
    std::uint32_t min_degree = 0;
};

inline SpectralProfile spectral_profile(const Graph& g) {
    SpectralProfile p;
    p.lambda = spectral_gap(g);
    p.conductance_lb = p.lambda / 2.0;
    if (g.degree_positive_vertices().size() <= kMaxExactVertices)
        p.conductance_exact = sketchlab::conductance_exact(g).conductance();
    std::uint32_t best = UINT32_MAX;
    for (Vertex v : g.degree_positive_vertices()) best = std::min(best, g.degree(v));
    p.min_degree = best;
    return p;
}

}  // namespace sketchlab
