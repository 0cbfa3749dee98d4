#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sketchlab/decomposition.hpp"
#include "sketchlab/errors.hpp"
#include "sketchlab/graph.hpp"
#include "sketchlab/instances.hpp"
#include "sketchlab/parallel.hpp"
#include "sketchlab/random.hpp"
#include "sketchlab/sketch.hpp"
#include "sketchlab/spectral.hpp"

namespace sketchlab {

inline constexpr double kBridgeTolerance = 1e-9;
inline constexpr double kSpanTolerance = 1e-7;

// ---- KL divergence ----

struct KLReport {
    double R = 0;
    double kl_exact = 0;  // +inf for a bridge
    double kl_bound_quarter = 0;
    double kl_min1 = 0;
    bool bridge = false;
};

// 1/2 (-ln(1-R) - R); series near 0.
inline double kl_closed_form(double R) {
    if (R < 1e-2) {
        double term = R, total = 0;
        for (int k = 2; k <= 14; ++k) {
            term *= R;
            total += term / k;
        }
        return 0.5 * total;
    }
    return 0.5 * (-std::log1p(-R) - R);
}

inline KLReport kl_from_resistance(double R) {
    KLReport r;
    r.R = R;
    r.kl_bound_quarter = R / 4.0;
    if (R >= 1.0 - kBridgeTolerance) {
        r.bridge = true;
        r.kl_exact = std::numeric_limits<double>::infinity();
        r.kl_min1 = 1.0;
        return r;
    }
    r.kl_exact = kl_closed_form(R);
    r.kl_min1 = std::min(1.0, r.kl_exact);
    return r;
}

// KL(N(0, L - b_e b_e^T) || N(0, L)) for an edge e of G.
inline KLReport kl_edge_exact(const Graph& g, Edge e) {
    e = make_edge(e.u, e.v);
    require(e.v < g.n() && g.has_edge(e), "kl_edge_exact needs an edge of G");
    return kl_from_resistance(effective_resistance(g, e.u, e.v));
}

namespace detail {

inline Eigen::MatrixXd range_basis(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es, double cutoff) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) > cutoff) keep.push_back(i);
    Eigen::MatrixXd out(es.eigenvectors().rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]);
    return out;
}

}  // namespace detail

// KL(N(0, s1) || N(0, s2)) for PSD matrices with a common range; +inf when the ranges differ.
inline double kl_gaussian_zero_mean(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2) {
    require(s1.rows() == s1.cols() && s2.rows() == s2.cols() && s1.rows() == s2.rows(),
            "kl_gaussian_zero_mean needs square matrices of equal size");
    const double scale = std::max({1.0, s1.cwiseAbs().maxCoeff(), s2.cwiseAbs().maxCoeff()});
    require((s1 - s1.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale &&
                (s2 - s2.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale,
            "kl_gaussian_zero_mean needs symmetric matrices");
    const auto inf = std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(s1), e2(s2);
    require(e1.eigenvalues().minCoeff() >= -1e-9 * scale && e2.eigenvalues().minCoeff() >= -1e-9 * scale,
            "kl_gaussian_zero_mean needs PSD matrices");
    const double cutoff = kEigenTolerance * scale;
    const Eigen::MatrixXd u1 = detail::range_basis(e1, cutoff);
    const Eigen::MatrixXd u2 = detail::range_basis(e2, cutoff);
    if (u1.cols() != u2.cols()) return inf;
    const Eigen::Index k = u2.cols();
    if (k == 0) return 0.0;
    // Largest sine of the principal angles between the two ranges.
    const Eigen::MatrixXd residual = u1 - u2 * (u2.transpose() * u1);
    const double sine = Eigen::JacobiSVD<Eigen::MatrixXd>(residual).singularValues()(0);
    if (sine > kSpanTolerance) return inf;

    Eigen::VectorXd inv_sqrt(k);
    Eigen::Index j = 0;
    for (Eigen::Index i = 0; i < e2.eigenvalues().size(); ++i)
        if (e2.eigenvalues()(i) > cutoff) inv_sqrt(j++) = 1.0 / std::sqrt(e2.eigenvalues()(i));
    const Eigen::MatrixXd w = inv_sqrt.asDiagonal() * u2.transpose();
    const Eigen::MatrixXd m = w * s1 * w.transpose();
    const Eigen::VectorXd mu = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues();
    double total = 0;
    for (Eigen::Index i = 0; i < k; ++i) {
        if (mu(i) <= 0) return inf;
        total += mu(i) - 1.0 - std::log(mu(i));
    }
    return std::max(0.0, 0.5 * total);
}

// ln det(I + A) >= tr(A) - tr(A^2) for symmetric A with ||A||_2 <= 1/2.
inline bool logdet_check(const Eigen::MatrixXd& a) {
    require(a.rows() == a.cols(), "logdet_check needs a square matrix");
    require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12, "logdet_check needs a symmetric matrix");
    const Eigen::VectorXd lambda = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a, Eigen::EigenvaluesOnly).eigenvalues();
    require(lambda.size() == 0 || lambda.cwiseAbs().maxCoeff() <= 0.5 + 1e-12, "logdet_check needs ||A||_2 <= 1/2");
    double lhs = 0, tr = 0, tr2 = 0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        lhs += std::log1p(lambda(i));
        tr += lambda(i);
        tr2 += lambda(i) * lambda(i);
    }
    return lhs >= tr - tr2 - 1e-12;
}

// ---- sampler specs ----

// "all", "none", "bernoulli:<p>", "level:<j>".
struct SamplerSpec {
    enum class Kind { all, none, bernoulli, level };
    Kind kind = Kind::all;
    double p = 1.0;
    int level = 0;

    static SamplerSpec parse(const std::string& text) {
        SamplerSpec s;
        const auto colon = text.find(':');
        const std::string head = text.substr(0, colon);
        const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
        try {
            if (head == "all" && arg.empty()) {
                s.kind = Kind::all;
            } else if (head == "none" && arg.empty()) {
                s.kind = Kind::none;
            } else if (head == "bernoulli" && !arg.empty()) {
                std::size_t used = 0;
                s.kind = Kind::bernoulli;
                s.p = std::stod(arg, &used);
                if (used != arg.size() || !(s.p >= 0 && s.p <= 1)) throw std::invalid_argument(arg);
            } else if (head == "level" && !arg.empty()) {
                std::size_t used = 0;
                s.kind = Kind::level;
                s.level = std::stoi(arg, &used);
                if (used != arg.size() || s.level < 0 || s.level > 64) throw std::invalid_argument(arg);
            } else {
                throw std::invalid_argument(text);
            }
        } catch (const std::logic_error&) {
            throw ParseError("sampler", "expected all, none, bernoulli:<p in [0,1]> or level:<j>, got '" + text + "'");
        }
        return s;
    }

    std::string to_string() const {
        switch (kind) {
            case Kind::all:
                return "all";
            case Kind::none:
                return "none";
            case Kind::bernoulli: {
                char buf[64];
                std::snprintf(buf, sizeof buf, "bernoulli:%.12g", p);
                return buf;
            }
            case Kind::level:
                return "level:" + std::to_string(level);
        }
        return "";
    }

    SamplingMatrix build(Vertex n, std::uint64_t stream_label, std::uint64_t key) const {
        switch (kind) {
            case Kind::all:
                return SamplingMatrix::all(n);
            case Kind::none:
                return SamplingMatrix::none(n);
            case Kind::bernoulli:
                return SamplingMatrix::bernoulli(n, p, stream_label, key);
            case Kind::level:
                return SamplingMatrix::level(n, level, stream_label, key);
        }
        return SamplingMatrix::all(n);
    }
};

// ---- Monte Carlo summaries ----

struct MeanEstimate {
    double mean = 0;
    double stderr_ = 0;
};

inline MeanEstimate summarize(const std::vector<double>& values) {
    MeanEstimate out;
    if (values.empty()) return out;
    const auto count = static_cast<double>(values.size());
    out.mean = compensated_sum(values) / count;
    if (values.size() > 1) {
        std::vector<double> dev(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) dev[i] = (values[i] - out.mean) * (values[i] - out.mean);
        out.stderr_ = std::sqrt(compensated_sum(dev) / (count - 1.0) / count);
    }
    return out;
}

// ---- expected truncated KL over the hard distribution ----

struct ScalingRow {
    Vertex n = 0;
    std::uint32_t d = 0;
    std::size_t s = 1;
    std::string sampler;
    std::size_t trials = 0;
    double mean_min1_kl = 0;
    double stderr_ = 0;
};

// One sampling matrix S, drawn once per run; the mean is over (G, e*) ~ mu.
// A trial with e* outside S contributes 0; otherwise min(1, KL) at e* on G(S) + e*.
inline ScalingRow estimate_kl_scaling(const SamplerSpec& sampler, Vertex n, std::uint32_t d, std::size_t trials,
                                   std::uint64_t seed) {
    require(trials >= 1, "estimate_kl_scaling needs trials >= 1");
    const SamplingMatrix s = sampler.build(n, 0, derive_seed(seed, std::string_view("kl-scaling-sampler")));
    const auto values = parallel_map(trials, [&](std::size_t t) {
        const auto inst = sample_mu(n, d, derive_seed(seed, std::string_view("kl-scaling-trial"), t));
        if (!s.contains(pair_index(inst.e_star, n).value)) return 0.0;
        Graph h = sampled_subgraph(inst.graph, s);
        if (!h.has_edge(inst.e_star)) h = h.with_edge(inst.e_star);
        return kl_from_resistance(effective_resistance_grounded(h, inst.e_star.u, inst.e_star.v)).kl_min1;
    });
    const auto est = summarize(values);
    return {n, d, 1, sampler.to_string(), trials, est.mean, est.stderr_};
}

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, "loglog_slope needs at least two points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        require(x[i] > 0 && y[i] > 0, "loglog_slope needs positive values");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

// ---- distinguishing theta ----

// Laplacian of the component of `source`, grounded at `ground`.
class GroundedLaplacian {
public:
    GroundedLaplacian(const Graph& g, Vertex source, Vertex ground) : source_(source), ground_(ground) {
        dist_ = bfs_distances(g, source);
        connected_ = dist_[ground] != kUnreachable;
        if (!connected_) return;
        local_.assign(g.n(), -1);
        Eigen::Index k = 0;
        for (Vertex x = 0; x < g.n(); ++x)
            if (dist_[x] != kUnreachable && x != ground) local_[x] = k++;
        Eigen::MatrixXd lg = Eigen::MatrixXd::Zero(k, k);
        for (const auto& e : g.edges()) {
            if (dist_[e.u] == kUnreachable) continue;
            const auto a = local_[e.u], b = local_[e.v];
            if (a >= 0) lg(a, a) += 1.0;
            if (b >= 0) lg(b, b) += 1.0;
            if (a >= 0 && b >= 0) {
                lg(a, b) -= 1.0;
                lg(b, a) -= 1.0;
            }
        }
        llt_.compute(lg);
        if (llt_.info() != Eigen::Success) throw NumericalFailure("grounded Laplacian is not positive definite");
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
        rhs(local_[source]) = 1.0;
        resistance_ = llt_.solve(rhs)(local_[source]);
    }

    bool connected() const noexcept { return connected_; }
    double resistance() const noexcept { return resistance_; }

    // Sum of p over the component of `source`.
    double component_sum(std::span<const double> p) const {
        double total = 0;
        for (std::size_t x = 0; x < p.size(); ++x)
            if (dist_[x] != kUnreachable) total += p[x];
        return total;
    }

    // b^T L^+ p with b = e_source - e_ground, for p summing to zero on the component.
    double potential_difference(std::span<const double> p) const {
        Eigen::VectorXd rhs(llt_.matrixLLT().rows());
        for (std::size_t x = 0; x < p.size(); ++x)
            if (local_.size() > x && local_[x] >= 0) rhs(local_[x]) = p[x];
        return llt_.solve(rhs)(local_[source_]);
    }

private:
    Vertex source_;
    Vertex ground_;
    std::vector<std::uint32_t> dist_;
    std::vector<Eigen::Index> local_;
    bool connected_ = false;
    double resistance_ = 0;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

struct ThetaDecision {
    int theta_hat = 0;
    double llr = 0;     // log p(view | theta=1) - log p(view | theta=0)
    double kl_sum = 0;  // sum over informative rows of the smaller directed KL; +inf if a row is decisive
    bool decisive = false;
};

// Likelihood-ratio test between L(G(S_i)) and L(G(S_i)) + b b^T per row, summed over rows.
// Uses the sampling matrices and projections of the view, G and e*; ties go to theta = 0.
inline ThetaDecision decide_theta(const SketchView& view, const Graph& g, Edge e_star) {
    ThetaDecision out;
    e_star = make_edge(e_star.u, e_star.v);
    if (g.has_edge(e_star)) return out;
    const auto pair = pair_index(e_star, g.n()).value;
    std::optional<SamplingMatrix> cached_sampling;
    std::optional<GroundedLaplacian> solver;
    std::optional<int> forced;
    for (const auto& row : view.rows()) {
        if (!row.sampling.contains(pair)) continue;
        if (!cached_sampling || !(*cached_sampling == row.sampling)) {
            solver.emplace(sampled_subgraph(g, row.sampling), e_star.u, e_star.v);
            cached_sampling = row.sampling;
        }
        if (!solver->connected()) {
            // e* joins two components of G(S_i): theta = 1 iff the component sum is nonzero.
            out.kl_sum = std::numeric_limits<double>::infinity();
            forced = std::abs(solver->component_sum(row.projection)) > 1e-9 ? 1 : 0;
            continue;
        }
        const double r0 = solver->resistance();
        const double y = solver->potential_difference(row.projection);
        out.llr += -0.5 * std::log1p(r0) + 0.5 * y * y / (1.0 + r0);
        out.kl_sum += std::min(0.5 * (r0 - std::log1p(r0)), 0.5 * (std::log1p(r0) - r0 / (1.0 + r0)));
    }
    if (forced) {
        out.decisive = true;
        out.theta_hat = *forced;
    } else {
        out.theta_hat = out.llr > 0 ? 1 : 0;
    }
    return out;
}

struct DistinguishRow {
    Vertex n = 0;
    std::uint32_t d = 0;
    std::size_t s = 0;
    std::size_t trials = 0;
    double success_rate = 0;
    double tvd_lb = 0;          // 2 (rate - 1/2)
    double pinsker_bound = 0;   // mean of min(1, sqrt(KL / 2))
    double pinsker_stderr = 0;
    double rate_stderr = 0;
};

// Trials come in pairs (2k, 2k+1) sharing (G, e*, S_1..S_s) with theta = 0 and 1; the instance stream does not
// depend on s, and row i of every sketch uses the same Gaussian stream label, so curves over s are coupled.
inline DistinguishRow distinguish_theta(Vertex n, std::uint32_t d, std::size_t s, const SamplerSpec& sampler,
                                        std::size_t trials, std::uint64_t seed) {
    require(trials >= 1, "distinguish_theta needs trials >= 1");
    struct Outcome {
        double correct = 0;
        double pinsker = 0;
    };
    const auto outcomes = parallel_map(trials, [&](std::size_t t) {
        const std::size_t k = t / 2;
        const int theta = static_cast<int>(t % 2);
        const auto inst = sample_mu(n, d, derive_seed(seed, std::string_view("distinguish-instance"), k));
        Outcome o;
        if (inst.graph.has_edge(inst.e_star)) {
            o.correct = theta == 0 ? 1.0 : 0.0;
            return o;
        }
        const auto sampling_key = derive_seed(seed, std::string_view("distinguish-sampler"), k);
        std::vector<SamplingMatrix> matrices;
        matrices.reserve(s);
        for (std::size_t i = 0; i < s; ++i) matrices.push_back(sampler.build(n, i, sampling_key));
        const Graph realized = theta == 1 ? inst.graph.with_edge(inst.e_star) : inst.graph;
        const auto sketch =
            sketch_graph(realized, std::move(matrices), derive_seed(seed, std::string_view("distinguish-gaussian"), t));
        const auto decision = decide_theta(sketch.decoder_view(), inst.graph, inst.e_star);
        o.correct = decision.theta_hat == theta ? 1.0 : 0.0;
        o.pinsker = std::min(1.0, std::sqrt(0.5 * decision.kl_sum));
        return o;
    });
    std::vector<double> correct(trials), pinsker(trials);
    for (std::size_t i = 0; i < trials; ++i) {
        correct[i] = outcomes[i].correct;
        pinsker[i] = outcomes[i].pinsker;
    }
    const auto rate = summarize(correct);
    const auto bound = summarize(pinsker);
    DistinguishRow row;
    row.n = n;
    row.d = d;
    row.s = s;
    row.trials = trials;
    row.success_rate = rate.mean;
    row.rate_stderr = rate.stderr_;
    row.tvd_lb = 2.0 * (rate.mean - 0.5);
    row.pinsker_bound = bound.mean;
    row.pinsker_stderr = bound.stderr_;
    return row;
}

// ---- resistance audit ----

struct ResistanceAudit {
    std::uint32_t d = 0;
    double phi = 0;
    std::uint32_t d_min = 0;
    std::uint64_t vol_u1 = 0;
    double bound_term = 0;  // 1/(phi^2 d_min) + d/(phi^2 vol(U_1))
    double max_resistance = 0;
    Edge worst_pair{0, 0};
    std::size_t pairs_tested = 0;
    bool exhaustive = false;
    bool connected = true;
    double fitted_constant = 0;  // max R / bound_term
};

// Max effective resistance over all pairs (max_pairs = 0) or max_pairs random pairs.
inline ResistanceAudit resistance_audit(const Graph& h, const std::vector<std::uint32_t>& layers, std::uint32_t d,
                                        double phi, std::size_t max_pairs, std::uint64_t seed) {
    require(h.n() >= 2, "resistance_audit needs at least 2 vertices");
    require(d >= 1 && phi > 0, "resistance_audit needs d >= 1 and phi > 0");
    const auto sets = layer_sets(layers, d);
    std::vector<Vertex> u1 = sets[0];
    if (d >= 2) u1.insert(u1.end(), sets[1].begin(), sets[1].end());
    ResistanceAudit audit;
    audit.d = d;
    audit.phi = phi;
    audit.d_min = h.min_degree();
    audit.vol_u1 = h.volume(u1);
    audit.bound_term = 1.0 / (phi * phi * audit.d_min) + d / (phi * phi * static_cast<double>(audit.vol_u1));
    audit.connected = component_count(h) == 1;
    if (!audit.connected) {
        audit.max_resistance = std::numeric_limits<double>::infinity();
        audit.fitted_constant = std::numeric_limits<double>::infinity();
        return audit;
    }
    const ResistanceCalculator calc(h);
    auto visit = [&](Vertex u, Vertex v) {
        const double r = calc(u, v);
        ++audit.pairs_tested;
        if (r > audit.max_resistance) {
            audit.max_resistance = r;
            audit.worst_pair = make_edge(u, v);
        }
    };
    if (max_pairs == 0 || max_pairs >= pair_count(h.n())) {
        audit.exhaustive = true;
        for (Vertex u = 0; u < h.n(); ++u)
            for (Vertex v = u + 1; v < h.n(); ++v) visit(u, v);
    } else {
        CounterRng rng(derive_seed(seed, std::string_view("resistance-pairs")));
        for (std::size_t i = 0; i < max_pairs; ++i) {
            const Edge e = pair_unindex(PairIndex{rng.below(pair_count(h.n()))}, h.n());
            visit(e.u, e.v);
        }
    }
    audit.fitted_constant = audit.max_resistance / audit.bound_term;
    return audit;
}

// True when the fitted constant does not grow along a size sweep.
inline bool fitted_non_increasing(const std::vector<ResistanceAudit>& sweep, double slack = 1e-9) {
    for (std::size_t i = 1; i < sweep.size(); ++i)
        if (sweep[i].fitted_constant > sweep[i - 1].fitted_constant + slack) return false;
    return true;
}

// ---- vertex sampling and layered-path experiments ----

struct VertexSampleTrial {
    std::size_t kept = 0;
    ExpanderCertificate certificate;
};

struct VertexSampleSummary {
    double p = 0;
    double floor = 0;
    std::vector<VertexSampleTrial> trials;
    double fraction_certified = 0;  // certificate >= floor
};

inline VertexSampleSummary vertex_sample_experiment(const Graph& h, double p, std::size_t trials, std::uint64_t seed,
                                                    double floor) {
    VertexSampleSummary out;
    out.p = p;
    out.floor = floor;
    out.trials = parallel_map(trials, [&](std::size_t t) {
        const auto sample = vertex_sample(h, p, derive_seed(seed, std::string_view("vertex-sample-trial"), t));
        const auto sub = compact_induced_subgraph(sample.graph, sample.kept);
        VertexSampleTrial trial;
        trial.kept = sample.kept.size();
        trial.certificate = ExpanderCertificate{ExpanderCertificate::Method::exact, 0.0};
        if (sub.graph.n() >= 2 && sub.graph.min_degree() > 0 && component_count(sub.graph) == 1)
            trial.certificate = certify_conductance(sub.graph);
        return trial;
    });
    std::size_t good = 0;
    for (const auto& t : out.trials) good += t.certificate.value >= floor;
    out.fraction_certified = trials == 0 ? 0.0 : static_cast<double>(good) / static_cast<double>(trials);
    return out;
}

struct BalancedPathTrial {
    LayerCounts counts;
    bool counts_in_band = false;
    bool min_degree_ok = false;
    std::optional<BalancedPathReport> path;
};

struct BalancedPathSummary {
    std::uint32_t d = 0;
    double phi = 0;
    double min_degree_floor = 0;  // (7/8) d_min / d
    std::vector<BalancedPathTrial> trials;
    double fraction_counts = 0;
    double fraction_min_degree = 0;
    double fraction_path = 0;  // all three path conditions (when checked)
};

// Uniform layers on H, then H' = partition_intersect(H, layers).
inline BalancedPathSummary balanced_path_experiment(const Graph& h, std::uint32_t d, double phi, std::size_t trials,
                                                    std::uint64_t seed, bool check_path) {
    require(d >= 2, "balanced_path_experiment needs d >= 2");
    BalancedPathSummary out;
    out.d = d;
    out.phi = phi;
    out.min_degree_floor = 7.0 / 8.0 * h.min_degree() / d;
    out.trials = parallel_map(trials, [&](std::size_t t) {
        CounterRng rng(derive_seed(seed, std::string_view("balanced-path-layers"), t));
        std::vector<std::uint32_t> layers(h.n());
        for (auto& l : layers) l = static_cast<std::uint32_t>(rng.below(d));
        const Graph hp = partition_intersect(h, layers);
        BalancedPathTrial trial;
        trial.counts = layer_counts(hp, layers, d);
        trial.counts_in_band = trial.counts.in_band(h.m(), d);
        trial.min_degree_ok = trial.counts.min_degree >= out.min_degree_floor;
        if (check_path) trial.path = check_balanced_path(hp, layers, d, phi);
        return trial;
    });
    std::size_t counts = 0, degrees = 0, paths = 0;
    for (const auto& t : out.trials) {
        counts += t.counts_in_band;
        degrees += t.min_degree_ok;
        paths += t.path && t.path->all_ok();
    }
    const double total = std::max<double>(1.0, static_cast<double>(trials));
    out.fraction_counts = counts / total;
    out.fraction_min_degree = degrees / total;
    out.fraction_path = paths / total;
    return out;
}

// ---- CSV ----

inline std::string format_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

// Each echo line is written as "# <line>" before the header.
inline std::string scaling_csv(const std::vector<ScalingRow>& rows, const std::vector<std::string>& echo = {}) {
    std::string out;
    for (const auto& line : echo) out += "# " + line + "\n";
    out += "n,d,s,sampler,trials,mean_min1_kl,stderr\n";
    for (const auto& r : rows)
        out += std::to_string(r.n) + "," + std::to_string(r.d) + "," + std::to_string(r.s) + "," + r.sampler + "," +
               std::to_string(r.trials) + "," + format_real(r.mean_min1_kl) + "," + format_real(r.stderr_) + "\n";
    return out;
}

inline std::string distinguish_csv(const std::vector<DistinguishRow>& rows, const std::vector<std::string>& echo = {}) {
    std::string out;
    for (const auto& line : echo) out += "# " + line + "\n";
    out += "n,d,s,trials,success_rate,tvd_lb\n";
    for (const auto& r : rows)
        out += std::to_string(r.n) + "," + std::to_string(r.d) + "," + std::to_string(r.s) + "," +
               std::to_string(r.trials) + "," + format_real(r.success_rate) + "," + format_real(r.tvd_lb) + "\n";
    return out;
}

}  // namespace sketchlab
