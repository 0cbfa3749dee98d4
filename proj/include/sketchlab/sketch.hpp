#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sketchlab/errors.hpp"
#include "sketchlab/graph.hpp"
#include "sketchlab/random.hpp"

namespace sketchlab {

// Hash word used by implicit sampling rules; `key` is public sampling randomness.
inline std::uint64_t sampling_hash(std::uint64_t key, std::uint64_t stream_label, std::uint64_t element) {
    return keyed_u64(derive_seed(key, stream_label), element);
}

inline int hash_level(std::uint64_t word) { return std::countl_zero(word); }

// Diagonal 0/1 selector over pair indices.
class SamplingMatrix {
public:
    enum class Kind { explicit_set, all, bernoulli, level };

    struct Plane {
        int bit = 0;
        int value = 0;
        friend bool operator==(const Plane&, const Plane&) = default;
    };

    static SamplingMatrix all(Vertex n) {
        SamplingMatrix s(n, Kind::all);
        return s;
    }

    static SamplingMatrix explicit_set(Vertex n, std::vector<std::uint64_t> pairs) {
        SamplingMatrix s(n, Kind::explicit_set);
        std::sort(pairs.begin(), pairs.end());
        pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
        for (auto p : pairs) require(p < pair_count(n), "explicit sampling set holds invalid pair " + std::to_string(p));
        s.pairs_ = std::move(pairs);
        return s;
    }

    static SamplingMatrix none(Vertex n) { return explicit_set(n, {}); }

    // Keeps each pair independently with probability p.
    static SamplingMatrix bernoulli(Vertex n, double p, std::uint64_t stream_label, std::uint64_t key) {
        require(p >= 0.0 && p <= 1.0, "bernoulli sampling needs p in [0,1]");
        SamplingMatrix s(n, Kind::bernoulli);
        s.p_ = p;
        s.stream_label_ = stream_label;
        s.key_ = key;
        return s;
    }

    // Keeps each pair with probability 2^-j; level j+1 is a subset of level j.
    static SamplingMatrix level(Vertex n, int j, std::uint64_t stream_label, std::uint64_t key) {
        require(j >= 0 && j <= 64, "sampling level must lie in [0, 64]");
        SamplingMatrix s(n, Kind::level);
        s.level_ = j;
        s.stream_label_ = stream_label;
        s.key_ = key;
        return s;
    }

    // Further restricts to pairs whose index has bit `bit` equal to `value`.
    SamplingMatrix restricted_to_plane(int bit, int value) const {
        require(bit >= 0 && bit < 64 && (value == 0 || value == 1), "bit plane needs bit in [0,64) and value 0/1");
        SamplingMatrix s = *this;
        s.plane_ = Plane{bit, value};
        return s;
    }

    bool contains(std::uint64_t pair) const {
        if (pair >= pair_count(n_)) return false;
        if (plane_ && static_cast<int>((pair >> plane_->bit) & 1u) != plane_->value) return false;
        switch (kind_) {
            case Kind::all:
                return true;
            case Kind::explicit_set:
                return std::binary_search(pairs_.begin(), pairs_.end(), pair);
            case Kind::bernoulli:
                return unit_closed_open(sampling_hash(key_, stream_label_, pair)) < p_;
            case Kind::level:
                return hash_level(sampling_hash(key_, stream_label_, pair)) >= level_;
        }
        return false;
    }
    bool contains(PairIndex p) const { return contains(p.value); }

    Vertex n() const noexcept { return n_; }
    Kind kind() const noexcept { return kind_; }
    const std::optional<Plane>& plane() const noexcept { return plane_; }

    nlohmann::json descriptor() const {
        nlohmann::json d;
        switch (kind_) {
            case Kind::all:
                d["kind"] = "all";
                break;
            case Kind::explicit_set:
                d["kind"] = "explicit";
                d["pairs"] = pairs_;
                break;
            case Kind::bernoulli:
                d["kind"] = "bernoulli";
                d["p"] = p_;
                d["stream_label"] = stream_label_;
                d["sampling_key"] = key_;
                break;
            case Kind::level:
                d["kind"] = "level";
                d["level"] = level_;
                d["stream_label"] = stream_label_;
                d["sampling_key"] = key_;
                break;
        }
        if (plane_) d["plane"] = {{"bit", plane_->bit}, {"value", plane_->value}};
        return d;
    }

    static SamplingMatrix from_descriptor(Vertex n, const nlohmann::json& d) {
        const auto kind = d.at("kind").get<std::string>();
        SamplingMatrix s(n, Kind::all);
        if (kind == "all") {
            s = all(n);
        } else if (kind == "explicit") {
            s = explicit_set(n, d.at("pairs").get<std::vector<std::uint64_t>>());
        } else if (kind == "bernoulli") {
            s = bernoulli(n, d.at("p").get<double>(), d.at("stream_label").get<std::uint64_t>(),
                          d.at("sampling_key").get<std::uint64_t>());
        } else if (kind == "level") {
            s = level(n, d.at("level").get<int>(), d.at("stream_label").get<std::uint64_t>(),
                      d.at("sampling_key").get<std::uint64_t>());
        } else {
            throw ContractViolation("unknown sampling kind '" + kind + "'");
        }
        if (d.contains("plane")) s = s.restricted_to_plane(d["plane"].at("bit").get<int>(), d["plane"].at("value").get<int>());
        return s;
    }

    friend bool operator==(const SamplingMatrix& a, const SamplingMatrix& b) {
        return a.descriptor() == b.descriptor() && a.n_ == b.n_;
    }

private:
    SamplingMatrix(Vertex n, Kind kind) : n_(n), kind_(kind) {}

    Vertex n_ = 0;
    Kind kind_ = Kind::all;
    std::vector<std::uint64_t> pairs_;
    double p_ = 1.0;
    int level_ = 0;
    std::uint64_t stream_label_ = 0;
    std::uint64_t key_ = 0;
    std::optional<Plane> plane_;
};

// Edges of G kept by S.
inline Graph sampled_subgraph(const Graph& g, const SamplingMatrix& s) {
    std::vector<Edge> kept;
    for (const auto& e : g.edges())
        if (s.contains(pair_index(e, g.n()))) kept.push_back(e);
    return Graph(g.n(), std::move(kept));
}

// Standard normals indexed by pair index, keyed by (master_seed, row_label).
class GaussianStream {
public:
    GaussianStream(std::uint64_t master_seed, std::uint64_t row_label)
        : key_(derive_seed(master_seed, row_label)) {}

    double operator()(std::uint64_t pair) const { return gaussian_at(key_, pair); }
    double operator()(PairIndex p) const { return gaussian_at(key_, p.value); }

private:
    std::uint64_t key_;
};

// p = g S B(G): +g_e at the smaller endpoint of each sampled edge, -g_e at the larger.
inline std::vector<double> project(const Graph& g, const SamplingMatrix& s, const GaussianStream& gauss) {
    require(g.n() == s.n(), "project: sampling matrix and graph disagree on n");
    std::vector<double> p(g.n(), 0.0);
    for (const auto& e : g.edges()) {
        const auto pair = pair_index(e, g.n()).value;
        if (!s.contains(pair)) continue;
        const double value = gauss(pair);
        p[e.u] += value;
        p[e.v] -= value;
    }
    return p;
}

struct SketchRow {
    SamplingMatrix sampling;
    std::vector<double> projection;
};

// What a decoder may see: sampling matrices and projections, never the Gaussian seed.
class SketchView {
public:
    SketchView() = default;
    SketchView(Vertex n, std::vector<SketchRow> rows) : n_(n), rows_(std::move(rows)) {}

    Vertex n() const noexcept { return n_; }
    std::size_t s() const noexcept { return rows_.size(); }
    const std::vector<SketchRow>& rows() const noexcept { return rows_; }

    // Row i: sum over the set of p_i[v]. Edges inside the set cancel.
    std::vector<double> column_combine(std::span<const Vertex> vertices) const {
        std::vector<double> out(rows_.size(), 0.0);
        for (Vertex v : vertices) require(v < n_, "column_combine vertex out of range");
        for (std::size_t i = 0; i < rows_.size(); ++i)
            for (Vertex v : vertices) out[i] += rows_[i].projection[v];
        return out;
    }

    nlohmann::json to_json() const {
        auto rows = nlohmann::json::array();
        for (const auto& r : rows_) rows.push_back({{"sampling", r.sampling.descriptor()}, {"projection", r.projection}});
        return {{"n", n_}, {"s", rows_.size()}, {"rows", rows}};
    }

    static SketchView from_json(const nlohmann::json& doc) {
        const auto n = doc.at("n").get<Vertex>();
        std::vector<SketchRow> rows;
        for (const auto& r : doc.at("rows")) {
            auto projection = r.at("projection").get<std::vector<double>>();
            require(projection.size() == n, "sketch row projection has wrong length");
            rows.push_back({SamplingMatrix::from_descriptor(n, r.at("sampling")), std::move(projection)});
        }
        require(rows.size() == doc.at("s").get<std::size_t>(), "sketch row count disagrees with s");
        return SketchView(n, std::move(rows));
    }

    friend bool operator==(const SketchView& a, const SketchView& b) {
        if (a.n_ != b.n_ || a.rows_.size() != b.rows_.size()) return false;
        for (std::size_t i = 0; i < a.rows_.size(); ++i)
            if (!(a.rows_[i].sampling == b.rows_[i].sampling) || a.rows_[i].projection != b.rows_[i].projection)
                return false;
        return true;
    }

private:
    friend class Sketch;

    Vertex n_ = 0;
    std::vector<SketchRow> rows_;
};

// Row-wise sum of two views over identical sampling matrices.
inline SketchView add_views(const SketchView& a, const SketchView& b) {
    require(a.n() == b.n() && a.s() == b.s(), "add_views: shapes differ");
    std::vector<SketchRow> rows;
    for (std::size_t i = 0; i < a.s(); ++i) {
        require(a.rows()[i].sampling == b.rows()[i].sampling, "add_views: sampling matrices differ");
        auto p = a.rows()[i].projection;
        for (std::size_t v = 0; v < p.size(); ++v) p[v] += b.rows()[i].projection[v];
        rows.push_back({a.rows()[i].sampling, std::move(p)});
    }
    return SketchView(a.n(), std::move(rows));
}

// Sketcher side: owns the master seed and the current edge set; row i uses GaussianStream(seed, i).
class Sketch {
public:
    Sketch(Vertex n, std::vector<SamplingMatrix> matrices, std::uint64_t master_seed) : master_seed_(master_seed) {
        std::vector<SketchRow> rows;
        for (auto& s : matrices) {
            require(s.n() == n, "sketch: all sampling matrices must share n");
            rows.push_back({std::move(s), std::vector<double>(n, 0.0)});
        }
        view_ = SketchView(n, std::move(rows));
    }

    // sign = +1 inserts, -1 deletes.
    void update(Edge e, int sign) {
        require(sign == 1 || sign == -1, "update sign must be +1 or -1");
        e = make_edge(e.u, e.v);
        require(e.v < view_.n(), "update edge out of range");
        if (sign > 0)
            require(edges_.insert(e).second, "inserting an edge already present");
        else
            require(edges_.erase(e) == 1, "deleting an edge that was never inserted");
        const auto pair = pair_index(e, view_.n()).value;
        auto& rows = view_.rows_;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!rows[i].sampling.contains(pair)) continue;
            const double value = sign * GaussianStream(master_seed_, i)(pair);
            rows[i].projection[e.u] += value;
            rows[i].projection[e.v] -= value;
        }
    }

    const SketchView& decoder_view() const noexcept { return view_; }
    std::size_t s() const noexcept { return view_.s(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }

private:
    friend Sketch sketch_graph(const Graph&, std::vector<SamplingMatrix>, std::uint64_t);

    std::uint64_t master_seed_;
    SketchView view_;
    std::set<Edge> edges_;
};

inline Sketch sketch_graph(const Graph& g, std::vector<SamplingMatrix> matrices, std::uint64_t master_seed) {
    Sketch sk(g.n(), matrices, master_seed);
    std::vector<SketchRow> rows;
    for (std::size_t i = 0; i < matrices.size(); ++i)
        rows.push_back({matrices[i], project(g, matrices[i], GaussianStream(master_seed, i))});
    sk.view_ = SketchView(g.n(), std::move(rows));
    sk.edges_ = std::set<Edge>(g.edges().begin(), g.edges().end());
    return sk;
}

// Zero-mean sample covariance E[p p^T] of project(G, S, .) over fresh streams.
inline Eigen::MatrixXd empirical_covariance(const Graph& g, const SamplingMatrix& s, std::size_t trials,
                                            std::uint64_t seed) {
    require(trials >= 1, "empirical_covariance needs trials >= 1");
    const Graph kept = sampled_subgraph(g, s);
    const std::uint64_t master = derive_seed(seed, std::string_view("covariance"));
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(g.n(), g.n());
    Eigen::VectorXd p(g.n());
    const SamplingMatrix everything = SamplingMatrix::all(g.n());
    for (std::size_t t = 0; t < trials; ++t) {
        auto proj = project(kept, everything, GaussianStream(master, t));
        for (Vertex v = 0; v < g.n(); ++v) p(v) = proj[v];
        acc.selfadjointView<Eigen::Lower>().rankUpdate(p);
    }
    acc = acc.selfadjointView<Eigen::Lower>();
    return acc / static_cast<double>(trials);
}

}  // namespace sketchlab
