#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sketchlab/errors.hpp"
#include "sketchlab/graph.hpp"
#include "sketchlab/random.hpp"
#include "sketchlab/sketch.hpp"

namespace sketchlab {

inline int ceil_log2(std::uint64_t x) {
    return x <= 1 ? 0 : 64 - std::countl_zero(x - 1);
}

inline constexpr double kNearZero = 0.1;
inline constexpr double kSingletonLow = 2.0 / 3.0;
inline constexpr double kSingletonHigh = 4.0 / 3.0;

// Sparse vector entry (index, value).
using SparseEntry = std::pair<std::uint64_t, double>;

// Mean of r squared Gaussian dot products with x.
inline double l2_estimate(std::span<const SparseEntry> x, std::size_t r, std::uint64_t seed) {
    require(r >= 1, "l2_estimate needs r >= 1");
    double total = 0;
    for (std::size_t row = 0; row < r; ++row) {
        const auto key = derive_seed(seed, row);
        double dot = 0;
        for (const auto& [i, value] : x) dot += gaussian_at(key, i) * value;
        total += dot * dot;
    }
    return total / static_cast<double>(r);
}

// ---- l0 sampler ----

// Public shape of an l0 sketch. Row (copy, level, bit, plane, rep) holds a Gaussian dot product with x
// restricted to elements at hash level >= `level` whose index has bit `bit` equal to `plane`.
struct L0Layout {
    std::uint64_t universe = 0;
    int levels = 1;  // 0..levels-1
    int bits = 1;
    std::uint32_t reps = 24;
    std::uint32_t copies = 1;
    std::uint64_t sampling_key = 0;
    double delta = 0.1;

    std::size_t rows_per_copy() const { return static_cast<std::size_t>(levels) * bits * 2 * reps; }
    std::size_t rows() const { return rows_per_copy() * copies; }

    std::size_t row_index(std::uint32_t copy, int level, int bit, int plane, std::uint32_t rep) const {
        return (((static_cast<std::size_t>(copy) * levels + level) * bits + bit) * 2 + plane) * reps + rep;
    }

    std::uint64_t copy_key(std::uint32_t copy) const { return derive_seed(sampling_key, copy); }

    // Highest level holding `element` in this copy.
    int element_level(std::uint32_t copy, std::uint64_t element) const {
        return std::min(hash_level(keyed_u64(copy_key(copy), element)), levels - 1);
    }

    // The row as a sampling rule over pair indices (graph sketches only).
    SamplingMatrix row_sampling(Vertex n, std::uint32_t copy, int level, int bit, int plane) const {
        return SamplingMatrix::level(n, level, copy, sampling_key).restricted_to_plane(bit, plane);
    }
};

// `size_param` sets the repetitions r = 24 ceil(log2 size_param); copies = ceil(ln(1/delta) / ln 3).
inline L0Layout make_l0_layout(std::uint64_t universe, std::uint64_t size_param, double delta,
                               std::uint64_t sampling_key) {
    require(universe >= 1, "l0 universe must be non-empty");
    require(delta > 0 && delta < 1, "l0 delta must lie in (0,1)");
    L0Layout layout;
    layout.universe = universe;
    layout.bits = std::max(1, ceil_log2(universe));
    layout.levels = ceil_log2(universe) + 1;
    layout.reps = 24u * static_cast<std::uint32_t>(std::max(1, ceil_log2(size_param)));
    layout.copies = static_cast<std::uint32_t>(std::max(1.0, std::ceil(std::log(1.0 / delta) / std::log(3.0))));
    layout.sampling_key = sampling_key;
    layout.delta = delta;
    return layout;
}

struct L0Result {
    std::optional<std::uint64_t> index;  // nullopt means FAIL
    bool zero_vector = false;
    std::uint32_t copy = 0;
    int level = 0;

    bool failed() const { return !index.has_value(); }
};

namespace detail {

enum class CopyOutcome { zero, found, none };

struct CopyDecode {
    CopyOutcome outcome = CopyOutcome::none;
    std::uint64_t index = 0;
    int level = 0;
};

// One copy's rows; levels at or above `stored_levels` are all zero and may be omitted from `block`.
inline CopyDecode l0_decode_copy(const L0Layout& layout, std::uint32_t copy, std::span<const double> block,
                                 int stored_levels) {
    const std::size_t per_level = static_cast<std::size_t>(layout.bits) * 2 * layout.reps;
    auto estimate = [&](int level, int bit, int plane) {
        const std::size_t first = (static_cast<std::size_t>(level) * layout.bits + bit) * 2 * layout.reps +
                                  static_cast<std::size_t>(plane) * layout.reps;
        double total = 0;
        for (std::uint32_t r = 0; r < layout.reps; ++r) total += block[first + r] * block[first + r];
        return total / layout.reps;
    };
    require(block.size() >= per_level * static_cast<std::size_t>(stored_levels), "l0 copy block too short");
    std::vector<double> ones(static_cast<std::size_t>(layout.bits)), zeros(static_cast<std::size_t>(layout.bits));
    for (int level = 0; level < layout.levels; ++level) {
        double level_est = 0;
        if (level < stored_levels) {
            for (int b = 0; b < layout.bits; ++b) {
                zeros[b] = estimate(level, b, 0);
                ones[b] = estimate(level, b, 1);
                level_est += zeros[b] + ones[b];
            }
            level_est /= layout.bits;
        }
        if (copy == 0 && level == 0 && level_est < kNearZero) return {CopyOutcome::zero, 0, 0};
        if (level_est < kSingletonLow || level_est > kSingletonHigh) continue;
        std::uint64_t index = 0;
        bool consistent = true;
        for (int b = 0; b < layout.bits && consistent; ++b) {
            const bool set = ones[b] > level_est / 2;
            if (set) index |= std::uint64_t{1} << b;
            // The plane that disagrees with the claimed bit must be empty.
            consistent = (set ? zeros[b] : ones[b]) < kNearZero;
        }
        if (consistent && index < layout.universe) return {CopyOutcome::found, index, level};
    }
    return {};
}

}  // namespace detail

// Decoder: needs only the layout and the row values.
inline L0Result l0_decode(const L0Layout& layout, std::span<const double> values) {
    require(values.size() == layout.rows(), "l0_decode: wrong number of row values");
    for (std::uint32_t copy = 0; copy < layout.copies; ++copy) {
        const auto r = detail::l0_decode_copy(layout, copy, values.subspan(copy * layout.rows_per_copy(), layout.rows_per_copy()),
                                              layout.levels);
        if (r.outcome == detail::CopyOutcome::zero) return L0Result{std::nullopt, true, 0, 0};
        if (r.outcome == detail::CopyOutcome::found) return L0Result{r.index, false, copy, r.level};
    }
    return L0Result{std::nullopt, false, 0, 0};
}

// Sketcher for vectors in {-1,0,1}^N; holds the Gaussian seed.
class L0Sketcher {
public:
    L0Sketcher(L0Layout layout, std::uint64_t master_seed) : layout_(layout), row_keys_(layout.rows()) {
        for (std::size_t i = 0; i < row_keys_.size(); ++i) row_keys_[i] = derive_seed(master_seed, i);
    }

    const L0Layout& layout() const noexcept { return layout_; }

    std::vector<double> measure(std::span<const SparseEntry> x) const {
        std::vector<double> values(layout_.rows(), 0.0);
        for (const auto& [element, value] : x) {
            require(element < layout_.universe, "l0 element outside the universe");
            if (value == 0) continue;
            for (std::uint32_t c = 0; c < layout_.copies; ++c) {
                const int top = layout_.element_level(c, element);
                for (int j = 0; j <= top; ++j)
                    for (int b = 0; b < layout_.bits; ++b) {
                        const int plane = static_cast<int>((element >> b) & 1u);
                        const std::size_t first = layout_.row_index(c, j, b, plane, 0);
                        for (std::uint32_t r = 0; r < layout_.reps; ++r)
                            values[first + r] += gaussian_at(row_keys_[first + r], element) * value;
                    }
            }
        }
        return values;
    }

private:
    L0Layout layout_;
    std::vector<std::uint64_t> row_keys_;
};

// ---- graph l0 sketches ----

// Decoder-facing l0 batch over a graph: per-vertex row values, no seed.
// Copies are read on first use; each vertex's block is cut after its last nonzero level.
class GraphL0Batch {
public:
    // per_vertex[v] holds copy rows of v from level 0 up to some level; later rows are zero.
    using CopyBlock = std::vector<std::vector<double>>;
    using CopySource = std::function<CopyBlock(std::uint32_t copy)>;

    GraphL0Batch(Vertex n, L0Layout layout, CopySource source)
        : n_(n), layout_(layout), source_(std::move(source)), cache_(layout.copies) {}

    Vertex n() const noexcept { return n_; }
    const L0Layout& layout() const noexcept { return layout_; }
    std::size_t copies_read() const {
        return static_cast<std::size_t>(std::count_if(cache_.begin(), cache_.end(), [](const auto& c) { return c.has_value(); }));
    }

    // Copy rows of the signed cut vector of `vertices`, truncated after the last nonzero level.
    std::vector<double> combine_copy(std::span<const Vertex> vertices, std::uint32_t copy) const {
        const CopyBlock& block = load(copy);
        std::size_t len = 0;
        for (Vertex v : vertices) {
            require(v < n_, "combine vertex out of range");
            len = std::max(len, block[v].size());
        }
        std::vector<double> out(len, 0.0);
        for (Vertex v : vertices)
            for (std::size_t i = 0; i < block[v].size(); ++i) out[i] += block[v][i];
        return out;
    }

    // All rows of the signed cut vector of `vertices`.
    std::vector<double> combine(std::span<const Vertex> vertices) const {
        std::vector<double> out(layout_.rows(), 0.0);
        for (std::uint32_t c = 0; c < layout_.copies; ++c) {
            const auto part = combine_copy(vertices, c);
            std::copy(part.begin(), part.end(), out.begin() + static_cast<std::ptrdiff_t>(c * layout_.rows_per_copy()));
        }
        return out;
    }

    // Same answer as l0_decode(layout(), combine(vertices)), reading copies only as needed.
    L0Result decode(std::span<const Vertex> vertices) const {
        const std::size_t per_level = static_cast<std::size_t>(layout_.bits) * 2 * layout_.reps;
        for (std::uint32_t copy = 0; copy < layout_.copies; ++copy) {
            const auto values = combine_copy(vertices, copy);
            const auto r = detail::l0_decode_copy(layout_, copy, values, static_cast<int>(values.size() / per_level));
            if (r.outcome == detail::CopyOutcome::zero) return L0Result{std::nullopt, true, 0, 0};
            if (r.outcome == detail::CopyOutcome::found) return L0Result{r.index, false, copy, r.level};
        }
        return L0Result{std::nullopt, false, 0, 0};
    }

private:
    const CopyBlock& load(std::uint32_t copy) const {
        require(copy < layout_.copies, "l0 copy out of range");
        if (!cache_[copy]) {
            cache_[copy] = source_(copy);
            require(cache_[copy]->size() == n_, "l0 copy block has wrong vertex count");
        }
        return *cache_[copy];
    }

    Vertex n_;
    L0Layout layout_;
    CopySource source_;
    mutable std::vector<std::optional<CopyBlock>> cache_;
};

// Forest queries run at delta / (2n) each: at most 2n queries, so the forest fails with probability <= delta.
inline double forest_query_delta(Vertex n, double delta) { return delta / (2.0 * std::max<Vertex>(n, 1)); }

inline L0Layout graph_l0_layout(Vertex n, double delta, std::uint64_t sampling_key) {
    return make_l0_layout(std::max<std::uint64_t>(1, pair_count(n)), std::max<Vertex>(n, 2), delta, sampling_key);
}

// Sketcher side of one batch. Every row equals project(G, row_sampling, GaussianStream(master_seed, row)).
inline GraphL0Batch sketch_graph_l0(const Graph& g, const L0Layout& layout, std::uint64_t master_seed) {
    auto graph = std::make_shared<const Graph>(g);
    auto source = [graph, layout, master_seed](std::uint32_t copy) {
        const std::size_t per_level = static_cast<std::size_t>(layout.bits) * 2 * layout.reps;
        const std::size_t base = copy * layout.rows_per_copy();
        std::vector<int> top(graph->n(), -1);
        std::vector<int> edge_top(graph->m());
        for (std::size_t i = 0; i < graph->m(); ++i) {
            const auto& e = graph->edges()[i];
            edge_top[i] = layout.element_level(copy, pair_index(e, graph->n()).value);
            top[e.u] = std::max(top[e.u], edge_top[i]);
            top[e.v] = std::max(top[e.v], edge_top[i]);
        }
        GraphL0Batch::CopyBlock block(graph->n());
        for (Vertex v = 0; v < graph->n(); ++v) block[v].assign(static_cast<std::size_t>(top[v] + 1) * per_level, 0.0);
        for (std::size_t i = 0; i < graph->m(); ++i) {
            const auto& e = graph->edges()[i];
            const std::uint64_t pair = pair_index(e, graph->n()).value;
            double* pu = block[e.u].data();
            double* pv = block[e.v].data();
            for (int j = 0; j <= edge_top[i]; ++j)
                for (int b = 0; b < layout.bits; ++b) {
                    const int plane = static_cast<int>((pair >> b) & 1u);
                    const std::size_t first = layout.row_index(copy, j, b, plane, 0);
                    for (std::uint32_t r = 0; r < layout.reps; ++r) {
                        const double value = gaussian_at(derive_seed(master_seed, first + r), pair);
                        pu[first - base + r] += value;
                        pv[first - base + r] -= value;
                    }
                }
        }
        return block;
    };
    return GraphL0Batch(g.n(), layout, std::move(source));
}

struct ForestResult {
    std::vector<Edge> edges;
    bool success = true;        // no l0 query failed, so the forest spans every component
    bool verified = false;      // a later round confirmed every component has an empty cut
    std::size_t rounds_used = 0;
    std::size_t failed_queries = 0;
    std::size_t rows_per_batch = 0;
};

inline std::size_t forest_rounds(Vertex n) { return static_cast<std::size_t>(ceil_log2(n)); }

// Boruvka on sketches: round r asks batch r for one outgoing edge per component.
// `batch_for_round(r)` must return a GraphL0Batch; batches are requested lazily.
template <class BatchSource>
ForestResult recover_spanning_forest(Vertex n, std::size_t rounds, BatchSource&& batch_for_round) {
    ForestResult result;
    DisjointSets forest(n);
    for (std::size_t round = 0; round < rounds; ++round) {
        const GraphL0Batch batch = batch_for_round(round);
        result.rows_per_batch = batch.layout().rows();
        result.rounds_used = round + 1;
        std::map<std::size_t, std::vector<Vertex>> components;
        for (Vertex v = 0; v < n; ++v) components[forest.find(v)].push_back(v);
        std::vector<Edge> picks;
        bool active = false;
        for (const auto& [root, members] : components) {
            const auto decoded = batch.decode(members);
            if (decoded.zero_vector) continue;
            active = true;
            if (decoded.failed()) {
                ++result.failed_queries;
                continue;
            }
            picks.push_back(pair_unindex(PairIndex{*decoded.index}, n));
        }
        if (!active) {
            result.verified = true;
            break;
        }
        for (const auto& e : picks)
            if (forest.unite(e.u, e.v)) result.edges.push_back(e);
    }
    std::sort(result.edges.begin(), result.edges.end());
    result.success = result.failed_queries == 0;
    return result;
}

// Holds the secret seed; hands out one independent batch per round.
class ForestSketcher {
public:
    ForestSketcher(const Graph& g, double delta, std::uint64_t seed) : graph_(g), delta_(delta), seed_(seed) {}

    std::size_t rounds() const { return forest_rounds(graph_.n()); }

    L0Layout layout(std::size_t round) const {
        return graph_l0_layout(graph_.n(), forest_query_delta(graph_.n(), delta_),
                               derive_seed(seed_, std::string_view("forest-sampling"), round));
    }

    GraphL0Batch batch(std::size_t round) const {
        return sketch_graph_l0(graph_, layout(round), derive_seed(seed_, std::string_view("forest-gaussian"), round));
    }

private:
    const Graph& graph_;
    double delta_;
    std::uint64_t seed_;
};

inline ForestResult spanning_forest(const Graph& g, double delta, std::uint64_t seed) {
    require(delta > 0 && delta < 1, "spanning_forest needs delta in (0,1)");
    ForestSketcher sketcher(g, delta, seed);
    return recover_spanning_forest(g.n(), sketcher.rounds(), [&](std::size_t r) { return sketcher.batch(r); });
}

// ---- l2 heavy hitters ----

// Median of a chi-square variable with one degree of freedom.
inline constexpr double kChiSquare1Median = 0.45493642311957283;
inline constexpr double kHeavyAccept = 0.25;

struct HHLayout {
    std::uint64_t universe = 0;
    double phi = 0.5;
    std::uint32_t buckets = 8;
    std::uint32_t reps = 1;
    std::uint64_t bucket_key = 0;

    std::uint32_t bucket(std::uint32_t rep, std::uint64_t element) const {
        return static_cast<std::uint32_t>(scale_below(keyed_u64(derive_seed(bucket_key, rep), element), buckets));
    }
    std::size_t rows() const { return static_cast<std::size_t>(buckets) * reps; }
};

inline HHLayout make_hh_layout(std::uint64_t universe, double phi, std::uint64_t bucket_key) {
    require(universe >= 1, "heavy-hitter universe must be non-empty");
    require(phi > 0 && phi < 1, "heavy-hitter phi must lie in (0,1)");
    HHLayout layout;
    layout.universe = universe;
    layout.phi = phi;
    layout.buckets = static_cast<std::uint32_t>(std::ceil(4.0 / phi));
    layout.reps = 64u * static_cast<std::uint32_t>(std::max(1, ceil_log2(universe))) + 1u;
    layout.bucket_key = bucket_key;
    return layout;
}

class HHSketcher {
public:
    HHSketcher(HHLayout layout, std::uint64_t master_seed) : layout_(layout), master_seed_(master_seed) {}

    const HHLayout& layout() const noexcept { return layout_; }

    std::vector<double> measure(std::span<const SparseEntry> x) const {
        std::vector<double> values(layout_.rows(), 0.0);
        for (std::uint32_t t = 0; t < layout_.reps; ++t) {
            const auto key = derive_seed(master_seed_, t);
            for (const auto& [element, value] : x) {
                require(element < layout_.universe, "heavy-hitter element outside the universe");
                values[static_cast<std::size_t>(t) * layout_.buckets + layout_.bucket(t, element)] +=
                    gaussian_at(key, element) * value;
            }
        }
        return values;
    }

private:
    HHLayout layout_;
    std::uint64_t master_seed_;
};

struct HHResult {
    std::vector<std::uint64_t> heavy;
    double norm_estimate = 0;
};

// Element estimate: median over reps of its bucket's squared value, rescaled, minus the expected collision mass.
inline HHResult hh_decode(const HHLayout& layout, std::span<const double> values) {
    require(values.size() == layout.rows(), "hh_decode: wrong number of row values");
    HHResult out;
    double total = 0;
    for (double v : values) total += v * v;
    out.norm_estimate = total / layout.reps;
    const double collision = out.norm_estimate / layout.buckets;
    const double threshold = kHeavyAccept * layout.phi * out.norm_estimate;
    if (out.norm_estimate <= 0) return out;
    std::vector<double> squares(layout.reps);
    for (std::uint64_t i = 0; i < layout.universe; ++i) {
        for (std::uint32_t t = 0; t < layout.reps; ++t) {
            const double v = values[static_cast<std::size_t>(t) * layout.buckets + layout.bucket(t, i)];
            squares[t] = v * v;
        }
        auto mid = squares.begin() + static_cast<std::ptrdiff_t>(squares.size() / 2);
        std::nth_element(squares.begin(), mid, squares.end());
        const double estimate = *mid / kChiSquare1Median - collision;
        if (estimate >= threshold) out.heavy.push_back(i);
    }
    return out;
}

}  // namespace sketchlab
