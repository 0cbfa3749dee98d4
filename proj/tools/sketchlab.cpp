// sketchlab command-line driver.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sketchlab/sketchlab.hpp"

using namespace sketchlab;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void usage_check(bool ok, const std::string& message) {
    if (!ok) throw UsageError(message);
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ParseError(out_path, "cannot open file for writing");
    out << text;
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

std::vector<std::string> echo_lines(const json& config) { return {"config " + config.dump()}; }

Edge parse_pair(const std::string& text) {
    const auto comma = text.find(',');
    usage_check(comma != std::string::npos, "expected u,v but got '" + text + "'");
    std::uint64_t u = 0, v = 0;
    usage_check(detail::parse_uint(text.substr(0, comma), u) && detail::parse_uint(text.substr(comma + 1), v) &&
                    u <= UINT32_MAX && v <= UINT32_MAX,
                "expected u,v but got '" + text + "'");
    return Edge{static_cast<Vertex>(u), static_cast<Vertex>(v)};
}

json load_json_file(const std::string& path) {
    const auto text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& err) {
        throw ParseError("byte " + std::to_string(err.byte), "invalid JSON");
    }
}

std::vector<std::uint32_t> layers_from(const json& doc, Vertex n) {
    if (!doc.contains("layers")) throw ParseError("$.layers", "missing field");
    auto layers = doc["layers"].get<std::vector<std::uint32_t>>();
    if (layers.size() != n) throw ParseError("$.layers", "expected one layer per vertex");
    return layers;
}

json cut_json(const ExpanderCertificate& c) { return {{"method", c.method_name()}, {"value", c.value}}; }

json path_json(const BalancedPathReport& r) {
    auto windows = json::array();
    for (const auto& w : r.windows) windows.push_back(cut_json(w));
    return {{"expanders_ok", r.expanders_ok},
            {"volumes_ok", r.volumes_ok},
            {"heavy_layers_ok", r.heavy_layers_ok},
            {"worst_expansion", r.worst_expansion},
            {"worst_volume_ratio", r.worst_volume_ratio},
            {"worst_heavy_ratio", r.worst_heavy_ratio},
            {"windows", windows}};
}

Graph complete_graph(Vertex n) {
    std::vector<Edge> edges;
    for (Vertex u = 0; u < n; ++u)
        for (Vertex v = u + 1; v < n; ++v) edges.push_back(Edge{u, v});
    return Graph(n, std::move(edges));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph sketching lower-bound laboratory"};
    app.require_subcommand(1);
    std::uint64_t seed = 1;
    std::string out_path;
    std::string format;
    app.add_option("--seed", seed, "master seed")->capture_default_str();

    auto add_out = [&](CLI::App* cmd) { cmd->add_option("--out", out_path, "output file (default stdout)"); };
    auto add_format = [&](CLI::App* cmd, const std::string& fallback) {
        format = fallback;
        cmd->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    };

    // gen
    auto* gen = app.add_subcommand("gen", "sample a hard instance");
    Vertex gen_n = 24;
    std::uint32_t gen_d = 8;
    std::string variant = "mu";
    gen->add_option("--n", gen_n, "vertices")->required();
    gen->add_option("--d", gen_d, "layers (>= 2)")->required()->check(CLI::Range(2u, 1u << 20));
    gen->add_option("--variant", variant)->check(CLI::IsMember({"mu", "mu_prime", "mu_double_prime"}));
    gen->add_option("--seed", seed);
    add_out(gen);

    // forest
    auto* forest = app.add_subcommand("forest", "recover a spanning forest from l0 sketches");
    std::string graph_path;
    double delta = 0.01;
    forest->add_option("--graph", graph_path)->required();
    forest->add_option("--delta", delta)->check(CLI::Range(1e-12, 0.999999));
    forest->add_option("--seed", seed);
    add_out(forest);

    // decompose
    auto* decompose = app.add_subcommand("decompose", "expander decomposition");
    double eps = 0.1, d_min = 1;
    decompose->add_option("--graph", graph_path)->required();
    decompose->add_option("--eps", eps, "in (0, 1/2)")->required();
    decompose->add_option("--dmin", d_min, ">= 1");
    add_out(decompose);

    // hierarchical
    auto* hierarchical = app.add_subcommand("hierarchical", "hierarchical expander decomposition");
    std::optional<std::size_t> levels;
    double rule_d = 0, rule_delta = 0;
    bool auto_rule = false;
    hierarchical->add_option("--graph", graph_path)->required();
    auto* t_opt = hierarchical->add_option("--t", levels, "number of levels");
    auto* auto_opt = hierarchical->add_flag("--auto", auto_rule, "stop once m_t < n^(1+delta) d^(3/2)");
    t_opt->excludes(auto_opt);
    hierarchical->add_option("--d", rule_d);
    hierarchical->add_option("--delta", rule_delta);
    add_out(hierarchical);

    // resistance
    auto* resistance = app.add_subcommand("resistance", "effective resistance, or a balanced-path audit");
    std::string pair_text;
    bool audit = false;
    double phi = 0.05;
    std::size_t max_pairs = 0;
    resistance->add_option("--graph", graph_path)->required();
    resistance->add_option("--pair", pair_text, "u,v");
    resistance->add_flag("--audit", audit, "max resistance over pairs against the layered bound (needs layers)");
    resistance->add_option("--phi", phi);
    resistance->add_option("--pairs", max_pairs, "random pairs to test (0 = all)");
    resistance->add_option("--seed", seed);
    add_out(resistance);

    // kl
    auto* kl = app.add_subcommand("kl", "KL divergence from deleting one edge");
    std::string edge_text;
    kl->add_option("--graph", graph_path)->required();
    kl->add_option("--edge", edge_text, "u,v")->required();
    add_out(kl);

    // experiment
    auto* experiment = app.add_subcommand("experiment", "seeded Monte Carlo experiments");
    experiment->require_subcommand(1);
    std::vector<Vertex> ns;
    std::vector<std::size_t> ss;
    std::uint32_t d = 4;
    std::size_t trials = 200;
    std::string sampler_text = "all";
    double p = 0.5, floor = 0.05;
    bool check_path = false;

    auto* kl_scaling = experiment->add_subcommand("kl-scaling", "mean min(1, KL) over the hard distribution");
    kl_scaling->add_option("--n", ns, "comma-separated sizes")->required()->delimiter(',');
    kl_scaling->add_option("--d", d)->check(CLI::Range(2u, 1u << 20));
    kl_scaling->add_option("--trials", trials)->check(CLI::Range(std::size_t{1}, std::size_t{1} << 40));
    kl_scaling->add_option("--sampler", sampler_text, "all | none | bernoulli:p | level:j");
    kl_scaling->add_option("--seed", seed);
    add_out(kl_scaling);

    auto* distinguish = experiment->add_subcommand("distinguish", "likelihood-ratio test for theta");
    Vertex dist_n = 64;
    distinguish->add_option("--n", dist_n);
    distinguish->add_option("--d", d)->check(CLI::Range(2u, 1u << 20));
    distinguish->add_option("--s", ss, "comma-separated sketch sizes")->required()->delimiter(',');
    distinguish->add_option("--trials", trials)->check(CLI::Range(std::size_t{1}, std::size_t{1} << 40));
    distinguish->add_option("--sampler", sampler_text);
    distinguish->add_option("--seed", seed);
    add_out(distinguish);

    auto* vsample = experiment->add_subcommand("vertex-sample", "certified conductance of vertex-sampled cliques");
    Vertex clique_n = 400;
    vsample->add_option("--n", clique_n);
    vsample->add_option("--p", p)->check(CLI::Range(1e-12, 1.0));
    vsample->add_option("--trials", trials);
    vsample->add_option("--floor", floor);
    vsample->add_option("--seed", seed);
    add_out(vsample);

    auto* bpath = experiment->add_subcommand("balanced-path", "layer counts and path conditions on a layered clique");
    bpath->add_option("--n", clique_n);
    bpath->add_option("--d", d)->check(CLI::Range(2u, 1u << 20));
    bpath->add_option("--phi", phi);
    bpath->add_option("--trials", trials);
    bpath->add_flag("--check-path", check_path, "also evaluate the three path conditions");
    bpath->add_option("--seed", seed);
    add_out(bpath);

    for (auto* cmd : {vsample, bpath, kl_scaling, distinguish}) add_format(cmd, "");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        json config = {{"seed", seed}};
        if (*gen) {
            usage_check(gen_n >= gen_d, "gen needs n >= d");
            config.update({{"command", "gen"}, {"n", gen_n}, {"d", gen_d}, {"variant", variant}});
            json doc;
            if (variant == "mu")
                doc = instance_json(sample_mu(gen_n, gen_d, seed));
            else if (variant == "mu_prime")
                doc = instance_json(sample_mu_prime(gen_n, gen_d, seed));
            else
                doc = instance_json(sample_mu_double_prime(gen_n, gen_d, seed));
            doc["config"] = config;
            emit(out_path, dump(doc));
        } else if (*forest) {
            const Graph g = load_graph(graph_path);
            config.update({{"command", "forest"}, {"graph", graph_path}, {"delta", delta}});
            const auto r = spanning_forest(g, delta, seed);
            emit(out_path, dump({{"config", config},
                                 {"n", g.n()},
                                 {"edges", edges_to_json(r.edges)},
                                 {"success", r.success},
                                 {"verified", r.verified},
                                 {"rounds_used", r.rounds_used},
                                 {"failed_queries", r.failed_queries},
                                 {"rows_per_batch", r.rows_per_batch}}));
        } else if (*decompose) {
            usage_check(eps > 0 && eps < 0.5, "decompose needs eps in (0, 1/2)");
            usage_check(d_min >= 1, "decompose needs dmin >= 1");
            const Graph g = load_graph(graph_path);
            config.update({{"command", "decompose"}, {"graph", graph_path}, {"eps", eps}, {"dmin", d_min}});
            auto doc = to_json(expander_decompose(g, eps, d_min));
            doc["config"] = config;
            emit(out_path, dump(doc));
        } else if (*hierarchical) {
            usage_check(levels.has_value() != auto_rule, "hierarchical needs exactly one of --t or --auto");
            const Graph g = load_graph(graph_path);
            usage_check(g.n() >= 2, "hierarchical needs at least 2 vertices");
            config.update({{"command", "hierarchical"}, {"graph", graph_path}});
            HierarchicalDecomposition h;
            if (auto_rule) {
                usage_check(rule_d > 0 && rule_delta >= 0, "--auto needs --d > 0 and --delta >= 0");
                config.update({{"auto", true}, {"d", rule_d}, {"delta", rule_delta}});
                h = hierarchical_decompose_auto(g, rule_d, rule_delta);
            } else {
                usage_check(*levels >= 1, "hierarchical needs t >= 1");
                config["t"] = *levels;
                h = hierarchical_decompose(g, *levels);
            }
            auto doc = to_json(h);
            doc["config"] = config;
            emit(out_path, dump(doc));
        } else if (*resistance) {
            usage_check(audit != !pair_text.empty(), "resistance needs exactly one of --pair or --audit");
            config.update({{"command", "resistance"}, {"graph", graph_path}});
            if (!audit) {
                const Graph g = load_graph(graph_path);
                const Edge e = parse_pair(pair_text);
                usage_check(e.u < g.n() && e.v < g.n() && e.u != e.v, "pair must be two distinct vertices of the graph");
                config["pair"] = {e.u, e.v};
                const double r = effective_resistance(g, e.u, e.v);
                json doc = {{"config", config}, {"u", e.u}, {"v", e.v}, {"connected", std::isfinite(r)}};
                doc["resistance"] = std::isfinite(r) ? json(r) : json(nullptr);
                emit(out_path, dump(doc));
            } else {
                usage_check(phi > 0, "--phi must be positive");
                const auto doc_in = load_json_file(graph_path);
                const Graph g = graph_from_json(doc_in);
                const auto layers = layers_from(doc_in, g.n());
                const auto d_layers = doc_in.contains("d") ? doc_in["d"].get<std::uint32_t>()
                                                           : *std::max_element(layers.begin(), layers.end()) + 1;
                config.update({{"audit", true}, {"phi", phi}, {"pairs", max_pairs}});
                const auto a = resistance_audit(g, layers, d_layers, phi, max_pairs, seed);
                json doc = {{"config", config},
                            {"d", a.d},
                            {"d_min", a.d_min},
                            {"vol_u1", a.vol_u1},
                            {"bound_term", a.bound_term},
                            {"pairs_tested", a.pairs_tested},
                            {"exhaustive", a.exhaustive},
                            {"connected", a.connected}};
                doc["max_resistance"] = a.connected ? json(a.max_resistance) : json(nullptr);
                doc["fitted_constant"] = a.connected ? json(a.fitted_constant) : json(nullptr);
                doc["worst_pair"] = {a.worst_pair.u, a.worst_pair.v};
                if (d_layers >= 2) doc["balanced_path"] = path_json(check_balanced_path(g, layers, d_layers, phi));
                emit(out_path, dump(doc));
            }
        } else if (*kl) {
            const Graph g = load_graph(graph_path);
            const Edge e = parse_pair(edge_text);
            usage_check(e.u < g.n() && e.v < g.n() && e.u != e.v, "edge must join two distinct vertices of the graph");
            config.update({{"command", "kl"}, {"graph", graph_path}, {"edge", {e.u, e.v}}});
            const auto r = kl_edge_exact(g, e);
            json doc = {{"config", config},           {"R", r.R},
                        {"kl_bound_quarter", r.kl_bound_quarter}, {"kl_min1", r.kl_min1},
                        {"bridge_flag", r.bridge}};
            doc["kl_exact"] = r.bridge ? json(nullptr) : json(r.kl_exact);
            emit(out_path, dump(doc));
        } else if (*kl_scaling) {
            const auto sampler = SamplerSpec::parse(sampler_text);
            for (Vertex n : ns) usage_check(n >= d, "kl-scaling needs every n >= d");
            config.update({{"command", "experiment kl-scaling"},
                           {"n", ns},
                           {"d", d},
                           {"trials", trials},
                           {"sampler", sampler.to_string()}});
            std::vector<ScalingRow> rows;
            for (Vertex n : ns) rows.push_back(estimate_kl_scaling(sampler, n, d, trials, seed));
            if (format == "json") {
                auto out = json::array();
                for (const auto& r : rows)
                    out.push_back({{"n", r.n}, {"d", r.d}, {"s", r.s}, {"sampler", r.sampler}, {"trials", r.trials},
                                   {"mean_min1_kl", r.mean_min1_kl}, {"stderr", r.stderr_}});
                emit(out_path, dump({{"config", config}, {"rows", out}}));
            } else {
                emit(out_path, scaling_csv(rows, echo_lines(config)));
            }
        } else if (*distinguish) {
            const auto sampler = SamplerSpec::parse(sampler_text);
            usage_check(dist_n >= d, "distinguish needs n >= d");
            config.update({{"command", "experiment distinguish"},
                           {"n", dist_n},
                           {"d", d},
                           {"s", ss},
                           {"trials", trials},
                           {"sampler", sampler.to_string()}});
            std::vector<DistinguishRow> rows;
            for (std::size_t s : ss) rows.push_back(distinguish_theta(dist_n, d, s, sampler, trials, seed));
            if (format == "json") {
                auto out = json::array();
                for (const auto& r : rows)
                    out.push_back({{"n", r.n}, {"d", r.d}, {"s", r.s}, {"trials", r.trials},
                                   {"success_rate", r.success_rate}, {"tvd_lb", r.tvd_lb},
                                   {"pinsker_bound", r.pinsker_bound}});
                emit(out_path, dump({{"config", config}, {"rows", out}}));
            } else {
                emit(out_path, distinguish_csv(rows, echo_lines(config)));
            }
        } else if (*vsample) {
            usage_check(clique_n >= 2, "vertex-sample needs n >= 2");
            config.update({{"command", "experiment vertex-sample"}, {"n", clique_n}, {"p", p}, {"trials", trials},
                           {"floor", floor}});
            const auto r = vertex_sample_experiment(complete_graph(clique_n), p, trials, seed, floor);
            if (format == "csv") {
                std::string text = "# config " + config.dump() + "\ntrial,kept,method,certified\n";
                for (std::size_t i = 0; i < r.trials.size(); ++i)
                    text += std::to_string(i) + "," + std::to_string(r.trials[i].kept) + "," +
                            r.trials[i].certificate.method_name() + "," + format_real(r.trials[i].certificate.value) + "\n";
                emit(out_path, text);
            } else {
                auto rows = json::array();
                for (const auto& t : r.trials) rows.push_back({{"kept", t.kept}, {"certificate", cut_json(t.certificate)}});
                emit(out_path, dump({{"config", config}, {"fraction_certified", r.fraction_certified}, {"trials", rows}}));
            }
        } else if (*bpath) {
            usage_check(clique_n >= d, "balanced-path needs n >= d");
            config.update({{"command", "experiment balanced-path"}, {"n", clique_n}, {"d", d}, {"phi", phi},
                           {"trials", trials}, {"check_path", check_path}});
            const auto r = balanced_path_experiment(complete_graph(clique_n), d, phi, trials, seed, check_path);
            if (format == "csv") {
                std::string text = "# config " + config.dump() + "\ntrial,counts_in_band,min_degree,min_degree_ok";
                text += check_path ? ",expanders_ok,volumes_ok,heavy_layers_ok\n" : "\n";
                for (std::size_t i = 0; i < r.trials.size(); ++i) {
                    const auto& t = r.trials[i];
                    text += std::to_string(i) + "," + std::to_string(t.counts_in_band) + "," +
                            std::to_string(t.counts.min_degree) + "," + std::to_string(t.min_degree_ok);
                    if (t.path)
                        text += "," + std::to_string(t.path->expanders_ok) + "," + std::to_string(t.path->volumes_ok) +
                                "," + std::to_string(t.path->heavy_layers_ok);
                    text += "\n";
                }
                emit(out_path, text);
            } else {
                auto rows = json::array();
                for (const auto& t : r.trials) {
                    json row = {{"within", t.counts.within},
                                {"adjacent", t.counts.adjacent},
                                {"min_degree", t.counts.min_degree},
                                {"counts_in_band", t.counts_in_band},
                                {"min_degree_ok", t.min_degree_ok}};
                    if (t.path) row["path"] = path_json(*t.path);
                    rows.push_back(row);
                }
                json doc = {{"config", config},
                            {"min_degree_floor", r.min_degree_floor},
                            {"fraction_counts", r.fraction_counts},
                            {"fraction_min_degree", r.fraction_min_degree},
                            {"trials", rows}};
                if (check_path) doc["fraction_path"] = r.fraction_path;
                emit(out_path, dump(doc));
            }
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\nRun with --help for usage.\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const ContractViolation& e) {
        std::cerr << "contract violation: " << e.what() << "\n";
        return 3;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
