#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "sketchlab/errors.hpp"
#include "sketchlab/graph.hpp"

namespace sketchlab {

enum class GraphFormat { json, edgelist };

inline nlohmann::json edges_to_json(std::span<const Edge> edges) {
    auto out = nlohmann::json::array();
    for (const auto& e : edges) out.push_back({e.u, e.v});
    return out;
}

inline nlohmann::json to_json(const Graph& g) {
    return {{"n", g.n()}, {"edges", edges_to_json(g.edges())}};
}

namespace detail {

inline Vertex json_vertex(const nlohmann::json& value, const std::string& where) {
    if (!value.is_number_integer()) throw ParseError(where, "expected a non-negative integer");
    const auto x = value.get<std::int64_t>();
    if (x < 0 || x > static_cast<std::int64_t>(UINT32_MAX - 1)) throw ParseError(where, "vertex out of range");
    return static_cast<Vertex>(x);
}

// Shared validation for both formats: range, self-loop, duplicate.
class EdgeCollector {
public:
    explicit EdgeCollector(Vertex n) : n_(n) {}

    void add(Vertex u, Vertex v, const std::string& where) {
        if (u >= n_ || v >= n_) throw ParseError(where, "vertex out of range for n=" + std::to_string(n_));
        if (u == v) throw ParseError(where, "self-loop at vertex " + std::to_string(u));
        Edge e = make_edge(u, v);
        if (!seen_.insert(e).second)
            throw ParseError(where, "duplicate edge (" + std::to_string(e.u) + "," + std::to_string(e.v) + ")");
        edges_.push_back(e);
    }

    Graph finish() && { return Graph(n_, std::move(edges_)); }

private:
    Vertex n_;
    std::set<Edge> seen_;
    std::vector<Edge> edges_;
};

inline bool parse_uint(std::string_view token, std::uint64_t& out) {
    if (token.empty()) return false;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
    return ec == std::errc() && ptr == token.data() + token.size();
}

}  // namespace detail

inline Graph graph_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ParseError("$", "expected an object");
    if (!doc.contains("n")) throw ParseError("$.n", "missing field");
    if (!doc.contains("edges")) throw ParseError("$.edges", "missing field");
    const Vertex n = detail::json_vertex(doc["n"], "$.n");
    const auto& edges = doc["edges"];
    if (!edges.is_array()) throw ParseError("$.edges", "expected an array");
    detail::EdgeCollector collect(n);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const std::string where = "$.edges[" + std::to_string(i) + "]";
        const auto& pair = edges[i];
        if (!pair.is_array() || pair.size() != 2) throw ParseError(where, "expected [u, v]");
        collect.add(detail::json_vertex(pair[0], where + "[0]"), detail::json_vertex(pair[1], where + "[1]"), where);
    }
    return std::move(collect).finish();
}

inline Graph parse_graph_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& err) {
        throw ParseError("byte " + std::to_string(err.byte), "invalid JSON");
    }
    return graph_from_json(doc);
}

inline std::string format_edge_list(const Graph& g) {
    std::string out = "# n=" + std::to_string(g.n()) + "\n";
    for (const auto& e : g.edges()) out += std::to_string(e.u) + " " + std::to_string(e.v) + "\n";
    return out;
}

// First line "# n=<N>", then one "u v" per line. Blank lines are skipped.
inline Graph parse_edge_list(std::string_view text) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    auto next_line = [&](std::string_view& line) {
        if (pos >= text.size()) return false;
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        return true;
    };
    std::string_view line;
    if (!next_line(line)) throw ParseError("line 1", "missing '# n=<N>' header");
    constexpr std::string_view prefix = "# n=";
    std::uint64_t n = 0;
    if (line.substr(0, prefix.size()) != prefix || !detail::parse_uint(line.substr(prefix.size()), n) ||
        n >= UINT32_MAX)
        throw ParseError("line 1", "expected '# n=<N>' header");
    detail::EdgeCollector collect(static_cast<Vertex>(n));
    while (next_line(line)) {
        const std::string where = "line " + std::to_string(line_no);
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        std::istringstream in{std::string(line)};
        std::string a, b, extra;
        in >> a >> b;
        std::uint64_t u = 0, v = 0;
        if (!detail::parse_uint(a, u) || !detail::parse_uint(b, v) || (in >> extra))
            throw ParseError(where, "expected 'u v'");
        if (u >= n || v >= n) throw ParseError(where, "vertex out of range for n=" + std::to_string(n));
        collect.add(static_cast<Vertex>(u), static_cast<Vertex>(v), where);
    }
    return std::move(collect).finish();
}

inline GraphFormat format_for_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    return ext == ".json" ? GraphFormat::json : GraphFormat::edgelist;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string(), "cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline Graph load_graph(const std::filesystem::path& path, GraphFormat format) {
    const auto text = read_text_file(path);
    return format == GraphFormat::json ? parse_graph_json(text) : parse_edge_list(text);
}

inline Graph load_graph(const std::filesystem::path& path) { return load_graph(path, format_for_path(path)); }

inline void save_graph(const std::filesystem::path& path, const Graph& g, GraphFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(path.string(), "cannot open file for writing");
    if (format == GraphFormat::json)
        out << to_json(g).dump() << "\n";
    else
        out << format_edge_list(g);
}

inline void save_graph(const std::filesystem::path& path, const Graph& g) { save_graph(path, g, format_for_path(path)); }

}  // namespace sketchlab
