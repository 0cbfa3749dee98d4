#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "sketchlab/graph.hpp"
#include "sketchlab/graph_io.hpp"
#include "support.hpp"

using namespace sketchlab;
using namespace testing_support;

TEST(PairIndex, SmallValues) {
    EXPECT_EQ(pair_index(0, 1, 4).value, 0u);
    EXPECT_EQ(pair_index(2, 3, 4).value, 5u);
    EXPECT_EQ(pair_index(0, 3, 4).value, 2u);
}

TEST(PairIndex, BijectionUpTo64) {
    for (Vertex n = 2; n <= 64; ++n) {
        std::uint64_t expected = 0;
        for (Vertex u = 0; u < n; ++u)
            for (Vertex v = u + 1; v < n; ++v) {
                const auto p = pair_index(u, v, n);
                ASSERT_EQ(p.value, expected++);
                const auto e = pair_unindex(p, n);
                ASSERT_EQ(e.u, u);
                ASSERT_EQ(e.v, v);
            }
        ASSERT_EQ(expected, pair_count(n));
    }
}

TEST(PairIndex, RejectsBadPairs) {
    EXPECT_THROW(pair_index(1, 1, 4), ContractViolation);
    EXPECT_THROW(pair_index(2, 1, 4), ContractViolation);
    EXPECT_THROW(pair_index(1, 4, 4), ContractViolation);
    EXPECT_THROW(pair_unindex(PairIndex{6}, 4), ContractViolation);
}

TEST(PairIndex, LargeNRoundTrip) {
    const Vertex n = 100000;
    for (std::uint64_t p : {std::uint64_t{0}, pair_count(n) / 3, pair_count(n) - 1}) {
        const auto e = pair_unindex(PairIndex{p}, n);
        EXPECT_EQ(pair_index(e, n).value, p);
    }
}

TEST(GraphType, ValidatesEdges) {
    EXPECT_THROW(Graph(3, {{0, 0}}), ContractViolation);
    EXPECT_THROW(Graph(3, {{0, 3}}), ContractViolation);
    EXPECT_THROW(Graph(3, {{0, 1}, {1, 0}}), ContractViolation);
    const Graph g(3, {{2, 1}, {1, 0}});
    ASSERT_EQ(g.m(), 2u);
    EXPECT_EQ(g.edges()[0], (Edge{0, 1}));
    EXPECT_EQ(g.edges()[1], (Edge{1, 2}));
    EXPECT_TRUE(g.has_edge(2, 1));
    EXPECT_FALSE(g.has_edge(0, 2));
}

TEST(GraphType, VolumeIsTwiceEdgeCount) {
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto g = erdos_renyi(20, 0.3, s);
        EXPECT_EQ(g.volume(), 2 * g.m());
    }
}

TEST(Matrices, SingleEdgeAndEmpty) {
    const auto m = build_matrices(Graph(2, {{0, 1}}));
    Eigen::Matrix2d expected;
    expected << 1, -1, -1, 1;
    EXPECT_EQ(m.laplacian, expected);
    EXPECT_TRUE(laplacian_matrix(Graph(5)).isZero(0));
}

TEST(Matrices, Triangle) {
    const auto l = laplacian_matrix(complete_graph(3));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_EQ(l(i, j), i == j ? 2.0 : -1.0);
}

TEST(Matrices, LaplacianEqualsBtBExactly) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const Vertex n = 2 + static_cast<Vertex>(s % 7);
        const auto g = erdos_renyi(n, 0.5, 1000 + s);
        const auto m = build_matrices(g);
        const Eigen::MatrixXd btb = Eigen::MatrixXd(m.incidence.transpose() * m.incidence);
        ASSERT_EQ(btb, m.laplacian);
        ASSERT_EQ(m.laplacian, m.degree - m.adjacency);
        for (Eigen::Index r = 0; r < m.laplacian.rows(); ++r) ASSERT_EQ(m.laplacian.row(r).sum(), 0.0);
        // Non-edge rows of B are zero; edge rows hold +1 at the smaller endpoint.
        for (const auto& e : g.edges()) {
            const auto row = static_cast<Eigen::Index>(pair_index(e, n).value);
            ASSERT_EQ(m.incidence.coeff(row, e.u), 1.0);
            ASSERT_EQ(m.incidence.coeff(row, e.v), -1.0);
        }
        ASSERT_EQ(static_cast<std::size_t>(m.incidence.nonZeros()), 2 * g.m());
    }
}

TEST(Matrices, NormalizedLaplacianDropsIsolatedVertices) {
    const Graph g(4, {{0, 2}});
    const auto nl = normalized_laplacian(g);
    ASSERT_EQ(nl.vertices, (std::vector<Vertex>{0, 2}));
    EXPECT_NEAR(nl.matrix(0, 1), -1.0, 1e-15);
    const auto ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(normalized_laplacian(erdos_renyi(12, 0.4, 3)).matrix)
                        .eigenvalues();
    EXPECT_GE(ev.minCoeff(), -1e-12);
}

TEST(Bfs, Distances) {
    EXPECT_EQ(bfs_distance(path_graph(3), 0, 2), 2u);
    EXPECT_EQ(bfs_distance(path_graph(3), 1, 1), 0u);
    EXPECT_FALSE(bfs_distance(Graph(2), 0, 1).has_value());
}

TEST(Subgraphs, Intersect) {
    const auto tri = complete_graph(3);
    EXPECT_EQ(intersect(tri, tri), tri);
    EXPECT_EQ(intersect(tri, Graph(3)).m(), 0u);
    const auto r = intersect(path_graph(3), Graph(3, {{0, 1}, {0, 2}}));
    ASSERT_EQ(r.m(), 1u);
    EXPECT_EQ(r.edges()[0], (Edge{0, 1}));
    EXPECT_THROW(intersect(tri, Graph(4)), ContractViolation);
}

TEST(Subgraphs, CompactInducedRelabels) {
    const auto sub = compact_induced_subgraph(complete_graph(6), {5, 1, 3});
    EXPECT_EQ(sub.vertices, (std::vector<Vertex>{1, 3, 5}));
    EXPECT_EQ(sub.graph, complete_graph(3));
}

TEST(Components, LabelsOrderedBySmallestVertex) {
    const Graph g(6, {{4, 5}, {1, 2}});
    const auto labels = connected_components(g);
    EXPECT_EQ(labels, (std::vector<std::uint32_t>{0, 1, 1, 2, 3, 3}));
    EXPECT_EQ(component_count(g), 4u);
}

TEST(GraphIo, ParseExamples) {
    EXPECT_EQ(parse_graph_json(R"({"n":2,"edges":[[0,1]]})"), Graph(2, {{0, 1}}));
    EXPECT_EQ(parse_edge_list("# n=3\n0 1\n1 2\n"), path_graph(3));
}

TEST(GraphIo, ErrorsCarryLocation) {
    try {
        parse_edge_list("# n=3\n0 1\n0 0\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.where(), "line 3");
    }
    try {
        parse_graph_json(R"({"n":3,"edges":[[0,1],[1,0]]})");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.where(), "$.edges[1]");
    }
    EXPECT_THROW(parse_edge_list("0 1\n"), ParseError);
    EXPECT_THROW(parse_edge_list("# n=2\n0 2\n"), ParseError);
    EXPECT_THROW(parse_edge_list("# n=2\n0 1 1\n"), ParseError);
    EXPECT_THROW(parse_graph_json(R"({"n":2})"), ParseError);
    EXPECT_THROW(parse_graph_json(R"({"n":2,"edges":[[0,-1]]})"), ParseError);
    EXPECT_THROW(parse_graph_json("{"), ParseError);
    EXPECT_THROW(load_graph("/nonexistent/graph.json"), ParseError);
}

TEST(GraphIo, RoundTripBothFormats) {
    const auto dir = std::filesystem::temp_directory_path() / "sketchlab_io_test";
    std::filesystem::create_directories(dir);
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto g = erdos_renyi(1 + static_cast<Vertex>(s % 30), 0.25, 77 + s);
        save_graph(dir / "g.json", g);
        save_graph(dir / "g.txt", g);
        ASSERT_EQ(load_graph(dir / "g.json"), g);
        ASSERT_EQ(load_graph(dir / "g.txt"), g);
    }
    std::filesystem::remove_all(dir);
}
