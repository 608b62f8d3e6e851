#include "fermext/graph.hpp"
#include "fermext/io.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace fermext;

TEST_CASE("edge list construction, degrees and handshake", "[graph]") {
  const auto g = from_edge_list(3, {{0, 1}, {1, 2}});
  REQUIRE(g.degree(0) == 1);
  REQUIRE(g.degree(1) == 2);
  REQUIRE(g.degree(2) == 1);
  REQUIRE(g.edge_count() == 2);

  const auto star = star_graph(5);
  REQUIRE(star.degree(0) == 4);
  for (int i = 1; i < 5; ++i) REQUIRE(star.degree(i) == 1);

  const auto bip = complete_bipartite_graph(2, 3);
  REQUIRE(bip.degree(0) == 3);
  REQUIRE(bip.degree(1) == 3);
  for (int i = 2; i < 5; ++i) REQUIRE(bip.degree(i) == 2);
}

TEST_CASE("edge list rejects self-loops, bad indices, duplicates collapse", "[graph]") {
  REQUIRE_THROWS_AS(from_edge_list(3, {{0, 0}}), std::invalid_argument);
  REQUIRE_THROWS_AS(from_edge_list(3, {{0, 3}}), std::invalid_argument);
  const auto g = from_edge_list(3, {{0, 1}, {1, 0}, {0, 1}});
  REQUIRE(g.edge_count() == 1);
}

TEST_CASE("lattice generator degrees", "[graph]") {
  const auto ring = lattice_graph(1, 4, true);
  REQUIRE(ring.is_regular());
  REQUIRE(ring.degree(0) == 2);
  const auto chain = lattice_graph(1, 4, false);
  REQUIRE(chain.degree(0) == 1);
  REQUIRE(chain.degree(1) == 2);
  const auto torus = lattice_graph(2, 3, true);
  REQUIRE(torus.is_regular());
  REQUIRE(torus.degree(0) == 4);
  REQUIRE(torus.n == 9);
}

TEST_CASE("uniform weights reproduce their closed forms", "[graph]") {
  const auto star = star_graph(5);
  const auto w = uniform_weight_matrix(star);
  REQUIRE(w.pi(0) == Catch::Approx(0.5).margin(1e-12));
  for (int leaf = 1; leaf < 5; ++leaf)
    REQUIRE(w.pi(leaf) == Catch::Approx(1.0 / 8.0).margin(1e-12));

  const auto k4 = complete_graph(4);
  const auto wk = uniform_weight_matrix(k4);
  REQUIRE(wk.tr_A_squared == Catch::Approx(4.0 / 3.0).margin(1e-12));
  REQUIRE(wk.pi_norm2_sq == Catch::Approx(0.25).margin(1e-12));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) REQUIRE(wk.A(i, j) == Catch::Approx(1.0 / 3.0).margin(1e-12));

  // Derived quantities against direct recomputation from G.
  const auto ring = ring_graph(6);
  const auto wr = uniform_weight_matrix(ring);
  double tr2 = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) tr2 += wr.A(i, j) * wr.A(j, i);
  REQUIRE(wr.tr_A_squared == Catch::Approx(tr2).margin(1e-12));
  // The matrix trace runs over ordered pairs, so it is twice the sum over
  // unordered edges of 1/(|E_i||E_j|).
  double closed = 0.0;
  for (const auto& [a, b] : ring.edges)
    closed += 1.0 / (ring.degree(a) * ring.degree(b));
  REQUIRE(wr.tr_A_squared == Catch::Approx(2.0 * closed).margin(1e-12));
  REQUIRE(wr.pi_norm2_sq == Catch::Approx(wr.pi.squaredNorm()).margin(1e-12));
  // c-regular graphs have uniform pi.
  for (int i = 0; i < 6; ++i) REQUIRE(wr.pi(i) == Catch::Approx(1.0 / 6.0).margin(1e-12));
}

TEST_CASE("weights loader validates symmetry and normalization", "[graph]") {
  Eigen::MatrixXd g(2, 2);
  g << 0.0, 0.6, 0.4, 0.0;
  REQUIRE_THROWS_AS(weight_matrix_from(g), std::invalid_argument);
  g << 0.0, 0.4, 0.4, 0.0;
  REQUIRE_THROWS_AS(weight_matrix_from(g), std::invalid_argument);  // sums to 0.8
  g << 0.0, 0.5, 0.5, 0.0;
  REQUIRE_NOTHROW(weight_matrix_from(g));
}

TEST_CASE("vertex covers: exact minimum on known graphs", "[graph]") {
  const auto star = star_graph(6);
  REQUIRE(vertex_cover(star) == std::vector<int>{0});

  const auto path = from_edge_list(3, {{0, 1}, {1, 2}});
  REQUIRE(vertex_cover(path) == std::vector<int>{1});

  // Brute-force oracle over all subsets of K4.
  const auto k4 = complete_graph(4);
  std::size_t best = 5;
  for (unsigned mask = 0; mask < 16; ++mask) {
    std::vector<int> cover;
    for (int v = 0; v < 4; ++v)
      if (mask >> v & 1) cover.push_back(v);
    if (is_vertex_cover(k4, cover)) best = std::min(best, cover.size());
  }
  REQUIRE(best == 3);
  const auto found = vertex_cover(k4);
  REQUIRE(found.size() == best);
  REQUIRE(is_vertex_cover(k4, found));
}

TEST_CASE("greedy cover always covers", "[graph]") {
  const auto g = lattice_graph(2, 3, true);
  const auto cover = vertex_cover(g, CoverMode::Greedy);
  REQUIRE(is_vertex_cover(g, cover));
}

TEST_CASE("graph JSON schema round trip and diagnostics", "[graph]") {
  const auto g = complete_bipartite_graph(2, 3);
  const auto j = graph_to_json(g);
  const auto back = graph_from_json(j);
  REQUIRE(back.edges == g.edges);

  json bad = {{"n", 3}, {"edges", {{0, 0}}}};
  REQUIRE_THROWS_WITH(graph_from_json(bad), Catch::Matchers::ContainsSubstring("self-loop"));
  json bad2 = {{"n", 3}, {"edges", {{0, 5}}}};
  REQUIRE_THROWS_WITH(graph_from_json(bad2), Catch::Matchers::ContainsSubstring("out of range"));
  json bad3 = {{"edges", json::array()}};
  REQUIRE_THROWS_WITH(graph_from_json(bad3), Catch::Matchers::ContainsSubstring("'n'"));
}

TEST_CASE("graph spec strings", "[graph]") {
  REQUIRE(parse_graph_spec("star:5").degree(0) == 4);
  REQUIRE(parse_graph_spec("ring:6").edge_count() == 6);
  REQUIRE(parse_graph_spec("complete:4").edge_count() == 6);
  REQUIRE(parse_graph_spec("bipartite:2,3").edge_count() == 6);
  REQUIRE(parse_graph_spec("lattice:2,2,open").edge_count() == 4);
  REQUIRE_THROWS_AS(parse_graph_spec("nonsense"), std::invalid_argument);
}
