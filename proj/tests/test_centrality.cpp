#include "biview/centrality.hpp"

#include <algorithm>
#include <numeric>

#include "doctest.h"

#include "biview/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace biview;
using kg::DirectionMode;

namespace {

kg::AdjacencyView undirected(const kg::KnowledgeGraph& g) {
  return kg::build_adjacency(g, DirectionMode::undirected_collapsed);
}

kg::KnowledgeGraph random_graph(std::size_t n, std::size_t edges, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> list;
  while (list.size() < edges) {
    auto s = static_cast<std::uint32_t>(rng.below(n));
    auto d = static_cast<std::uint32_t>(rng.below(n));
    if (s != d) list.emplace_back(s, d);
  }
  return testutil::make_graph(n, list);
}

}  // namespace

TEST_CASE("weighted degree") {
  SUBCASE("triangle with unit weights") {
    auto adj = undirected(testutil::make_graph(3, {{0u, 1u}, {1u, 2u}, {2u, 0u}}));
    auto deg = centrality::degree(adj);
    for (double d : deg) CHECK(d == doctest::Approx(2.0));
  }
  SUBCASE("star with 4 leaves") {
    auto adj = undirected(testutil::make_graph(5, {{0u, 1u}, {0u, 2u}, {0u, 3u}, {0u, 4u}}));
    auto deg = centrality::degree(adj);
    CHECK(deg[0] == doctest::Approx(4.0));
    for (int leaf = 1; leaf <= 4; ++leaf) CHECK(deg[leaf] == doctest::Approx(1.0));
  }
  SUBCASE("weights are summed") {
    auto adj = undirected(testutil::make_weighted_graph(2, {{0u, 1u, 3.0}}));
    auto deg = centrality::degree(adj);
    CHECK(deg[0] == doctest::Approx(3.0));
    CHECK(deg[1] == doctest::Approx(3.0));
  }
}

TEST_CASE("pagerank on symmetric graphs") {
  SUBCASE("3-cycle is uniform") {
    auto adj = undirected(testutil::make_graph(3, {{0u, 1u}, {1u, 2u}, {2u, 0u}}));
    auto pr = centrality::pagerank(adj);
    REQUIRE(pr.converged);
    for (double s : pr.scores) CHECK(s == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  }
  SUBCASE("two disconnected nodes split the mass") {
    auto adj = undirected(testutil::make_graph(2, {}));
    auto pr = centrality::pagerank(adj, {0.85, 1e-10, 200});
    CHECK(pr.scores[0] == doctest::Approx(0.5));
    CHECK(pr.scores[1] == doctest::Approx(0.5));
  }
}

TEST_CASE("pagerank matches the dense-matrix oracle on a path graph") {
  auto adj = undirected(testutil::make_graph(4, {{0u, 1u}, {1u, 2u}, {2u, 3u}}));
  auto pr = centrality::pagerank(adj, {0.85, 1e-12, 1000});
  auto expect = oracle::dense_pagerank(adj, 0.85);
  for (std::size_t v = 0; v < 4; ++v)
    CHECK(pr.scores[v] == doctest::Approx(expect[v]).epsilon(1e-8));
}

TEST_CASE("pagerank output is a probability distribution") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    auto g = random_graph(15, 30, seed);
    auto pr = centrality::pagerank(undirected(g));
    double sum = std::accumulate(pr.scores.begin(), pr.scores.end(), 0.0);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    for (double s : pr.scores) {
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
    }
  }
}

TEST_CASE("pagerank reports non-convergence but still returns scores") {
  auto adj = undirected(testutil::make_graph(6, {{0u, 1u}, {1u, 2u}, {2u, 3u}, {3u, 4u}, {4u, 5u}}));
  auto pr = centrality::pagerank(adj, {0.85, 1e-15, 2});
  CHECK_FALSE(pr.converged);
  CHECK(pr.scores.size() == 6);
}

TEST_CASE("betweenness on hand-checked graphs") {
  SUBCASE("path a-b-c") {
    auto adj = undirected(testutil::make_graph(3, {{0u, 1u}, {1u, 2u}}));
    auto bc = centrality::betweenness(adj);
    CHECK(bc[0] == doctest::Approx(0.0));
    CHECK(bc[1] == doctest::Approx(1.0));
    CHECK(bc[2] == doctest::Approx(0.0));
  }
  SUBCASE("complete graph K4 is all zeros") {
    auto adj = undirected(
        testutil::make_graph(4, {{0u, 1u}, {0u, 2u}, {0u, 3u}, {1u, 2u}, {1u, 3u}, {2u, 3u}}));
    for (double b : centrality::betweenness(adj)) CHECK(b == doctest::Approx(0.0));
  }
  SUBCASE("self-loops do not affect path counting") {
    auto adj = undirected(testutil::make_graph(3, {{0u, 1u}, {1u, 2u}, {1u, 1u}}));
    auto bc = centrality::betweenness(adj);
    CHECK(bc[1] == doctest::Approx(1.0));
  }
}

TEST_CASE("betweenness matches the Floyd-Warshall path-counting oracle") {
  for (std::uint64_t seed : {11ull, 22ull, 33ull, 44ull}) {
    auto g = random_graph(10, 18, seed);
    auto adj = undirected(g);
    auto brandes = centrality::betweenness(adj);
    auto expect = oracle::floyd_warshall_betweenness(adj);
    for (std::size_t v = 0; v < 10; ++v)
      CHECK(brandes[v] == doctest::Approx(expect[v]).epsilon(1e-9));
  }
}

TEST_CASE("betweenness counts ordered pairs on directed views") {
  auto g = testutil::make_graph(3, {{0u, 1u}, {1u, 2u}});
  auto adj = kg::build_adjacency(g, kg::DirectionMode::directed);
  auto bc = centrality::betweenness(adj);
  CHECK(bc[1] == doctest::Approx(1.0));  // only the ordered pair (a, c)
  CHECK(bc[0] == doctest::Approx(0.0));
  CHECK(bc[2] == doctest::Approx(0.0));
  auto expect = oracle::floyd_warshall_betweenness(adj);
  for (std::size_t v = 0; v < 3; ++v) CHECK(bc[v] == doctest::Approx(expect[v]));

  for (std::uint64_t seed : {3ull, 4ull}) {
    auto rg = random_graph(9, 20, seed);
    auto radj = kg::build_adjacency(rg, kg::DirectionMode::directed);
    auto brandes = centrality::betweenness(radj);
    auto oracle_bc = oracle::floyd_warshall_betweenness(radj);
    for (std::size_t v = 0; v < 9; ++v)
      CHECK(brandes[v] == doctest::Approx(oracle_bc[v]).epsilon(1e-9));
  }
}

TEST_CASE("pagerank and betweenness are permutation equivariant") {
  auto g = random_graph(9, 16, 77);
  auto adj = undirected(g);
  auto pr = centrality::pagerank(adj, {0.85, 1e-12, 1000}).scores;
  auto bc = centrality::betweenness(adj);

  // Relabel nodes through a fixed permutation and recompute.
  std::vector<std::uint32_t> perm = {3, 7, 1, 0, 8, 5, 2, 6, 4};
  kg::KnowledgeGraph permuted;
  for (std::size_t v = 0; v < 9; ++v) permuted.add_node("p" + std::to_string(v));
  auto rel = permuted.add_relation("rel");
  for (const auto& e : g.edges()) permuted.add_edge(perm[e.src], rel, perm[e.dst], e.weight);
  auto padj = undirected(permuted);
  auto ppr = centrality::pagerank(padj, {0.85, 1e-12, 1000}).scores;
  auto pbc = centrality::betweenness(padj);
  for (std::size_t v = 0; v < 9; ++v) {
    CHECK(ppr[perm[v]] == doctest::Approx(pr[v]).epsilon(1e-9));
    CHECK(pbc[perm[v]] == doctest::Approx(bc[v]).epsilon(1e-9));
  }
}

TEST_CASE("betweenness normalization divides by the pair count") {
  auto adj = undirected(testutil::make_graph(3, {{0u, 1u}, {1u, 2u}}));
  auto bc = centrality::betweenness(adj, true);
  CHECK(bc[1] == doctest::Approx(1.0));  // (n-1)(n-2)/2 = 1 for n = 3
  auto adj5 = undirected(testutil::make_graph(5, {{0u, 1u}, {1u, 2u}, {2u, 3u}, {3u, 4u}}));
  auto bc5 = centrality::betweenness(adj5, true);
  auto raw5 = centrality::betweenness(adj5, false);
  CHECK(bc5[2] == doctest::Approx(raw5[2] / 6.0));
}

TEST_CASE("centrality_vector assembles and normalizes gamma") {
  SUBCASE("triangle rows are identical (vertex-transitive)") {
    auto g = testutil::make_graph(3, {{0u, 1u}, {1u, 2u}, {2u, 0u}});
    auto cv = centrality::centrality_vector(g);
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(cv.values(0, c) == doctest::Approx(cv.values(1, c)));
      CHECK(cv.values(1, c) == doctest::Approx(cv.values(2, c)));
    }
  }
  SUBCASE("normalized columns reach 0 and 1 when nonconstant") {
    auto g = testutil::make_graph(5, {{0u, 1u}, {0u, 2u}, {0u, 3u}, {0u, 4u}});
    auto cv = centrality::centrality_vector(g);
    for (std::size_t c = 0; c < 3; ++c) {
      double lo = 1e9, hi = -1e9;
      for (std::size_t v = 0; v < 5; ++v) {
        lo = std::min(lo, cv.values(v, c));
        hi = std::max(hi, cv.values(v, c));
      }
      CHECK(lo == doctest::Approx(0.0));
      CHECK(hi == doctest::Approx(1.0));
    }
  }
  SUBCASE("star hub dominates leaves in all three components") {
    auto g = testutil::make_graph(5, {{0u, 1u}, {0u, 2u}, {0u, 3u}, {0u, 4u}});
    centrality::CentralityConfig cfg;
    cfg.minmax_normalize = false;
    auto cv = centrality::centrality_vector(g, cfg);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t leaf = 1; leaf < 5; ++leaf)
        CHECK(cv.values(0, c) > cv.values(leaf, c));
  }
  SUBCASE("all entries finite") {
    auto g = random_graph(12, 20, 5);
    auto cv = centrality::centrality_vector(g);
    CHECK(cv.values.all_finite());
  }
}
