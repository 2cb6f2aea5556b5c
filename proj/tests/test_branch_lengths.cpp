#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "phylorank/branch_lengths.hpp"
#include "phylorank/newick.hpp"
#include "phylorank/simulate.hpp"

#include "support/oracles.hpp"

using namespace phylorank;
using test_support::RankOracle;
using test_support::caterpillar;

TEST_CASE("joint rank distribution on the balanced 4-leaf tree") {
  auto t = parse_newick("((A,B),(C,D));");
  const VertexId child = test_support::find_clade(t, {"A", "B"});
  const auto joint = joint_rank_prob(t, t.root(), child);
  REQUIRE(joint.size() == 2);
  for (const auto& e : joint) {
    CHECK(e.rank_u == 1);
    CHECK((e.rank_v == 2 || e.rank_v == 3));
    CHECK(e.prob == BigRational(1, 2));
  }
  CHECK_THAT(expected_edge_length(t, t.root(), child),
             Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-15));
}

TEST_CASE("caterpillar edges have forced ranks and waiting times") {
  auto t = caterpillar(6);
  for (VertexId v : t.interior_vertices()) {
    if (v == t.root()) continue;
    const VertexId u = t.parent(v);
    const auto joint = joint_rank_prob(t, u, v);
    REQUIRE(joint.size() == 1);
    const int k = joint.front().rank_u;
    CHECK(joint.front().rank_v == k + 1);
    CHECK(joint.front().prob == 1);
    CHECK_THAT(expected_edge_length(t, u, v),
               Catch::Matchers::WithinAbs(1.0 / (k + 1), 1e-15));
  }
}

TEST_CASE("joint distribution rejects pendant edges") {
  auto t = parse_newick("((A,B),(C,D));");
  CHECK_THROWS_AS(joint_rank_prob(t, t.parent(t.find_leaf("A")), t.find_leaf("A")),
                  ModelError);
}

TEST_CASE("joint ranks and expected lengths match enumeration") {
  for (int n = 3; n <= 8; ++n) {
    std::set<std::string> seen;
    enumerate_trees(n, [&](const PhyloTree& t) {
      if (!seen.insert(shape_key(t)).second) return;
      const RankOracle oracle(t);
      for (VertexId v : t.interior_vertices()) {
        if (v == t.root()) continue;
        const VertexId u = t.parent(v);
        const auto joint = joint_rank_prob(t, u, v);
        const auto& truth = oracle.edge_joint.at(v);
        long long covered = 0;
        for (const auto& e : joint) {
          const auto it = truth.find({e.rank_u, e.rank_v});
          const long long count = it == truth.end() ? 0 : it->second;
          REQUIRE(e.prob == BigRational(count, oracle.total));
          covered += count;
        }
        REQUIRE(covered == oracle.total);  // the support set is exhaustive
        REQUIRE_THAT(expected_edge_length(t, u, v),
                     Catch::Matchers::WithinAbs(oracle.expected_edge_length(v), 1e-12));
      }
    });
  }
}

TEST_CASE("joint marginals agree with whole-tree rank distributions") {
  RngStream rng(41);
  for (int rep = 0; rep < 15; ++rep) {
    auto t = sample_yule_ranked(4 + static_cast<int>(rng.below(6)), rng).tree;
    for (VertexId v : t.interior_vertices()) {
      if (v == t.root()) continue;
      const VertexId u = t.parent(v);
      const auto joint = joint_rank_prob(t, u, v);
      const auto pu = rank_prob(t, u);
      const auto pv = rank_prob(t, v);
      std::map<int, BigRational> mu, mv;
      for (const auto& e : joint) {
        mu[e.rank_u] += e.prob;
        mv[e.rank_v] += e.prob;
      }
      for (int i = 1; i <= pu.size(); ++i) CHECK(mu[i] == pu.prob(i));
      for (int j = 1; j <= pv.size(); ++j) CHECK(mv[j] == pv.prob(j));
    }
  }
}

TEST_CASE("expected depths telescope along interior edges") {
  auto cherry_depths = expected_depths(parse_newick("(A,B);"));
  CHECK(cherry_depths.begin()->second == 0.0);
  auto cat = caterpillar(7);
  const auto depths = expected_depths(cat);
  for (VertexId v : cat.interior_vertices()) {
    const int rank = cat.interior_count() - cat.interior_clade_size(v) + 1;
    CHECK_THAT(depths.at(v), Catch::Matchers::WithinAbs(harmonic_partial(2, rank), 1e-12));
  }
  RngStream rng(43);
  for (int rep = 0; rep < 10; ++rep) {
    auto t = sample_yule_ranked(4 + static_cast<int>(rng.below(7)), rng).tree;
    const auto d = expected_depths(t);
    for (VertexId v : t.interior_vertices()) {
      if (v == t.root()) continue;
      CHECK_THAT(d.at(v) - d.at(t.parent(v)),
                 Catch::Matchers::WithinAbs(expected_edge_length(t, t.parent(v), v), 1e-10));
    }
  }
}

TEST_CASE("weighted expectation reduces to the plain one on binary trees") {
  auto t = parse_newick("(((A,B),C),(D,E));");
  const VertexId v = test_support::find_clade(t, {"A", "B", "C"});
  CHECK(expected_edge_length_weighted(t, t.root(), v) ==
        expected_edge_length(t, t.root(), v));
}

TEST_CASE("weighted expectation over polytomy resolutions") {
  // symmetric trifurcation: all three resolutions carry equal weight
  auto tri = parse_newick("((A,B,C),(D,E));");
  const VertexId v = test_support::find_clade(tri, {"A", "B", "C"});
  double direct = 0.0;
  int count = 0;
  enumerate_resolutions(tri, [&](const PhyloTree& res, const std::vector<VertexId>& map) {
    double path = 0.0;
    for (VertexId x = map[v]; x != res.root(); x = res.parent(x))
      path += expected_edge_length(res, res.parent(x), x);
    direct += path;
    ++count;
  });
  direct /= count;
  CHECK(count == 3);
  CHECK_THAT(expected_edge_length_weighted(tri, tri.root(), v),
             Catch::Matchers::WithinAbs(direct, 1e-12));
  // 4-leaf polytomy: the two resolution shapes weigh 1/3 vs 2/3
  auto quad = parse_newick("((A,B,C,D),(E,F));");
  const VertexId q = test_support::find_clade(quad, {"A", "B", "C", "D"});
  double num = 0.0, den = 0.0;
  std::map<std::string, double> shape_weight;
  enumerate_resolutions(quad, [&](const PhyloTree& res, const std::vector<VertexId>& map) {
    const double w = to_double(prob_yule(res));
    shape_weight[shape_key(res.subtree_at(map[q]))] += w;
    double path = 0.0;
    for (VertexId x = map[q]; x != res.root(); x = res.parent(x))
      path += expected_edge_length(res, res.parent(x), x);
    num += w * path;
    den += w;
  });
  REQUIRE(shape_weight.size() == 2);
  std::vector<double> weights;
  for (auto& [key, w] : shape_weight) weights.push_back(w / den);
  std::sort(weights.begin(), weights.end());
  CHECK_THAT(weights[0], Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
  CHECK_THAT(weights[1], Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));
  CHECK_THAT(expected_edge_length_weighted(quad, quad.root(), q),
             Catch::Matchers::WithinAbs(num / den, 1e-12));
}

TEST_CASE("symmetric trifurcation resolutions have identical Yule weight") {
  auto tri = parse_newick("((A,B,C),(D,E));");
  std::set<BigRational> weights;
  enumerate_resolutions(tri, [&](const PhyloTree& res, const std::vector<VertexId>&) {
    weights.insert(prob_yule(res));
  });
  CHECK(weights.size() == 1);
}

TEST_CASE("pendant policy") {
  auto t = parse_newick("((A,B),(C,D));");
  const auto undefined_rows = expected_edge_lengths(t);
  int pendant = 0, interior = 0;
  for (const auto& row : undefined_rows) {
    if (t.is_leaf(row.child)) {
      CHECK_FALSE(row.expected_length.has_value());
      ++pendant;
    } else {
      REQUIRE(row.expected_length.has_value());
      CHECK(*row.expected_length > 0.0);
      ++interior;
    }
  }
  CHECK(pendant == 4);
  CHECK(interior == 2);
  const auto tail_rows =
      expected_edge_lengths(t, {.pendant = PendantPolicy::yule_tail, .terminal_offset = 0.0});
  for (const auto& row : tail_rows)
    if (t.is_leaf(row.child)) CHECK(row.expected_length.has_value());
  // offset shifts every pendant value by the same constant
  const auto shifted =
      expected_edge_lengths(t, {.pendant = PendantPolicy::yule_tail, .terminal_offset = 0.25});
  for (std::size_t i = 0; i < tail_rows.size(); ++i)
    if (t.is_leaf(tail_rows[i].child))
      CHECK_THAT(*shifted[i].expected_length - *tail_rows[i].expected_length,
                 Catch::Matchers::WithinAbs(0.25, 1e-15));
}

TEST_CASE("pendant tail expectation matches the simulator convention") {
  // a pendant edge runs from its parent's event to the last event; for the
  // leaf hanging off a caterpillar's root that is the whole span
  auto t = caterpillar(5);
  const VertexId leaf5 = t.find_leaf("5");  // attached at the root, rank 1
  const double expect = expected_pendant_length(t, t.parent(leaf5), 0.0);
  CHECK_THAT(expect, Catch::Matchers::WithinAbs(harmonic_partial(2, 4), 1e-12));
}
