#include <catch2/catch_amalgamated.hpp>

#include "phylorank/newick.hpp"
#include "phylorank/simulate.hpp"
#include "phylorank/tree.hpp"

#include "support/oracles.hpp"

using namespace phylorank;
using test_support::eleven_leaf_tree;

TEST_CASE("parse a cherry") {
  auto t = parse_newick("(A,B);");
  CHECK(t.leaf_count() == 2);
  CHECK(t.interior_count() == 1);
  CHECK(t.is_binary());
  CHECK_FALSE(t.has_edge_lengths());
}

TEST_CASE("parse with lengths and interior label") {
  auto t = parse_newick("((A:1.0,B:2.0)ab:0.5,C:3.0);");
  CHECK(t.leaf_count() == 3);
  CHECK(t.has_edge_lengths());
  const VertexId a = t.find_leaf("A");
  CHECK(t.edge_length(a) == 1.0);
  CHECK(t.label(t.parent(a)) == "ab");
  CHECK(t.edge_length(t.parent(a)) == 0.5);
}

TEST_CASE("parse errors carry a byte offset") {
  CHECK_THROWS_AS(parse_newick("((A,B,C);"), NewickError);
  try {
    parse_newick("((A,B,C);");
  } catch (const NewickError& e) {
    CHECK(e.offset == 8);  // the ';' where ')' was expected
  }
  CHECK_THROWS_AS(parse_newick("(A,B)"), NewickError);      // missing ';'
  CHECK_THROWS_AS(parse_newick("(A,A);"), NewickError);     // duplicate leaf label
  CHECK_THROWS_AS(parse_newick("((A),B);"), NewickError);   // out-degree-1 vertex
  CHECK_THROWS_AS(parse_newick("(A,B); junk"), NewickError);
  CHECK_THROWS_AS(parse_newick("(A:-1,B);"), NewickError);  // negative length
  CHECK_THROWS_AS(parse_newick("(A,);"), NewickError);      // unlabeled leaf
}

TEST_CASE("multifurcations parse") {
  auto t = parse_newick("(A,B,C,D);");
  CHECK_FALSE(t.is_binary());
  CHECK(t.interior_count() == 1);
  CHECK(t.children(t.root()).size() == 4);
}

TEST_CASE("canonical writer orders children by smallest leaf label") {
  CHECK(write_newick(parse_newick("(B,A);")) == "(A,B);");
  CHECK(write_newick(parse_newick("((D,C),(B,A));")) == "((A,B),(C,D));");
}

TEST_CASE("round-trip on random simulated trees") {
  RngStream rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + static_cast<int>(rng.below(12));
    auto t = sample_yule_continuous(n, rng).tree;
    auto back = parse_newick(write_newick(t));
    CHECK(topology_key(back) == topology_key(t));
    // lengths preserved to 12 significant digits
    for (VertexId v : back.preorder()) {
      if (v == back.root()) continue;
      if (back.is_leaf(v)) {
        const VertexId orig = t.find_leaf(back.label(v));
        CHECK_THAT(back.edge_length(v),
                   Catch::Matchers::WithinRel(t.edge_length(orig), 1e-11) ||
                       Catch::Matchers::WithinAbs(t.edge_length(orig), 1e-11));
      }
    }
  }
}

TEST_CASE("lambda values") {
  CHECK(lambda_values(parse_newick("(A,B);")).product == 1);
  auto bal4 = parse_newick("((A,B),(C,D));");
  auto stats = lambda_values(bal4);
  CHECK(stats.product == 3);
  std::vector<int> lams;
  for (auto& [v, lam] : stats.lambda) lams.push_back(static_cast<int>(lam));
  std::sort(lams.begin(), lams.end());
  CHECK(lams == std::vector<int>{1, 1, 3});
  // worked 11-leaf example: product 1^5 * 2 * 3 * 4 * 5 * 10 = 1200
  CHECK(lambda_values(eleven_leaf_tree()).product == 1200);
}

TEST_CASE("binary tree has n-1 interior vertices and 2(n-1) edges") {
  RngStream rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2 + static_cast<int>(rng.below(30));
    auto t = sample_yule_ranked(n, rng).tree;
    CHECK(t.interior_count() == n - 1);
    CHECK(t.vertex_count() - 1 == 2 * (n - 1));
    CHECK(t.interior_clade_size(t.root()) == t.interior_count());
  }
}

TEST_CASE("mrca and paths") {
  auto t = parse_newick("(((A,B),C),(D,E));");
  const VertexId a = t.find_leaf("A");
  const VertexId b = t.find_leaf("B");
  const VertexId d = t.find_leaf("D");
  CHECK(t.mrca(a, a) == a);
  CHECK(t.mrca(a, d) == t.root());
  CHECK(t.mrca(a, b) == t.parent(a));
  auto path = t.path_to_root(a);
  CHECK(path.front() == a);
  CHECK(path.back() == t.root());
  CHECK(path.size() == 4);
}

TEST_CASE("subtree_at extracts the clade") {
  auto t = parse_newick("(((A,B),C),(D,E));");
  auto sub = t.subtree_at(test_support::find_clade(t, {"A", "B", "C"}));
  CHECK(topology_key(sub) == "((A,B),C);");
}

TEST_CASE("prune to a label subset suppresses pass-through vertices") {
  auto t = eleven_leaf_tree();
  auto pruned = t.prune_to_leafset({"f", "h", "i", "j"});
  CHECK(pruned.leaf_count() == 4);
  CHECK(topology_key(pruned) == "((f,(h,i)),j);");
  // restriction to all labels is the identity up to isomorphism
  std::vector<std::string> all;
  for (VertexId v : t.leaves()) all.push_back(t.label(v));
  CHECK(topology_key(t.prune_to_leafset(all)) == topology_key(t));
  CHECK_THROWS(t.prune_to_leafset({"nope"}));
}

TEST_CASE("prune sums suppressed edge lengths") {
  auto t = parse_newick("(((A:1,B:2):4,C:8):16,D:32);");
  auto pruned = t.prune_to_leafset({"A", "D"});
  CHECK(topology_key(pruned) == "(A,D);");
  CHECK(pruned.edge_length(pruned.find_leaf("A")) == 1 + 4 + 16);
  CHECK(pruned.edge_length(pruned.find_leaf("D")) == 32);
  // new root walks down when only one branch survives
  auto nested = t.prune_to_leafset({"A", "B"});
  CHECK(topology_key(nested) == "(A,B);");
  CHECK(nested.edge_length(nested.find_leaf("A")) == 1);
}

TEST_CASE("tree queries are immutable reads") {
  auto t = parse_newick("((A,B),(C,D));");
  const std::string before = write_newick(t);
  (void)lambda_values(t);
  (void)t.clade_labels(t.root());
  (void)t.subtree_at(t.children(t.root())[0]);
  CHECK(write_newick(t) == before);
}
