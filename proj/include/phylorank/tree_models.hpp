#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "phylorank/combinatorics.hpp"
#include "phylorank/tree.hpp"

namespace phylorank {

class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require_binary(const PhyloTree& t, const char* who) {
  if (!t.is_binary()) throw ModelError(std::string(who) + ": tree must be binary");
}

// |r(T)| = |interior|! / prod lambda_v. Valid for any rooted tree.
inline BigCount count_rank_functions(const PhyloTree& t) {
  BigCount count = factorial(t.interior_count());
  for (VertexId v : t.interior_vertices()) count /= t.interior_clade_size(v);
  return count;
}

// |RB(n)| = (2n-3)!!
inline BigCount count_trees(int n) {
  if (n < 2) throw ModelError("count_trees: need n >= 2");
  return double_factorial_odd(n);
}

// |rRB(n)| = n!(n-1)!/2^{n-1}
inline BigCount count_ranked_trees(int n) {
  if (n < 2) throw ModelError("count_ranked_trees: need n >= 2");
  BigCount num = factorial(n) * factorial(n - 1);
  BigCount den = BigCount(1) << (n - 1);
  return num / den;
}

inline BigRational prob_uniform(const PhyloTree& t) {
  require_binary(t, "prob_uniform");
  return BigRational(1, count_trees(t.leaf_count()));
}

// P_Y[T] = 2^{n-1} / (n! prod lambda_v)
inline BigRational prob_yule(const PhyloTree& t) {
  require_binary(t, "prob_yule");
  const int n = t.leaf_count();
  BigCount den = factorial(n);
  for (VertexId v : t.interior_vertices()) den *= t.interior_clade_size(v);
  return BigRational(BigCount(1) << (n - 1), den);
}

// P[T,r] = 2^{n-1} / (n!(n-1)!): uniform over ranked trees.
inline BigRational prob_ranked_yule(int n) {
  if (n < 2) throw ModelError("prob_ranked_yule: need n >= 2");
  return BigRational(BigCount(1) << (n - 1), factorial(n) * factorial(n - 1));
}

// P[r|T] = prod lambda_v / (n-1)!: rankings are uniform given the tree.
inline BigRational prob_rank_given_tree(const PhyloTree& t) {
  require_binary(t, "prob_rank_given_tree");
  BigCount num = 1;
  for (VertexId v : t.interior_vertices()) num *= t.interior_clade_size(v);
  return BigRational(num, factorial(t.leaf_count() - 1));
}

// P_Y[T]/P_U[T] = c_{n-1} / prod lambda_v
inline BigRational bayes_factor(const PhyloTree& t) {
  require_binary(t, "bayes_factor");
  BigCount den = 1;
  for (VertexId v : t.interior_vertices()) den *= t.interior_clade_size(v);
  return BigRational(catalan(t.leaf_count() - 1), den);
}

struct ModelProbabilities {
  BigRational p_uniform;
  BigRational p_yule;
  BigRational p_ranked_yule;
  BigRational p_rank_given_tree;
  BigRational bayes_factor_yule_over_uniform;
};

inline ModelProbabilities model_probabilities(const PhyloTree& t) {
  return ModelProbabilities{
      prob_uniform(t),
      prob_yule(t),
      prob_ranked_yule(t.leaf_count()),
      prob_rank_given_tree(t),
      bayes_factor(t),
  };
}

// --- exhaustive generation of RB(n), labels "1".."n" ------------------------
//
// Leaf-attachment construction: a tree on k+1 leaves arises from exactly one
// tree on k leaves by subdividing one of its 2(k-1) edges or adding a new
// root, so every tree is visited exactly once.

namespace detail {

struct GrowingTree {
  std::vector<VertexId> parent;
  std::vector<std::vector<VertexId>> children;
  std::vector<int> leaf_label;  // 0 for interior
  VertexId root = kNoVertex;

  VertexId add(VertexId p, int label) {
    parent.push_back(p);
    children.emplace_back();
    leaf_label.push_back(label);
    if (p != kNoVertex) children[p].push_back(static_cast<VertexId>(parent.size()) - 1);
    return static_cast<VertexId>(parent.size()) - 1;
  }

  PhyloTree freeze() const {
    TreeBuilder b;
    std::vector<VertexId> map(parent.size(), kNoVertex);
    map[root] = b.add_root();
    std::vector<VertexId> stack{root};
    while (!stack.empty()) {
      VertexId v = stack.back();
      stack.pop_back();
      if (leaf_label[v] != 0) b.set_label(map[v], std::to_string(leaf_label[v]));
      for (VertexId c : children[v]) {
        map[c] = b.add_child(map[v]);
        stack.push_back(c);
      }
    }
    return b.finish();
  }
};

inline void enumerate_trees_impl(GrowingTree& t, int next_label, int n,
                                 const std::function<void(const PhyloTree&)>& visit) {
  if (next_label > n) {
    visit(t.freeze());
    return;
  }
  const auto count = static_cast<VertexId>(t.parent.size());
  for (VertexId v = 0; v < count; ++v) {
    // subdivide the parent edge of v (or add a root above it) and hang the
    // next leaf off the new vertex
    const VertexId old_parent = t.parent[v];
    VertexId w = t.add(kNoVertex, 0);
    VertexId leaf = t.add(w, next_label);
    t.parent[v] = w;
    t.children[w].insert(t.children[w].begin(), v);
    const VertexId old_root = t.root;
    if (old_parent == kNoVertex) {
      t.root = w;
    } else {
      t.parent[w] = old_parent;
      for (auto& c : t.children[old_parent])
        if (c == v) c = w;
    }
    enumerate_trees_impl(t, next_label + 1, n, visit);
    // undo
    if (old_parent == kNoVertex) {
      t.root = old_root;
    } else {
      for (auto& c : t.children[old_parent])
        if (c == w) c = v;
    }
    t.parent[v] = old_parent;
    t.parent.resize(count);
    t.children.resize(count);
    t.leaf_label.resize(count);
    (void)leaf;
  }
}

}  // namespace detail

// Visits every rooted binary phylogenetic tree on leaves "1".."n" once.
inline void enumerate_trees(int n, const std::function<void(const PhyloTree&)>& visit) {
  if (n < 2) throw ModelError("enumerate_trees: need n >= 2");
  detail::GrowingTree t;
  t.root = t.add(kNoVertex, 0);
  t.add(t.root, 1);
  t.add(t.root, 2);
  detail::enumerate_trees_impl(t, 3, n, visit);
}

// --- polytomy resolution -----------------------------------------------------

// All binary resolutions of a tree whose multifurcations have <= 4 children.
// The visitor receives the resolved tree plus a map original id -> resolved id.
inline void enumerate_resolutions(
    const PhyloTree& t,
    const std::function<void(const PhyloTree&, const std::vector<VertexId>&)>& visit) {
  std::vector<VertexId> polytomies;
  for (VertexId v : t.interior_vertices()) {
    const auto degree = t.children(v).size();
    if (degree > 4) throw ModelError("unsupported polytomy degree " + std::to_string(degree));
    if (degree > 2) polytomies.push_back(v);
  }
  // Local resolutions per polytomy: binary shapes over the children, stored
  // as trees whose leaves "1".."d" index the child positions.
  std::vector<std::vector<PhyloTree>> local(polytomies.size());
  for (std::size_t k = 0; k < polytomies.size(); ++k) {
    const int d = static_cast<int>(t.children(polytomies[k]).size());
    enumerate_trees(d, [&](const PhyloTree& meta) { local[k].push_back(meta); });
  }
  std::vector<std::size_t> choice(polytomies.size(), 0);
  std::vector<int> which(t.vertex_count(), -1);
  for (std::size_t k = 0; k < polytomies.size(); ++k) which[polytomies[k]] = static_cast<int>(k);

  auto build = [&]() {
    TreeBuilder b;
    std::vector<VertexId> map(t.vertex_count(), kNoVertex);
    auto copy = [&](auto&& self, VertexId src, VertexId dst) -> void {
      map[src] = dst;
      if (!t.label(src).empty()) b.set_label(dst, t.label(src));
      if (t.is_leaf(src)) return;
      const auto& kids = t.children(src);
      if (which[src] < 0) {
        for (VertexId c : kids) {
          VertexId d = b.add_child(dst);
          if (t.has_length(c)) b.set_length(d, t.edge_length(c));
          self(self, c, d);
        }
        return;
      }
      // expand via the chosen meta tree; its leaf "i" stands for kids[i-1]
      const PhyloTree& meta = local[which[src]][choice[which[src]]];
      auto expand = [&](auto&& inner, VertexId mv, VertexId target) -> void {
        for (VertexId mc : meta.children(mv)) {
          if (meta.is_leaf(mc)) {
            VertexId c = kids[std::stoi(meta.label(mc)) - 1];
            VertexId d = b.add_child(target);
            if (t.has_length(c)) b.set_length(d, t.edge_length(c));
            self(self, c, d);
          } else {
            VertexId d = b.add_child(target);  // phantom vertex, zero-cost edge
            inner(inner, mc, d);
          }
        }
      };
      expand(expand, meta.root(), dst);
    };
    copy(copy, t.root(), b.add_root());
    visit(b.finish(), map);
  };

  // Cartesian product over per-polytomy choices.
  auto iterate = [&](auto&& self, std::size_t k) -> void {
    if (k == polytomies.size()) {
      build();
      return;
    }
    for (std::size_t i = 0; i < local[k].size(); ++i) {
      choice[k] = i;
      self(self, k + 1);
    }
  };
  iterate(iterate, 0);
}

namespace detail {

// Interior vertices a binary resolution adds inside each clade: d-2 per
// multifurcation of degree d, accumulated bottom-up. The count is the same
// for every resolution, which is what makes the estimates below exact.
inline std::vector<int> phantoms_below(const PhyloTree& t) {
  std::vector<int> below(t.vertex_count(), 0);
  const auto& pre = t.preorder();
  for (auto it = pre.rbegin(); it != pre.rend(); ++it) {
    VertexId v = *it;
    const int d = static_cast<int>(t.children(v).size());
    below[v] = d > 2 ? d - 2 : 0;
    for (VertexId c : t.children(v)) below[v] += below[c];
  }
  return below;
}

}  // namespace detail

// lambda estimate for the phantom vertices created by resolving polytomy v:
// harmonic mean, over the binary resolutions of v's children, of the product
// of the new vertices' lambda values. For a trifurcation with child interior
// counts a,b,c this is 3 / (1/(1+a+b) + 1/(1+a+c) + 1/(1+b+c)); for four
// leaf children it is 5/3.
inline BigRational polytomy_lambda_estimate(const PhyloTree& t, VertexId v) {
  if (t.is_leaf(v)) throw ModelError("polytomy_lambda_estimate: vertex is a leaf");
  const auto& kids = t.children(v);
  const int d = static_cast<int>(kids.size());
  if (d < 3 || d > 4)
    throw ModelError("unsupported polytomy degree " + std::to_string(d));
  const std::vector<int> shift = detail::phantoms_below(t);
  std::vector<int> below(d);
  for (int i = 0; i < d; ++i) below[i] = t.interior_clade_size(kids[i]) + shift[kids[i]];
  long resolutions = 0;
  BigRational inverse_sum = 0;
  enumerate_trees(d, [&](const PhyloTree& meta) {
    // lambda of each phantom vertex: itself + interior below it, where a meta
    // leaf "i" contributes the interior count of the real child i.
    BigCount phantom_product = 1;
    auto lam = [&](auto&& self, VertexId mv) -> int {
      if (meta.is_leaf(mv)) return below[std::stoi(meta.label(mv)) - 1];
      int total = 1;
      for (VertexId mc : meta.children(mv)) total += self(self, mc);
      if (mv != meta.root()) phantom_product *= total;
      return total;
    };
    lam(lam, meta.root());
    ++resolutions;
    inverse_sum += BigRational(1, phantom_product);
  });
  return BigRational(resolutions, 1) / inverse_sum;
}

// Bayes factor for trees with polytomies of degree <= 4, defined as
// sum_i P_Y[T_i] / sum_i P_U[T_i] over the binary resolutions T_i. The
// original vertices' lambda values shift identically in every resolution,
// so the ratio factorizes into c_{n-1} divided by the shifted product and
// the per-polytomy phantom estimates.
inline BigRational bayes_factor_resolved(const PhyloTree& t) {
  if (t.is_binary()) return bayes_factor(t);
  BigRational phantom = 1;
  for (VertexId v : t.interior_vertices())
    if (t.children(v).size() > 2) phantom *= polytomy_lambda_estimate(t, v);
  const std::vector<int> shift = detail::phantoms_below(t);
  BigCount shifted_product = 1;
  for (VertexId v : t.interior_vertices())
    shifted_product *= t.interior_clade_size(v) + shift[v];
  const BigRational catalan_term(catalan(t.leaf_count() - 1), shifted_product);
  return catalan_term / phantom;
}

}  // namespace phylorank
