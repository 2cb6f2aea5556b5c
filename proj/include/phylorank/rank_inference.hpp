#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "phylorank/combinatorics.hpp"
#include "phylorank/tree.hpp"
#include "phylorank/tree_models.hpp"

namespace phylorank {

// Exact distribution of the rank of one interior vertex among all rank
// functions of the tree, indexed 1..|interior|.
struct RankDistribution {
  std::vector<BigRational> probs;  // probs[i-1] = P[r(v) = i]
  std::vector<BigCount> counts;    // counts[i-1] = #rank functions with r(v) = i

  BigRational prob(int rank) const { return probs.at(rank - 1); }
  BigCount count(int rank) const { return counts.at(rank - 1); }
  int size() const { return static_cast<int>(probs.size()); }
};

struct DpStats {
  long long convolution_ops = 0;
};

namespace detail {

inline void require_interior(const PhyloTree& t, VertexId v, const char* who) {
  if (v < 0 || v >= t.vertex_count())
    throw ModelError(std::string(who) + ": vertex not in tree");
  if (t.is_leaf(v)) throw ModelError(std::string(who) + ": vertex is a leaf");
}

// Interior vertices counted by the rank machinery: the clade of `v`, minus
// the clade of `collapsed` when that clade is treated as a single leaf.
inline int effective_interior(const PhyloTree& t, VertexId v, VertexId collapsed) {
  int count = t.interior_clade_size(v);
  if (collapsed != kNoVertex && t.is_ancestor_or_self(v, collapsed))
    count -= t.interior_clade_size(collapsed);
  return count;
}

// Number of rank functions of the clade at v, with an optional collapsed
// clade. Only the collapsed clade's ancestors change their lambda.
inline BigCount count_rank_functions_clade(const PhyloTree& t, VertexId v,
                                           VertexId collapsed) {
  BigCount count = factorial(effective_interior(t, v, collapsed));
  std::vector<VertexId> stack{v};
  while (!stack.empty()) {
    VertexId x = stack.back();
    stack.pop_back();
    if (t.is_leaf(x) || x == collapsed) continue;
    count /= effective_interior(t, x, collapsed);
    for (VertexId c : t.children(x)) stack.push_back(c);
  }
  return count;
}

// Path dynamic program shared by rank_count, rank_prob and rank_prob_gen.
//
// Walk the path v = x_1, ..., x_K = subroot. At step m the values for the
// clade of x_{m-1} are extended by the q_m interior vertices that hang off
// x_m outside that clade: a rank function placing v at position i arises by
// inserting j of them before v and shuffling the rest behind it,
//
//   a_m(i) = F_m * sum_j a_{m-1}(i-j-1)
//            * C(prev + q - (i-1), q - j) * C(i-2, j),
//
// where F_m is the new vertices' own rank-function count (only needed when
// exact counts are requested; it is a common factor otherwise).
//
// `collapsed` treats one clade strictly below v as a single leaf, which is
// what the joint rank distribution over an edge needs.
inline std::vector<BigCount> rank_dp(const PhyloTree& t, VertexId v, VertexId subroot,
                                     VertexId collapsed, bool with_counts,
                                     DpStats* stats) {
  const int total = effective_interior(t, subroot, collapsed);
  std::vector<BigCount> values(total + 1, BigCount(0));
  values[1] = with_counts ? count_rank_functions_clade(t, v, collapsed) : BigCount(1);
  int prev = effective_interior(t, v, collapsed);
  std::vector<BigCount> next(total + 1);
  for (VertexId x = t.parent(v), below = v; x != kNoVertex && below != subroot;
       below = x, x = t.parent(x)) {
    const int here = effective_interior(t, x, collapsed);
    const int q = here - prev - 1;
    BigCount factor = 1;
    if (with_counts) {
      if (!t.is_binary()) throw ModelError("rank_count: tree must be binary");
      for (VertexId c : t.children(x))
        if (c != below) factor *= count_rank_functions_clade(t, c, collapsed);
    }
    std::fill(next.begin(), next.end(), BigCount(0));
    for (int i = 2; i <= here; ++i) {
      BigCount acc = 0;
      const int jmax = std::min(q, i - 2);
      for (int j = 0; j <= jmax; ++j) {
        if (stats) ++stats->convolution_ops;
        const auto& prior = values[i - j - 1];
        if (prior == 0) continue;
        acc += prior * binom(prev + q - (i - 1), q - j) * binom(i - 2, j);
      }
      if (with_counts) acc *= factor;
      next[i] = std::move(acc);
    }
    values.swap(next);
    prev = here;
  }
  values.erase(values.begin());  // drop the unused rank-0 slot
  return values;
}

inline RankDistribution normalize(std::vector<BigCount> weights) {
  BigCount total = 0;
  for (const auto& w : weights) total += w;
  RankDistribution dist;
  dist.probs.reserve(weights.size());
  for (const auto& w : weights) dist.probs.emplace_back(w, total);
  return dist;
}

}  // namespace detail

// alpha_{T,v}(i): number of rank functions with r(v) = i, for i = 1..|interior|.
inline std::vector<BigCount> rank_count(const PhyloTree& t, VertexId v,
                                        DpStats* stats = nullptr) {
  require_binary(t, "rank_count");
  detail::require_interior(t, v, "rank_count");
  return detail::rank_dp(t, v, t.root(), kNoVertex, true, stats);
}

// P[r(v) = i] on a binary tree, exact. Counts are attached as well; they are
// the rank_count values.
inline RankDistribution rank_prob(const PhyloTree& t, VertexId v,
                                  DpStats* stats = nullptr) {
  require_binary(t, "rank_prob");
  detail::require_interior(t, v, "rank_prob");
  auto dist = detail::normalize(detail::rank_dp(t, v, t.root(), kNoVertex, false, stats));
  const BigCount total = count_rank_functions(t);
  dist.counts.reserve(dist.probs.size());
  for (const auto& p : dist.probs) {
    BigRational scaled = p * BigRational(total);
    if (denominator(scaled) != 1)
      throw ModelError("rank_prob: count scaling is not integral");
    dist.counts.push_back(numerator(scaled));
  }
  return dist;
}

// Generalization to arbitrary rooted trees (multifurcations allowed). On a
// binary tree it reduces to rank_prob term by term: the vertices hanging off
// each path step are then exactly the sibling clade.
inline RankDistribution rank_prob_gen(const PhyloTree& t, VertexId v,
                                      DpStats* stats = nullptr) {
  detail::require_interior(t, v, "rank_prob_gen");
  auto dist = detail::normalize(detail::rank_dp(t, v, t.root(), kNoVertex, false, stats));
  const BigCount total = count_rank_functions(t);
  dist.counts.reserve(dist.probs.size());
  for (const auto& p : dist.probs) {
    BigRational scaled = p * BigRational(total);
    if (denominator(scaled) != 1)
      throw ModelError("rank_prob_gen: count scaling is not integral");
    dist.counts.push_back(numerator(scaled));
  }
  return dist;
}

struct RankMoments {
  BigRational mean;
  BigRational variance;
};

// mu = sum i P[r(v)=i], sigma^2 = sum i^2 P[r(v)=i] - mu^2, exact.
inline RankMoments expected_rank(const PhyloTree& t, VertexId v) {
  detail::require_interior(t, v, "expected_rank");
  const RankDistribution dist =
      t.is_binary() ? rank_prob(t, v) : rank_prob_gen(t, v);
  BigRational mean = 0;
  BigRational second = 0;
  for (int i = 1; i <= dist.size(); ++i) {
    mean += BigRational(i) * dist.prob(i);
    second += BigRational(i) * BigRational(i) * dist.prob(i);
  }
  return RankMoments{mean, second - mean * mean};
}

// P[r(u) < r(v)] over uniform rank functions. Split at the most recent
// common ancestor, take the rank distributions of u and v inside their own
// clades, and count the order-preserving shuffles that put u first.
inline BigRational compare(const PhyloTree& t, VertexId u, VertexId v) {
  require_binary(t, "compare");
  detail::require_interior(t, u, "compare");
  detail::require_interior(t, v, "compare");
  if (u == v) throw ModelError("compare: vertices must be distinct");
  const VertexId anc = t.mrca(u, v);
  if (anc == u) return BigRational(1);
  if (anc == v) return BigRational(0);
  VertexId side_u = kNoVertex;
  VertexId side_v = kNoVertex;
  for (VertexId c : t.children(anc)) {
    if (t.is_ancestor_or_self(c, u)) side_u = c;
    if (t.is_ancestor_or_self(c, v)) side_v = c;
  }
  const auto pu =
      detail::normalize(detail::rank_dp(t, u, side_u, kNoVertex, false, nullptr));
  const auto pv =
      detail::normalize(detail::rank_dp(t, v, side_v, kNoVertex, false, nullptr));
  const int size_u = t.interior_clade_size(side_u);
  const int size_v = t.interior_clade_size(side_v);
  std::vector<BigRational> cum_u(size_u + 1);
  cum_u[0] = 0;
  for (int j = 1; j <= size_u; ++j) cum_u[j] = cum_u[j - 1] + pu.probs[j - 1];
  BigRational sum = 0;
  for (int i = 1; i <= size_v; ++i) {
    if (pv.probs[i - 1] == 0) continue;
    for (int j = 1; j <= size_u; ++j) {
      if (cum_u[j] == 0) continue;
      sum += pv.probs[i - 1] * BigRational(binom(i - 1 + j, j)) *
             BigRational(binom(size_v - i + size_u - j, size_u - j)) * cum_u[j];
    }
  }
  return sum / BigRational(binom(size_u + size_v, size_v));
}

// Visits every rank function once, as the vector order[0..|interior|-1] with
// order[k] = vertex of rank k+1. Linear extensions of the ancestor order.
inline void enumerate_rank_functions(
    const PhyloTree& t, const std::function<void(const std::vector<VertexId>&)>& visit) {
  const int n = t.interior_count();
  if (n > 12) throw ModelError("enumerate_rank_functions: more than 12 interior vertices");
  if (n == 0) return;
  std::vector<VertexId> ready;  // interior vertices whose parent is ranked
  ready.push_back(t.root());
  std::vector<VertexId> order;
  order.reserve(n);
  auto recurse = [&](auto&& self) -> void {
    if (static_cast<int>(order.size()) == n) {
      visit(order);
      return;
    }
    for (std::size_t k = 0; k < ready.size(); ++k) {
      VertexId v = ready[k];
      ready.erase(ready.begin() + static_cast<long>(k));
      order.push_back(v);
      std::size_t added = 0;
      for (VertexId c : t.children(v))
        if (t.is_interior(c)) {
          ready.push_back(c);
          ++added;
        }
      self(self);
      ready.resize(ready.size() - added);
      order.pop_back();
      ready.insert(ready.begin() + static_cast<long>(k), v);
    }
  };
  recurse(recurse);
}

}  // namespace phylorank
