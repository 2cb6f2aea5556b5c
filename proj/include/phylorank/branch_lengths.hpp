#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phylorank/rank_inference.hpp"
#include "phylorank/tree_models.hpp"

namespace phylorank {

// Joint distribution of the ranks of the two endpoints of an interior edge
// (u parent of v), under uniform rank functions, with time measured in the
// continuous Yule model's units (speciation rate 1 per lineage).
struct JointRankEntry {
  int rank_u;
  int rank_v;
  BigRational prob;
};

// P[r(u)=i, r(v)=j] for the interior edge (u,v). Replace the clade of v by a
// leaf to get the reduced tree T_u; a rank function with r(v)=j keeps the
// first j-1 vertices of T_u in place (all of v's clade comes later), so
//
//   P[i,j]  proportional to  P_{T_u}[r(u)=i] * C(|U| + |W| - j, |W| - 1)
//
// over i < j <= |U|+1, where |U| = interior of T_u and |W| = interior of
// v's clade.
inline std::vector<JointRankEntry> joint_rank_prob(const PhyloTree& t, VertexId u,
                                                   VertexId v) {
  require_binary(t, "joint_rank_prob");
  detail::require_interior(t, u, "joint_rank_prob");
  if (v < 0 || v >= t.vertex_count() || t.parent(v) != u)
    throw ModelError("joint_rank_prob: (u,v) is not an edge");
  if (t.is_leaf(v)) throw ModelError("joint_rank_prob: v is a leaf");
  const int size_v = t.interior_clade_size(v);
  const int size_u = t.interior_count() - size_v;
  const auto pu = detail::normalize(detail::rank_dp(t, u, t.root(), v, false, nullptr));
  std::vector<JointRankEntry> entries;
  BigRational total = 0;
  for (int i = 1; i <= size_u; ++i) {
    if (pu.probs[i - 1] == 0) continue;
    for (int j = i + 1; j <= size_u + 1; ++j) {
      BigRational w = pu.probs[i - 1] * BigRational(binom(size_u + size_v - j, size_v - 1));
      if (w == 0) continue;
      entries.push_back({i, j, std::move(w)});
      total += entries.back().prob;
    }
  }
  for (auto& e : entries) e.prob /= total;
  return entries;
}

// E[X] for the interior edge (u,v): expected waiting time from the rank-i
// event to the rank-j event is sum_{k=i+1}^{j} 1/k.
inline double expected_edge_length(const PhyloTree& t, VertexId u, VertexId v) {
  double value = 0.0;
  for (const auto& e : joint_rank_prob(t, u, v))
    value += harmonic_partial(e.rank_u + 1, e.rank_v) * to_double(e.prob);
  return value;
}

// Yule-probability-weighted expectation over all binary resolutions; on a
// binary tree this is expected_edge_length. When (u,v) spans vertices that a
// resolution inserts, the per-resolution value is the path sum.
inline double expected_edge_length_weighted(const PhyloTree& t, VertexId u, VertexId v) {
  detail::require_interior(t, u, "expected_edge_length_weighted");
  if (v < 0 || v >= t.vertex_count() || t.parent(v) != u || t.is_leaf(v))
    throw ModelError("expected_edge_length_weighted: (u,v) is not an interior edge");
  if (t.is_binary()) return expected_edge_length(t, u, v);
  double numer = 0.0;
  double denom = 0.0;
  enumerate_resolutions(t, [&](const PhyloTree& res, const std::vector<VertexId>& map) {
    const double weight = to_double(prob_yule(res));
    double length = 0.0;
    for (VertexId x = map[v]; x != map[u]; x = res.parent(x))
      length += expected_edge_length(res, res.parent(x), x);
    numer += weight * length;
    denom += weight;
  });
  return numer / denom;
}

// E[depth of v] = sum_j P[r(v)=j] * sum_{k=2}^{j} 1/k; the root sits at 0.
inline std::map<VertexId, double> expected_depths(const PhyloTree& t) {
  require_binary(t, "expected_depths");
  std::map<VertexId, double> out;
  for (VertexId v : t.interior_vertices()) {
    if (v == t.root()) {
      out[v] = 0.0;
      continue;
    }
    const RankDistribution dist = rank_prob(t, v);
    double depth = 0.0;
    for (int j = 1; j <= dist.size(); ++j) {
      if (dist.probs[j - 1] == 0) continue;
      depth += to_double(dist.probs[j - 1]) * harmonic_partial(2, j);
    }
    out[v] = depth;
  }
  return out;
}

// There is no analytic estimate for pendant edges; all that is known is that
// the stretch after the last speciation is expected to be at most 1/n. The
// default leaves them undefined; the opt-in policy assigns the expected time
// from the parent's event to the final speciation plus a terminal offset.
enum class PendantPolicy { undefined, yule_tail };

struct EdgeLengthRow {
  VertexId parent;
  VertexId child;
  std::optional<double> expected_length;
};

struct EdgeLengthOptions {
  PendantPolicy pendant = PendantPolicy::undefined;
  double terminal_offset = 0.0;
};

inline double expected_pendant_length(const PhyloTree& t, VertexId parent,
                                      double terminal_offset) {
  const int n = t.leaf_count();
  const RankDistribution dist =
      t.is_binary() ? rank_prob(t, parent) : rank_prob_gen(t, parent);
  double value = terminal_offset;
  for (int j = 1; j <= dist.size(); ++j) {
    if (dist.probs[j - 1] == 0) continue;
    value += to_double(dist.probs[j - 1]) * harmonic_partial(j + 1, n - 1);
  }
  return value;
}

// Whole-tree table in preorder; interior edges always get a value, pendant
// edges according to the policy.
inline std::vector<EdgeLengthRow> expected_edge_lengths(const PhyloTree& t,
                                                        EdgeLengthOptions opts = {}) {
  std::vector<EdgeLengthRow> rows;
  for (VertexId v : t.preorder()) {
    if (v == t.root()) continue;
    EdgeLengthRow row{t.parent(v), v, std::nullopt};
    if (t.is_interior(v)) {
      row.expected_length = expected_edge_length_weighted(t, t.parent(v), v);
    } else if (opts.pendant == PendantPolicy::yule_tail) {
      row.expected_length = expected_pendant_length(t, t.parent(v), opts.terminal_offset);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace phylorank
