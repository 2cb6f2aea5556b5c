#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "phylorank/exact.hpp"

namespace phylorank {

using VertexId = int;
inline constexpr VertexId kNoVertex = -1;

class TreeError : public std::runtime_error {
 public:
  explicit TreeError(const std::string& msg) : std::runtime_error(msg) {}
};

class PhyloTree;

// Mutable adjacency used while a tree is being assembled (parsing,
// simulation, resolution of polytomies). Frozen into an immutable
// PhyloTree by finish().
class TreeBuilder {
 public:
  VertexId add_root() {
    if (root_ != kNoVertex) throw TreeError("tree already has a root");
    root_ = new_vertex(kNoVertex);
    return root_;
  }

  VertexId add_child(VertexId parent) {
    check(parent);
    VertexId v = new_vertex(parent);
    children_[parent].push_back(v);
    return v;
  }

  // Splices a new vertex between v and its parent; if v is the root the
  // new vertex becomes the root. This is the edge-subdivision step every
  // growth model uses.
  VertexId insert_above(VertexId v) {
    check(v);
    VertexId w = new_vertex(parent_[v]);
    if (parent_[v] == kNoVertex) {
      root_ = w;
    } else {
      auto& sibs = children_[parent_[v]];
      *std::find(sibs.begin(), sibs.end(), v) = w;
    }
    parent_[v] = w;
    children_[w].push_back(v);
    return w;
  }

  void set_label(VertexId v, std::string label) {
    check(v);
    labels_[v] = std::move(label);
  }

  void set_length(VertexId v, double length) {
    check(v);
    if (!(length >= 0.0)) throw TreeError("edge length must be non-negative");
    lengths_[v] = length;
  }

  VertexId parent(VertexId v) const { return parent_[v]; }
  const std::vector<VertexId>& children(VertexId v) const { return children_[v]; }
  VertexId root() const { return root_; }
  int vertex_count() const { return static_cast<int>(parent_.size()); }
  bool is_leaf(VertexId v) const { return children_[v].empty(); }

  PhyloTree finish();

 private:
  friend class PhyloTree;

  VertexId new_vertex(VertexId parent) {
    parent_.push_back(parent);
    children_.emplace_back();
    labels_.emplace_back();
    lengths_.push_back(std::nullopt);
    return static_cast<VertexId>(parent_.size()) - 1;
  }

  void check(VertexId v) const {
    if (v < 0 || v >= vertex_count()) throw TreeError("vertex id out of range");
  }

  VertexId root_ = kNoVertex;
  std::vector<VertexId> parent_;
  std::vector<std::vector<VertexId>> children_;
  std::vector<std::string> labels_;
  std::vector<std::optional<double>> lengths_;
};

// Rooted tree with uniquely labeled leaves, optional interior labels and
// optional per-edge lengths (stored on the child vertex). Immutable after
// construction; all queries are read-only and safe to call concurrently.
class PhyloTree {
 public:
  int vertex_count() const { return static_cast<int>(parent_.size()); }
  VertexId root() const { return root_; }
  VertexId parent(VertexId v) const { return parent_[v]; }
  const std::vector<VertexId>& children(VertexId v) const { return children_[v]; }
  bool is_leaf(VertexId v) const { return children_[v].empty(); }
  bool is_interior(VertexId v) const { return !children_[v].empty(); }
  const std::string& label(VertexId v) const { return labels_[v]; }

  int leaf_count() const { return leaf_count_; }
  int interior_count() const { return vertex_count() - leaf_count_; }
  bool is_binary() const { return binary_; }

  // Vertices in preorder (root first); interior subset in the same order.
  const std::vector<VertexId>& preorder() const { return preorder_; }
  const std::vector<VertexId>& interior_vertices() const { return interior_; }
  const std::vector<VertexId>& leaves() const { return leaves_; }

  // lambda_v: number of interior vertices in the clade of v, v included.
  int interior_clade_size(VertexId v) const { return lambda_[v]; }
  int leaf_clade_size(VertexId v) const { return leaf_clade_[v]; }
  int depth(VertexId v) const { return depth_[v]; }

  bool has_edge_lengths() const { return all_lengths_; }
  bool has_length(VertexId v) const { return lengths_[v].has_value(); }
  double edge_length(VertexId v) const {
    if (!lengths_[v])
      throw TreeError("vertex " + describe(v) + " has no edge length");
    return *lengths_[v];
  }

  VertexId find_leaf(const std::string& label) const {
    auto it = leaf_by_label_.find(label);
    return it == leaf_by_label_.end() ? kNoVertex : it->second;
  }

  std::vector<VertexId> path_to_root(VertexId v) const {
    std::vector<VertexId> path;
    for (VertexId x = v; x != kNoVertex; x = parent_[x]) path.push_back(x);
    return path;
  }

  VertexId mrca(VertexId u, VertexId v) const {
    while (u != v) {
      if (depth_[u] >= depth_[v]) u = parent_[u];
      else v = parent_[v];
    }
    return u;
  }

  bool is_ancestor_or_self(VertexId anc, VertexId v) const {
    while (depth_[v] > depth_[anc]) v = parent_[v];
    return v == anc;
  }

  // Clade rooted at v as a standalone tree (labels and lengths kept).
  PhyloTree subtree_at(VertexId v) const {
    TreeBuilder b;
    copy_clade(b, v, b.add_root());
    return b.finish();
  }

  // Restriction to a label subset: minimal connected subgraph spanning the
  // kept leaves, degree-two vertices suppressed (their edge lengths summed),
  // rooted at the surviving minimal vertex.
  PhyloTree prune_to_leafset(const std::vector<std::string>& keep) const;

  // Sorted leaf labels below v; the canonical clade identifier.
  std::vector<std::string> clade_labels(VertexId v) const {
    std::vector<std::string> out;
    collect_leaf_labels(v, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::string describe(VertexId v) const {
    if (!labels_[v].empty()) return labels_[v];
    return "#" + std::to_string(v);
  }

 private:
  friend class TreeBuilder;

  void copy_clade(TreeBuilder& b, VertexId src, VertexId dst) const {
    if (!labels_[src].empty()) b.set_label(dst, labels_[src]);
    for (VertexId c : children_[src]) {
      VertexId d = b.add_child(dst);
      if (lengths_[c]) b.set_length(d, *lengths_[c]);
      copy_clade(b, c, d);
    }
  }

  void collect_leaf_labels(VertexId v, std::vector<std::string>& out) const {
    if (is_leaf(v)) {
      out.push_back(labels_[v]);
      return;
    }
    for (VertexId c : children_[v]) collect_leaf_labels(c, out);
  }

  VertexId root_ = kNoVertex;
  std::vector<VertexId> parent_;
  std::vector<std::vector<VertexId>> children_;
  std::vector<std::string> labels_;
  std::vector<std::optional<double>> lengths_;
  std::vector<VertexId> preorder_;
  std::vector<VertexId> interior_;
  std::vector<VertexId> leaves_;
  std::vector<int> lambda_;
  std::vector<int> leaf_clade_;
  std::vector<int> depth_;
  std::map<std::string, VertexId> leaf_by_label_;
  int leaf_count_ = 0;
  bool binary_ = false;
  bool all_lengths_ = false;
};

inline PhyloTree PhyloTree::prune_to_leafset(const std::vector<std::string>& keep) const {
  if (keep.empty()) throw TreeError("prune_to_leafset: empty label set");
  std::vector<char> kept(vertex_count(), 0);
  for (const auto& name : keep) {
    VertexId leaf = find_leaf(name);
    if (leaf == kNoVertex) throw TreeError("prune_to_leafset: unknown leaf label '" + name + "'");
    kept[leaf] = 1;
  }
  // Count of kept leaves per clade, bottom-up over the preorder reversed.
  std::vector<int> below(vertex_count(), 0);
  for (auto it = preorder_.rbegin(); it != preorder_.rend(); ++it) {
    VertexId v = *it;
    if (is_leaf(v)) below[v] = kept[v];
    else
      for (VertexId c : children_[v]) below[v] += below[c];
  }
  // New root: minimal vertex whose clade holds all kept leaves and which
  // does not pass them down a single branch.
  VertexId new_root = root_;
  const int total = below[root_];
  while (!is_leaf(new_root)) {
    VertexId carrier = kNoVertex;
    int branches = 0;
    for (VertexId c : children_[new_root])
      if (below[c] > 0) {
        ++branches;
        carrier = c;
      }
    if (branches == 1 && below[carrier] == total) new_root = carrier;
    else break;
  }
  TreeBuilder b;
  const bool with_lengths = has_edge_lengths();
  // Copy, suppressing every surviving vertex with exactly one surviving
  // child; `carry` accumulates the suppressed chain's edge lengths into the
  // vertex that finally represents it.
  auto build = [&](auto&& self, VertexId src, VertexId dst,
                   std::optional<double> carry) -> void {
    if (is_leaf(src)) {
      b.set_label(dst, labels_[src]);
      if (carry) b.set_length(dst, *carry);
      return;
    }
    std::vector<VertexId> live;
    for (VertexId c : children_[src])
      if (below[c] > 0) live.push_back(c);
    if (live.size() == 1) {  // src is suppressed
      std::optional<double> next = carry;
      if (next && with_lengths) *next += *lengths_[live[0]];
      self(self, live[0], dst, next);
      return;
    }
    if (!labels_[src].empty()) b.set_label(dst, labels_[src]);
    if (carry) b.set_length(dst, *carry);
    for (VertexId c : live)
      self(self, c, b.add_child(dst),
           with_lengths ? std::optional<double>(*lengths_[c]) : std::nullopt);
  };
  build(build, new_root, b.add_root(), std::nullopt);
  return b.finish();
}

inline PhyloTree TreeBuilder::finish() {
  if (root_ == kNoVertex) throw TreeError("empty tree");
  PhyloTree t;
  t.root_ = root_;
  t.parent_ = std::move(parent_);
  t.children_ = std::move(children_);
  t.labels_ = std::move(labels_);
  t.lengths_ = std::move(lengths_);
  const int n = t.vertex_count();
  t.lambda_.assign(n, 0);
  t.leaf_clade_.assign(n, 0);
  t.depth_.assign(n, 0);
  t.preorder_.reserve(n);
  std::vector<VertexId> stack{root_};
  while (!stack.empty()) {
    VertexId v = stack.back();
    stack.pop_back();
    t.preorder_.push_back(v);
    for (auto it = t.children_[v].rbegin(); it != t.children_[v].rend(); ++it) {
      t.depth_[*it] = t.depth_[v] + 1;
      stack.push_back(*it);
    }
  }
  if (static_cast<int>(t.preorder_.size()) != n)
    throw TreeError("tree is not connected");
  t.binary_ = true;
  t.all_lengths_ = n > 1;
  for (auto it = t.preorder_.rbegin(); it != t.preorder_.rend(); ++it) {
    VertexId v = *it;
    const auto& ch = t.children_[v];
    if (ch.empty()) {
      t.leaf_clade_[v] = 1;
      t.leaves_.push_back(v);
      if (t.labels_[v].empty()) throw TreeError("leaf without a label");
      auto [pos, inserted] = t.leaf_by_label_.emplace(t.labels_[v], v);
      if (!inserted) throw TreeError("duplicate leaf label '" + t.labels_[v] + "'");
      continue;
    }
    if (ch.size() == 1)
      throw TreeError("interior vertex of out-degree 1 (" + t.describe(v) + ")");
    if (ch.size() != 2) t.binary_ = false;
    t.interior_.push_back(v);
    t.lambda_[v] = 1;
    for (VertexId c : ch) {
      t.lambda_[v] += t.lambda_[c];
      t.leaf_clade_[v] += t.leaf_clade_[c];
    }
    if (v != root_ && !t.lengths_[v]) t.all_lengths_ = false;
  }
  for (VertexId v : t.leaves_)
    if (v != root_ && !t.lengths_[v]) t.all_lengths_ = false;
  std::reverse(t.interior_.begin(), t.interior_.end());  // preorder
  std::reverse(t.leaves_.begin(), t.leaves_.end());
  t.leaf_count_ = static_cast<int>(t.leaves_.size());
  if (t.leaf_count_ < 2) t.binary_ = false;
  return t;
}

// Interior-vertex statistics: lambda per interior vertex and the product
// that drives both ranking counts and Yule probabilities.
struct VertexStats {
  std::vector<std::pair<VertexId, BigCount>> lambda;  // preorder
  BigCount product = 1;
};

inline VertexStats lambda_values(const PhyloTree& t) {
  VertexStats stats;
  for (VertexId v : t.interior_vertices()) {
    stats.lambda.emplace_back(v, BigCount(t.interior_clade_size(v)));
    stats.product *= t.interior_clade_size(v);
  }
  return stats;
}

}  // namespace phylorank
