#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "phylorank/states.hpp"
#include "phylorank/trait_rates.hpp"
#include "phylorank/tree.hpp"

namespace phylorank {

// Deterministic stream family: stream k of seed s is seeded by splitmix64
// applied to (s, k), one stream per replicate. All draws go through our own
// helpers so output is identical across platforms and library versions.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : engine_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ULL))) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = n * (UINT64_MAX / n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // uniform in [0, 1) with 53 random bits
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log1p(-unit()) / rate; }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
};

enum class SimModel { yule_ranked, yule_continuous, uniform, coalescent };

struct SimConfig {
  SimModel model = SimModel::yule_ranked;
  int n = 2;
  std::uint64_t seed = 0;
  int replicates = 1;
  std::optional<RateParams> rates;  // for state simulation

  void validate() const {
    if (n < 2) throw std::invalid_argument("simulate: need n >= 2");
    if (replicates < 1) throw std::invalid_argument("simulate: need replicates >= 1");
  }
};

struct RankedTreeSample {
  PhyloTree tree;
  std::vector<int> rank;  // by vertex id; 0 for leaves
};

namespace sim_detail {

// Random permutation of "1".."n" (Fisher-Yates).
inline std::vector<std::string> shuffled_labels(int n, RngStream& rng) {
  std::vector<std::string> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = std::to_string(i + 1);
  for (int i = n - 1; i > 0; --i)
    std::swap(labels[i], labels[static_cast<int>(rng.below(i + 1))]);
  return labels;
}

struct YuleGrowth {
  TreeBuilder builder;
  std::vector<VertexId> leaves;
  std::vector<int> rank;      // by vertex id
  std::vector<double> time;   // event time per interior vertex

  void grow(int n, RngStream& rng, const std::vector<std::string>& labels, bool timed) {
    VertexId root = builder.add_root();
    note_event(root, 1, 0.0);
    for (int k = 0; k < 2; ++k) {
      VertexId leaf = builder.add_child(root);
      builder.set_label(leaf, labels[k]);
      leaves.push_back(leaf);
      note_leaf(leaf);
    }
    double now = 0.0;
    for (int k = 2; k < n; ++k) {
      // each of the k current species is equally likely to split
      if (timed) now += rng.exponential(static_cast<double>(k));
      const auto pick = static_cast<std::size_t>(rng.below(leaves.size()));
      VertexId split = builder.insert_above(leaves[pick]);
      note_event(split, k, now);
      VertexId leaf = builder.add_child(split);
      builder.set_label(leaf, labels[k]);
      note_leaf(leaf);
      leaves.push_back(leaf);
    }
  }

  void note_event(VertexId v, int r, double t) {
    grow_to(v);
    rank[v] = r;
    time[v] = t;
  }
  void note_leaf(VertexId v) { grow_to(v); }
  void grow_to(VertexId v) {
    if (static_cast<int>(rank.size()) <= v) {
      rank.resize(v + 1, 0);
      time.resize(v + 1, 0.0);
    }
  }
};

}  // namespace sim_detail

// Yule growth process: a uniformly chosen pendant edge splits at each step.
// The marginal law is uniform on ranked binary labeled trees.
inline RankedTreeSample sample_yule_ranked(int n, RngStream& rng) {
  if (n < 2) throw std::invalid_argument("sample_yule_ranked: need n >= 2");
  sim_detail::YuleGrowth growth;
  growth.grow(n, rng, sim_detail::shuffled_labels(n, rng), false);
  return {growth.builder.finish(), std::move(growth.rank)};
}

// Continuous-time version: waiting time with k species is exponential with
// mean 1/k; pendant edges end at the final speciation event.
inline RankedTreeSample sample_yule_continuous(int n, RngStream& rng) {
  if (n < 2) throw std::invalid_argument("sample_yule_continuous: need n >= 2");
  sim_detail::YuleGrowth growth;
  growth.grow(n, rng, sim_detail::shuffled_labels(n, rng), true);
  double last = 0.0;
  for (VertexId v = 0; v < growth.builder.vertex_count(); ++v)
    if (!growth.builder.is_leaf(v)) last = std::max(last, growth.time[v]);
  for (VertexId v = 0; v < growth.builder.vertex_count(); ++v) {
    if (v == growth.builder.root()) continue;
    const double own = growth.builder.is_leaf(v) ? last : growth.time[v];
    growth.builder.set_length(v, own - growth.time[growth.builder.parent(v)]);
  }
  return {growth.builder.finish(), std::move(growth.rank)};
}

// Uniform model: attach each next leaf to an edge chosen uniformly among all
// edges including a phantom edge above the root; every labeled binary tree
// is equally likely. Labels are attached in the fixed order 1..n.
inline PhyloTree sample_uniform(int n, RngStream& rng) {
  if (n < 2) throw std::invalid_argument("sample_uniform: need n >= 2");
  TreeBuilder b;
  VertexId root = b.add_root();
  b.set_label(b.add_child(root), "1");
  b.set_label(b.add_child(root), "2");
  for (int k = 3; k <= n; ++k) {
    // vertices stand for their parent edge; the root stands for the phantom
    const auto v = static_cast<VertexId>(rng.below(b.vertex_count()));
    VertexId w = b.insert_above(v);
    b.set_label(b.add_child(w), std::to_string(k));
  }
  return b.finish();
}

// Coalescent: join a uniformly chosen pair while walking back in time. The
// m-th join of n lineages is the speciation event of rank n - m.
inline RankedTreeSample sample_coalescent(int n, RngStream& rng) {
  if (n < 2) throw std::invalid_argument("sample_coalescent: need n >= 2");
  struct Node {
    int left = -1, right = -1;
    std::string label;
    int rank = 0;
  };
  std::vector<Node> nodes(n);
  std::vector<int> active(n);
  for (int i = 0; i < n; ++i) {
    nodes[i].label = std::to_string(i + 1);
    active[i] = i;
  }
  for (int m = 1; m < n; ++m) {
    auto i = static_cast<std::size_t>(rng.below(active.size()));
    auto j = static_cast<std::size_t>(rng.below(active.size() - 1));
    if (j >= i) ++j;
    Node joint;
    joint.left = active[i];
    joint.right = active[j];
    joint.rank = n - m;
    nodes.push_back(joint);
    const int id = static_cast<int>(nodes.size()) - 1;
    if (i > j) std::swap(i, j);
    active.erase(active.begin() + static_cast<long>(j));
    active[i] = id;
  }
  TreeBuilder b;
  std::vector<int> rank;
  auto build = [&](auto&& self, int node, VertexId dst) -> void {
    if (static_cast<int>(rank.size()) <= dst) rank.resize(dst + 1, 0);
    rank[dst] = nodes[node].rank;
    if (nodes[node].left < 0) {
      b.set_label(dst, nodes[node].label);
      return;
    }
    self(self, nodes[node].left, b.add_child(dst));
    self(self, nodes[node].right, b.add_child(dst));
  };
  build(build, active[0], b.add_root());
  return {b.finish(), std::move(rank)};
}

// Joint draw of states on every vertex: root from the stationary
// distribution, then each edge through its transition matrix.
inline std::vector<TraitState> sample_states(const PhyloTree& t, const RateParams& rates,
                                             RngStream& rng) {
  rates.validate();
  if (!t.has_edge_lengths())
    throw TraitError("sample_states: tree has no edge lengths");
  const auto pi = stationary(rates);
  std::vector<TraitState> state(t.vertex_count(), TraitState::alpha);
  for (VertexId v : t.preorder()) {
    if (v == t.root()) {
      state[v] = rng.unit() < pi[0] ? TraitState::alpha : TraitState::beta;
      continue;
    }
    const TransitionMatrix m = transition_matrix(rates, t.edge_length(v));
    const double stay = m.p[static_cast<int>(state[t.parent(v)])][static_cast<int>(state[t.parent(v)])];
    state[v] = rng.unit() < stay ? state[t.parent(v)]
                                 : (state[t.parent(v)] == TraitState::alpha ? TraitState::beta
                                                                            : TraitState::alpha);
  }
  return state;
}

inline LeafStates leaf_states_of(const PhyloTree& t, const std::vector<TraitState>& all) {
  LeafStates chi;
  chi.by_vertex.assign(t.vertex_count(), std::nullopt);
  for (VertexId v : t.leaves()) chi.by_vertex[v] = all[v];
  return chi;
}

}  // namespace phylorank
