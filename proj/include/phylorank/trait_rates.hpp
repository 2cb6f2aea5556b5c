#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "phylorank/states.hpp"
#include "phylorank/tree.hpp"

namespace phylorank {

class TraitError : public std::runtime_error {
 public:
  explicit TraitError(const std::string& msg) : std::runtime_error(msg) {}
};

// Two-state continuous-time Markov model: alpha -> beta with rate r_alpha,
// beta -> alpha with rate r_beta, per unit edge length.
struct RateParams {
  double r_alpha;
  double r_beta;

  void validate() const {
    if (!(r_alpha > 0.0) || !(r_beta > 0.0) || !std::isfinite(r_alpha) ||
        !std::isfinite(r_beta))
      throw TraitError("rates must be positive and finite");
  }
};

struct TransitionMatrix {
  std::array<std::array<double, 2>, 2> p;  // p[from][to]
  double operator()(TraitState from, TraitState to) const {
    return p[static_cast<int>(from)][static_cast<int>(to)];
  }
};

// Closed form of exp(R t) for the 2x2 rate matrix; no matrix exponential
// machinery needed.
inline TransitionMatrix transition_matrix(const RateParams& rates, double t) {
  rates.validate();
  if (!(t >= 0.0)) throw TraitError("transition_matrix: negative time");
  const double total = rates.r_alpha + rates.r_beta;
  const double decay = std::exp(-total * t);
  TransitionMatrix m;
  m.p[0][0] = (rates.r_beta + rates.r_alpha * decay) / total;
  m.p[0][1] = rates.r_alpha * (1.0 - decay) / total;
  m.p[1][0] = rates.r_beta * (1.0 - decay) / total;
  m.p[1][1] = (rates.r_alpha + rates.r_beta * decay) / total;
  return m;
}

// Stationary distribution pi = (r_beta, r_alpha) / (r_alpha + r_beta).
inline std::array<double, 2> stationary(const RateParams& rates) {
  rates.validate();
  const double total = rates.r_alpha + rates.r_beta;
  return {rates.r_beta / total, rates.r_alpha / total};
}

// Conditional likelihoods L_eta(v) = P[leaf states below v | s(v) = eta],
// computed bottom-up (pruning). Partial values are rescaled when they
// threaten to underflow; scale_log accumulates the removed factors per clade.
struct ConditionalLikelihoods {
  std::vector<std::array<double, 2>> lik;
  std::vector<double> scale_log;  // per vertex, cumulated over the clade

  double total(const PhyloTree& t, const RateParams& rates) const {
    const auto pi = stationary(rates);
    const VertexId r = t.root();
    return (pi[0] * lik[r][0] + pi[1] * lik[r][1]) * std::exp(scale_log[r]);
  }
  double log_total(const PhyloTree& t, const RateParams& rates) const {
    const auto pi = stationary(rates);
    const VertexId r = t.root();
    return std::log(pi[0] * lik[r][0] + pi[1] * lik[r][1]) + scale_log[r];
  }
};

namespace trait_detail {

inline void require_inputs(const PhyloTree& t, const LeafStates& chi) {
  for (VertexId v : t.leaves())
    if (!chi.by_vertex[v])
      throw TraitError("leaf '" + t.label(v) + "' has no state");
  for (VertexId v : t.preorder())
    if (v != t.root() && !t.has_length(v))
      throw TraitError("edge above " + t.describe(v) + " has no length");
}

}  // namespace trait_detail

inline ConditionalLikelihoods conditional_likelihoods(const PhyloTree& t,
                                                      const LeafStates& chi,
                                                      const RateParams& rates) {
  rates.validate();
  trait_detail::require_inputs(t, chi);
  ConditionalLikelihoods out;
  out.lik.assign(t.vertex_count(), {0.0, 0.0});
  out.scale_log.assign(t.vertex_count(), 0.0);
  const auto& pre = t.preorder();
  for (auto it = pre.rbegin(); it != pre.rend(); ++it) {
    const VertexId v = *it;
    if (t.is_leaf(v)) {
      out.lik[v][static_cast<int>(chi.at(v))] = 1.0;
      continue;
    }
    std::array<double, 2> lik{1.0, 1.0};
    double scale = 0.0;
    for (VertexId c : t.children(v)) {
      const TransitionMatrix m = transition_matrix(rates, t.edge_length(c));
      for (int eta = 0; eta < 2; ++eta)
        lik[eta] *= m.p[eta][0] * out.lik[c][0] + m.p[eta][1] * out.lik[c][1];
      scale += out.scale_log[c];
    }
    const double top = std::max(lik[0], lik[1]);
    if (top > 0.0 && top < 1e-280) {  // linear-space underflow guard
      lik[0] /= top;
      lik[1] /= top;
      scale += std::log(top);
    }
    out.lik[v] = lik;
    out.scale_log[v] = scale;
  }
  return out;
}

// Posterior distribution of the ordered state pair at the endpoints of each
// edge, P[s(parent)=g1, s(child)=g2 | chi], indexed 2*g1 + g2. Uses one
// bottom-up pass (conditional likelihoods) and one top-down pass carrying
// the probability of everything outside the clade.
inline std::vector<std::array<double, 4>> edge_state_posteriors(
    const PhyloTree& t, const LeafStates& chi, const RateParams& rates) {
  const ConditionalLikelihoods cond = conditional_likelihoods(t, chi, rates);
  const auto pi = stationary(rates);
  const int count = t.vertex_count();
  // edge_sum[v][eta] = sum_{eta'} p_{eta eta'}(l(v)) L_{eta'}(v), the factor
  // a parent in state eta sees through the edge down to v.
  std::vector<std::array<double, 2>> edge_sum(count, {0.0, 0.0});
  std::vector<TransitionMatrix> trans(count);
  for (VertexId v : t.preorder()) {
    if (v == t.root()) continue;
    trans[v] = transition_matrix(rates, t.edge_length(v));
    for (int eta = 0; eta < 2; ++eta)
      edge_sum[v][eta] =
          trans[v].p[eta][0] * cond.lik[v][0] + trans[v].p[eta][1] * cond.lik[v][1];
  }
  // outside[v][eta]: joint weight of all leaf states outside the clade of v
  // with s(v) = eta (up to scale factors, which cancel per-edge below).
  std::vector<std::array<double, 2>> outside(count, {0.0, 0.0});
  outside[t.root()] = {pi[0], pi[1]};
  std::vector<std::array<double, 4>> post(count, {0.0, 0.0, 0.0, 0.0});
  for (VertexId u : t.preorder()) {
    if (t.is_leaf(u)) continue;
    for (VertexId v : t.children(u)) {
      std::array<double, 2> above;  // outside weight seen at u, excluding v's branch
      for (int eta = 0; eta < 2; ++eta) {
        double w = outside[u][eta];
        for (VertexId sib : t.children(u))
          if (sib != v) w *= edge_sum[sib][eta];
        above[eta] = w;
      }
      for (int g = 0; g < 2; ++g)
        for (int h = 0; h < 2; ++h)
          outside[v][h] += above[g] * trans[v].p[g][h];
      std::array<double, 4> joint;
      double total = 0.0;
      for (int g = 0; g < 2; ++g)
        for (int h = 0; h < 2; ++h) {
          joint[2 * g + h] = above[g] * trans[v].p[g][h] * cond.lik[v][h];
          total += joint[2 * g + h];
        }
      if (total <= 0.0) throw TraitError("character has zero likelihood");
      for (int k = 0; k < 4; ++k) post[v][k] = joint[k] / total;
    }
  }
  return post;
}

// Single-edge variant; the edge is named by its child endpoint.
inline std::array<double, 4> edge_state_posterior(const PhyloTree& t,
                                                  const LeafStates& chi,
                                                  const RateParams& rates,
                                                  VertexId child) {
  if (child < 0 || child >= t.vertex_count() || child == t.root())
    throw TraitError("edge_state_posterior: not an edge");
  return edge_state_posteriors(t, chi, rates)[child];
}

// Psi_g = E[total length of g-edges | chi] / E[number of g-edges | chi],
// the inverse-speciation-rate proxy per ordered state pair. Undefined when
// the expected count vanishes.
struct GammaEdgeStats {
  std::vector<VertexId> edges;                    // child endpoint, preorder
  std::vector<std::array<double, 4>> posteriors;  // aligned with edges
  std::array<double, 4> numerator = {0, 0, 0, 0};
  std::array<double, 4> denominator = {0, 0, 0, 0};
  std::array<std::optional<double>, 4> psi;
};

inline GammaEdgeStats psi_statistics(const PhyloTree& t, const LeafStates& chi,
                                     const RateParams& rates) {
  const auto post = edge_state_posteriors(t, chi, rates);
  GammaEdgeStats stats;
  for (VertexId v : t.preorder()) {
    if (v == t.root()) continue;
    stats.edges.push_back(v);
    stats.posteriors.push_back(post[v]);
    for (int k = 0; k < 4; ++k) {
      stats.numerator[k] += t.edge_length(v) * post[v][k];
      stats.denominator[k] += post[v][k];
    }
  }
  for (int k = 0; k < 4; ++k)
    if (stats.denominator[k] >= 1e-300)
      stats.psi[k] = stats.numerator[k] / stats.denominator[k];
  return stats;
}

}  // namespace phylorank
