#pragma once

#include <cmath>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <vector>

#include "phylorank/combinatorics.hpp"
#include "phylorank/tree_models.hpp"

namespace phylorank {

namespace detail {

// Prefix products b_m = prod_{j=1}^{m} (1 - 1/(2j)), shared by the S_n and
// S'_n series: the inner product telescopes to b_{n-i-1} b_i / b_{n-1}.
class HalfProductCache {
 public:
  double get(std::size_t m) {
    {
      std::shared_lock lock(mutex_);
      if (m < values_.size()) return values_[m];
    }
    std::unique_lock lock(mutex_);
    while (values_.size() <= m) {
      const auto j = static_cast<double>(values_.size());
      values_.push_back(values_.back() * (1.0 - 1.0 / (2.0 * j)));
    }
    return values_[m];
  }

  static HalfProductCache& instance() {
    static HalfProductCache cache;
    return cache;
  }

 private:
  std::shared_mutex mutex_;
  std::vector<double> values_{1.0};
};

inline void require_n3(int n, const char* who) {
  if (n < 3) throw ModelError(std::string(who) + ": need n >= 3");
}

// g(k) of the Yule entropy series.
inline double entropy_term(int k) {
  const double kd = k;
  return (1.0 - kd) / kd * std::log((kd - 1.0) / 2.0) + std::log(kd / 2.0) +
         std::log(kd + 1.0) - log_factorial(k) / kd;
}

}  // namespace detail

// Entropy of the uniform distribution over RB(n): ln (2n-3)!!.
inline double entropy_uniform(int n) {
  detail::require_n3(n, "entropy_uniform");
  return log_double_factorial_odd(n);
}

// Entropy of the Yule distribution over RB(n): n sum_{k=2}^{n-1} g(k)/(k+1).
inline double entropy_yule(int n) {
  detail::require_n3(n, "entropy_yule");
  double sum = 0.0;
  for (int k = 2; k < n; ++k) sum += detail::entropy_term(k) / (k + 1.0);
  return n * sum;
}

// d_KL(P_Y, P_U) = J_U - J_Y: expected log likelihood ratio under Yule.
inline double kl_yule_uniform(int n) {
  detail::require_n3(n, "kl_yule_uniform");
  return entropy_uniform(n) - entropy_yule(n);
}

// S_n = sum_{i=2}^{n-1} ln(i)/(i+1) * prod_{j=1}^{n-i-1} (1-1/(2j)) / (1-1/(2(j+i)))
inline double s_n(int n) {
  detail::require_n3(n, "s_n");
  auto& b = detail::HalfProductCache::instance();
  const double b_last = b.get(n - 1);
  double sum = 0.0;
  for (int i = 2; i < n; ++i)
    sum += std::log(static_cast<double>(i)) / (i + 1.0) * b.get(n - i - 1) * b.get(i) / b_last;
  return sum;
}

// Limit form S'_n with a_i = prod_{j=1}^{i} (1-1/(2j)); a lower bound of S_n.
inline double s_prime_n(int n) {
  detail::require_n3(n, "s_prime_n");
  auto& b = detail::HalfProductCache::instance();
  double sum = 0.0;
  for (int i = 2; i < n; ++i)
    sum += std::log(static_cast<double>(i)) / (i + 1.0) * b.get(i);
  return sum;
}

// d_KL(P_U, P_Y) = n S_n - ln c_{n-1}.
inline double kl_uniform_yule(int n) {
  detail::require_n3(n, "kl_uniform_yule");
  return n * s_n(n) - log_catalan(n - 1);
}

// Lower bound on the power of the log-likelihood-ratio test against the
// uniform alternative: 1 - exp{ -(n S_n - ln c_{n-1})^2 / (2n (ln n)^2) }.
inline double power_bound(int n) {
  detail::require_n3(n, "power_bound");
  const double d = kl_uniform_yule(n);
  const double logn = std::log(static_cast<double>(n));
  return 1.0 - std::exp(-d * d / (2.0 * n * logn * logn));
}

struct ModelReport {
  int n = 0;
  double log_lr = 0.0;          // ln(P_Y[T]/P_U[T])
  bool accept_yule = false;     // log_lr > 0; the boundary falls to reject
  BigRational bayes_factor;
  std::optional<double> power_bound;
  std::optional<double> kl_yu;
  std::optional<double> kl_uy;
};

// Log-likelihood-ratio test of Yule against uniform. Polytomies of degree
// <= 4 are handled through the resolution-weighted Bayes factor.
inline ModelReport lr_test(const PhyloTree& t) {
  const int n = t.leaf_count();
  if (n < 2) throw ModelError("lr_test: need at least two leaves");
  ModelReport report;
  report.n = n;
  report.bayes_factor = t.is_binary() ? bayes_factor(t) : bayes_factor_resolved(t);
  report.log_lr = log_rational(report.bayes_factor);
  report.accept_yule = report.bayes_factor > 1;  // exact comparison
  if (n >= 3) {
    report.power_bound = power_bound(n);
    report.kl_yu = kl_yule_uniform(n);
    report.kl_uy = kl_uniform_yule(n);
  }
  return report;
}

}  // namespace phylorank
