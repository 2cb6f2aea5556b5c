#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace phylorank {

namespace stats_detail {

// Regularized lower incomplete gamma P(a, x) by series expansion (x < a+1)
// or continued fraction (otherwise). Standard Lentz evaluation.
inline double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace stats_detail

inline double regularized_gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("regularized_gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - stats_detail::gamma_p_series(a, x);
  return stats_detail::gamma_q_contfrac(a, x);
}

// Upper tail of the chi-square distribution with df degrees of freedom.
inline double chi_square_pvalue(double statistic, int df) {
  if (df < 1) throw std::invalid_argument("chi_square_pvalue: df < 1");
  return regularized_gamma_q(df / 2.0, statistic / 2.0);
}

// One-sample goodness of fit against equal cell probabilities.
inline double chi_square_uniform_pvalue(const std::vector<long long>& observed) {
  long long total = 0;
  for (long long c : observed) total += c;
  const double expected = static_cast<double>(total) / observed.size();
  double stat = 0.0;
  for (long long c : observed) {
    const double d = c - expected;
    stat += d * d / expected;
  }
  return chi_square_pvalue(stat, static_cast<int>(observed.size()) - 1);
}

// Two-sample chi-square homogeneity test over shared categories.
inline double chi_square_two_sample_pvalue(const std::vector<long long>& a,
                                           const std::vector<long long>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("chi_square_two_sample_pvalue: size mismatch");
  double na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i];
    nb += b[i];
  }
  const double ka = std::sqrt(nb / na);
  const double kb = std::sqrt(na / nb);
  double stat = 0.0;
  int df = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double cell = a[i] + b[i];
    if (cell == 0) continue;
    const double d = ka * a[i] - kb * b[i];
    stat += d * d / cell;
    ++df;
  }
  return chi_square_pvalue(stat, df - 1);
}

// Running mean / standard error accumulator for the Monte-Carlo checks.
struct RunningStat {
  long long count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    ++count;
    sum += x;
    sum_sq += x * x;
  }
  double mean() const { return sum / count; }
  double variance() const {
    return (sum_sq - sum * sum / count) / (count - 1);
  }
  double std_error() const { return std::sqrt(variance() / count); }
};

}  // namespace phylorank
