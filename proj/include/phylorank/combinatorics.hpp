#pragma once

#include <cstddef>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <vector>

#include "phylorank/exact.hpp"

namespace phylorank {

namespace detail {

// Pascal-triangle cache. Rows are filled once under an exclusive lock and
// never mutated afterwards, so concurrent readers only need the shared lock.
class BinomialCache {
 public:
  BigCount get(std::size_t n, std::size_t k) {
    {
      std::shared_lock lock(mutex_);
      if (n < rows_.size()) return rows_[n][k];
    }
    std::unique_lock lock(mutex_);
    while (rows_.size() <= n) {
      const std::size_t m = rows_.size();
      std::vector<BigCount> row(m + 1);
      row[0] = 1;
      row[m] = 1;
      for (std::size_t j = 1; j < m; ++j) row[j] = rows_[m - 1][j - 1] + rows_[m - 1][j];
      rows_.push_back(std::move(row));
    }
    return rows_[n][k];
  }

  static BinomialCache& instance() {
    static BinomialCache cache;
    return cache;
  }

 private:
  std::shared_mutex mutex_;
  std::vector<std::vector<BigCount>> rows_{{BigCount(1)}};
};

// Prefix sums of ln k, grown on demand; shared by all log-factorial callers.
class LogFactorialCache {
 public:
  double get(std::size_t n) {
    {
      std::shared_lock lock(mutex_);
      if (n < sums_.size()) return sums_[n];
    }
    std::unique_lock lock(mutex_);
    while (sums_.size() <= n) {
      const std::size_t k = sums_.size();
      sums_.push_back(sums_.back() + std::log(static_cast<double>(k)));
    }
    return sums_[n];
  }

  static LogFactorialCache& instance() {
    static LogFactorialCache cache;
    return cache;
  }

 private:
  std::shared_mutex mutex_;
  std::vector<double> sums_{0.0};
};

}  // namespace detail

// n choose k; 0 when k > n. Constant time after the table row exists.
inline BigCount binom(std::size_t n, std::size_t k) {
  if (k > n) return BigCount(0);
  return detail::BinomialCache::instance().get(n, k);
}

inline BigCount factorial(std::size_t n) {
  BigCount f = 1;
  for (std::size_t k = 2; k <= n; ++k) f *= k;
  return f;
}

// (2n-3)!! = (2n-3)(2n-5)...3*1; the number of rooted binary labeled
// tree shapes on n leaves. Defined for n >= 2, with value 1 at n = 2.
inline BigCount double_factorial_odd(long n) {
  if (n < 2) throw std::invalid_argument("double_factorial_odd: n must be >= 2");
  BigCount f = 1;
  for (long m = 2 * n - 3; m >= 3; m -= 2) f *= m;
  return f;
}

inline BigCount catalan(std::size_t n) {
  return binom(2 * n, n) / BigCount(n + 1);
}

// ln n! by exact summation of ln k (no Stirling approximation).
inline double log_factorial(std::size_t n) {
  return detail::LogFactorialCache::instance().get(n);
}

inline double log_catalan(std::size_t n) {
  return log_factorial(2 * n) - 2.0 * log_factorial(n) -
         std::log(static_cast<double>(n + 1));
}

// ln (2n-3)!! via (2n-3)!! = (2n-2)! / (2^{n-1} (n-1)!).
inline double log_double_factorial_odd(long n) {
  if (n < 2) throw std::invalid_argument("log_double_factorial_odd: n must be >= 2");
  const auto m = static_cast<std::size_t>(n);
  return log_factorial(2 * m - 2) - static_cast<double>(m - 1) * std::log(2.0) -
         log_factorial(m - 1);
}

// Sum_{k=a}^{b} 1/k; zero for an empty range.
inline double harmonic_partial(long a, long b) {
  double s = 0.0;
  for (long k = a; k <= b; ++k) s += 1.0 / static_cast<double>(k);
  return s;
}

}  // namespace phylorank
