#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace phylorank {

// Exact arithmetic for every counting quantity. Doubles are used only for
// logs, entropies, waiting times and transition probabilities.
using BigCount = boost::multiprecision::cpp_int;     // non-negative by contract
using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;  // lowest terms, den > 0

inline BigCount numerator(const BigRational& q) {
  return boost::multiprecision::numerator(q);
}

inline BigCount denominator(const BigRational& q) {
  return boost::multiprecision::denominator(q);
}

// log of a positive big integer; works far beyond double range.
inline double log_big(const BigCount& x) {
  if (x <= 0) throw std::domain_error("log_big: argument must be positive");
  const std::size_t bits = boost::multiprecision::msb(x) + 1;
  if (bits <= 62) return std::log(static_cast<double>(x.convert_to<std::uint64_t>()));
  const std::size_t shift = bits - 62;
  const BigCount top = x >> shift;
  return std::log(static_cast<double>(top.convert_to<std::uint64_t>())) +
         static_cast<double>(shift) * std::log(2.0);
}

inline double log_rational(const BigRational& q) {
  return log_big(numerator(q)) - log_big(denominator(q));
}

// Conversion that stays accurate when numerator/denominator individually
// overflow double.
inline double to_double(const BigCount& x) {
  if (x == 0) return 0.0;
  if (x < 0) throw std::domain_error("to_double: negative BigCount");
  const std::size_t bits = boost::multiprecision::msb(x) + 1;
  if (bits <= 62) return static_cast<double>(x.convert_to<std::uint64_t>());
  const std::size_t shift = bits - 62;
  const BigCount top = x >> shift;
  return std::ldexp(static_cast<double>(top.convert_to<std::uint64_t>()),
                    static_cast<int>(shift));
}

inline double to_double(const BigRational& q) {
  const BigCount num = numerator(q);
  const BigCount den = denominator(q);
  if (num == 0) return 0.0;
  if (num < 0) return -to_double(BigRational(-num, den));
  const std::size_t nb = boost::multiprecision::msb(num) + 1;
  const std::size_t db = boost::multiprecision::msb(den) + 1;
  if (nb <= 62 && db <= 62) {
    return static_cast<double>(num.convert_to<std::uint64_t>()) /
           static_cast<double>(den.convert_to<std::uint64_t>());
  }
  const std::size_t sn = nb > 62 ? nb - 62 : 0;
  const std::size_t sd = db > 62 ? db - 62 : 0;
  const double mn = static_cast<double>((num >> sn).convert_to<std::uint64_t>());
  const double md = static_cast<double>((den >> sd).convert_to<std::uint64_t>());
  return std::ldexp(mn / md, static_cast<int>(sn) - static_cast<int>(sd));
}

inline std::string to_string(const BigCount& x) { return x.str(); }

// "num/den" rendering; integers render without the denominator.
inline std::string to_string(const BigRational& q) {
  if (denominator(q) == 1) return numerator(q).str();
  return numerator(q).str() + "/" + denominator(q).str();
}

}  // namespace phylorank
