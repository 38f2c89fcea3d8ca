#pragma once

#include <charconv>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace cscd {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without overflow; exact for infinite arguments.
inline double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  if (a == kInf || b == kInf) return kInf;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

inline double log_sum_exp(std::span<const double> xs) {
  double hi = -kInf;
  for (double x : xs) hi = x > hi ? x : hi;
  if (hi == -kInf || hi == kInf) return hi;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

/// W = exp(l) / (1 + exp(l)), with W(-inf) = 0 and W(+inf) = 1.
inline double logistic(double log_odds) {
  if (log_odds >= 0.0) return 1.0 / (1.0 + std::exp(-log_odds));
  const double e = std::exp(log_odds);
  return e / (1.0 + e);
}

inline double log_odds_of(double w) {
  if (w <= 0.0) return -kInf;
  if (w >= 1.0) return kInf;
  return std::log(w) - std::log1p(-w);
}

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Bit-exact text form of a double (hexadecimal significand, "inf", "-inf").
inline std::string to_hex(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::hex);
  if (ec != std::errc{}) throw std::runtime_error("hexfloat formatting failed");
  return std::string(buf, end);
}

inline double from_hex(std::string_view s) {
  double x = 0.0;
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x, std::chars_format::hex);
  if (ec != std::errc{} || end != s.data() + s.size()) {
    throw std::invalid_argument("malformed hexfloat '" + std::string(s) + "'");
  }
  return x;
}

/// Shortest round-trip decimal text for CSV output.
inline std::string to_decimal(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw std::runtime_error("decimal formatting failed");
  return std::string(buf, end);
}

}  // namespace cscd
