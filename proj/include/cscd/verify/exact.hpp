#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <charconv>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

namespace cscd::verify {

using Rational = boost::multiprecision::number<boost::multiprecision::cpp_rational_backend, boost::multiprecision::et_off>;

/// Exact rational value of the shortest decimal that round-trips to x
/// (0.43 -> 43/100 rather than the binary expansion of the double).
inline Rational decimal_rational(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite value has no rational form");
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific);
  if (ec != std::errc{}) throw std::runtime_error("formatting failed");
  const std::string s(buf, end);
  const auto e = s.find('e');
  std::string mantissa = s.substr(0, e);
  int exponent = std::stoi(s.substr(e + 1));
  bool negative = false;
  if (!mantissa.empty() && mantissa.front() == '-') {
    negative = true;
    mantissa.erase(0, 1);
  }
  const auto dot = mantissa.find('.');
  if (dot != std::string::npos) {
    exponent -= static_cast<int>(mantissa.size() - dot - 1);
    mantissa.erase(dot, 1);
  }
  boost::multiprecision::cpp_int num(mantissa);
  boost::multiprecision::cpp_int scale = boost::multiprecision::pow(boost::multiprecision::cpp_int(10), std::abs(exponent));
  Rational r = exponent >= 0 ? Rational(num * scale) : Rational(num, scale);
  return negative ? Rational(-r) : r;
}

/// Exact binary value of a double.
inline Rational binary_rational(double x) { return Rational(x); }

/// sum(values) <= alpha * values.size(), decided exactly. Uses a double
/// comparison away from the boundary and exact rationals near it.
inline bool mean_at_most(std::span<const double> values, double alpha) {
  long double s = 0.0L;
  for (double v : values) s += v;
  const long double bound = static_cast<long double>(alpha) * static_cast<long double>(values.size());
  if (std::fabs(static_cast<double>(s - bound)) > 1e-9) return s <= bound;
  Rational exact = 0;
  for (double v : values) exact += binary_rational(v);
  return exact <= binary_rational(alpha) * Rational(static_cast<long long>(values.size()));
}

}  // namespace cscd::verify
