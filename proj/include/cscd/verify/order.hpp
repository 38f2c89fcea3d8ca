#pragma once

#include <algorithm>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cscd/verify/exact.hpp"

namespace cscd::verify {

/// Element of the space of nondecreasing probability vectors (possibly empty).
class OrderedVec {
 public:
  OrderedVec() = default;
  explicit OrderedVec(std::vector<double> values) : v_(std::move(values)) {
    for (std::size_t i = 0; i < v_.size(); ++i) {
      if (!(v_[i] >= 0.0 && v_[i] <= 1.0)) throw std::invalid_argument("entry outside [0,1]");
      if (i > 0 && v_[i] < v_[i - 1]) throw std::invalid_argument("OrderedVec entries must be nondecreasing");
    }
  }
  static OrderedVec sorted_from(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return OrderedVec(std::move(values));
  }

  std::size_t dim() const { return v_.size(); }
  bool empty() const { return v_.empty(); }
  double operator[](std::size_t i) const { return v_[i]; }
  const std::vector<double>& values() const { return v_; }
  OrderedVec prefix(std::size_t n) const { return OrderedVec(std::vector<double>(v_.begin(), v_.begin() + static_cast<std::ptrdiff_t>(n))); }

  friend bool operator==(const OrderedVec&, const OrderedVec&) = default;

  std::string str() const {
    std::ostringstream out;
    out << '(';
    for (std::size_t i = 0; i < v_.size(); ++i) out << (i ? "," : "") << v_[i];
    out << ')';
    return out.str();
  }

 private:
  std::vector<double> v_;
};

/// I_o(u) = sup{n : u_1 + .. + u_n <= alpha n}, with n = 0 always admissible.
inline std::size_t i_o(const OrderedVec& u, double alpha) {
  std::size_t best = 0;
  for (std::size_t n = 1; n <= u.dim(); ++n) {
    if (mean_at_most(std::span(u.values()).first(n), alpha)) best = n;
  }
  return best;
}

/// H_o(u): the I_o(u)-prefix of u.
inline OrderedVec h_o(const OrderedVec& u, double alpha) { return u.prefix(i_o(u, alpha)); }

/// u <= v iff dim(u) >= dim(v) and u_i <= v_i for i <= dim(v). Everything is <= the empty vector.
inline bool partial_leq(const OrderedVec& u, const OrderedVec& v) {
  if (u.dim() < v.dim()) return false;
  for (std::size_t i = 0; i < v.dim(); ++i) {
    if (u[i] > v[i]) return false;
  }
  return true;
}

/// Random element with entries concentrated near alpha so that prefix
/// feasibility is frequently decided close to the boundary.
template <class Rng>
OrderedVec random_ordered(Rng& rng, double alpha, std::size_t max_dim) {
  std::uniform_int_distribution<std::size_t> dim(0, max_dim);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> v(dim(rng));
  for (double& x : v) x = unit(rng) < 0.6 ? std::min(1.0, 3.0 * alpha * unit(rng)) : unit(rng);
  return OrderedVec::sorted_from(std::move(v));
}

/// Random u with u <= v: lower every entry of v, re-sort, then append entries
/// no smaller than the current maximum.
template <class Rng>
OrderedVec random_below(const OrderedVec& v, Rng& rng, std::size_t max_extra) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> u;
  for (std::size_t i = 0; i < v.dim(); ++i) {
    const double r = unit(rng);
    u.push_back(r < 0.3 ? v[i] : v[i] * unit(rng));
  }
  std::sort(u.begin(), u.end());
  std::uniform_int_distribution<std::size_t> extra(0, max_extra);
  const std::size_t n_extra = extra(rng);
  for (std::size_t i = 0; i < n_extra; ++i) {
    const double lo = u.empty() ? 0.0 : u.back();
    u.push_back(lo + (1.0 - lo) * unit(rng));
  }
  return OrderedVec(std::move(u));
}

struct MonotoneCheck {
  bool passed = true;
  std::size_t trials = 0;
  std::optional<std::pair<OrderedVec, OrderedVec>> counterexample;
};

/// Samples pairs u <= v and asserts H_o(u) <= H_o(v).
template <class Rng>
MonotoneCheck h_o_monotone_check(std::size_t n_trials, double alpha, Rng& rng) {
  MonotoneCheck out;
  for (std::size_t i = 0; i < n_trials; ++i) {
    const OrderedVec v = random_ordered(rng, alpha, 8);
    const OrderedVec u = random_below(v, rng, 4);
    ++out.trials;
    if (!partial_leq(h_o(u, alpha), h_o(v, alpha))) {
      out.passed = false;
      out.counterexample = std::make_pair(u, v);
      return out;
    }
  }
  return out;
}

struct OrderAxiomsCheck {
  bool passed = true;
  std::size_t trials = 0;
  std::string failure;
};

/// Reflexivity, antisymmetry on equal dimensions, and transitivity on random triples.
template <class Rng>
OrderAxiomsCheck partial_order_axioms_check(std::size_t n_trials, Rng& rng) {
  OrderAxiomsCheck out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < n_trials; ++i) {
    ++out.trials;
    const OrderedVec a = random_ordered(rng, 0.2, 6);
    const OrderedVec b = random_below(a, rng, 3);
    const OrderedVec c = random_below(b, rng, 3);
    if (!partial_leq(a, a)) {
      out.passed = false;
      out.failure = "reflexivity fails at " + a.str();
      return out;
    }
    if (!(partial_leq(c, b) && partial_leq(b, a) && partial_leq(c, a))) {
      out.passed = false;
      out.failure = "transitivity fails at " + c.str() + " <= " + b.str() + " <= " + a.str();
      return out;
    }
    // unconstrained triple: implication must hold whenever its premise does
    const OrderedVec x = random_ordered(rng, 0.2, 3);
    const OrderedVec y = random_ordered(rng, 0.2, 3);
    const OrderedVec z = random_ordered(rng, 0.2, 3);
    if (partial_leq(x, y) && partial_leq(y, z) && !partial_leq(x, z)) {
      out.passed = false;
      out.failure = "transitivity fails at " + x.str() + " <= " + y.str() + " <= " + z.str();
      return out;
    }
    // antisymmetry: equal-dimension pair, identical half of the time
    const OrderedVec p = random_ordered(rng, 0.2, 5);
    const OrderedVec q = unit(rng) < 0.5 ? p : random_below(p, rng, 0);
    if (partial_leq(p, q) && partial_leq(q, p) && !(p == q)) {
      out.passed = false;
      out.failure = "antisymmetry fails at " + p.str() + " vs " + q.str();
      return out;
    }
  }
  return out;
}

}  // namespace cscd::verify
