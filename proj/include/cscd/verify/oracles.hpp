#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "cscd/numeric.hpp"
#include "cscd/verify/exact.hpp"

namespace cscd::verify {

/// Direct Bayes sum over change times for one stream:
///   sum_{s<t} theta (1-theta)^s prod_{r=s+1..t} L_r
///   / (same + (1-theta)^t)
/// with log_lrs[r-1] = log L_r. Returns W_t.
inline double brute_force_posterior(double theta, std::span<const double> log_lrs) {
  const std::size_t t = log_lrs.size();
  std::vector<double> changed;
  for (std::size_t s = 0; s < t; ++s) {
    double l = std::log(theta) + static_cast<double>(s) * std::log1p(-theta);
    for (std::size_t r = s; r < t; ++r) l += log_lrs[r];
    changed.push_back(l);
  }
  const double num = log_sum_exp(changed);
  if (num == -kInf) return 0.0;
  changed.push_back(static_cast<double>(t) * std::log1p(-theta));
  return std::exp(num - log_sum_exp(changed));
}

/// Largest |S| over all subsets S of w with mean(w_S) <= alpha; the empty set
/// is always feasible.
inline std::size_t brute_force_subset(std::span<const double> w, double alpha) {
  if (w.size() > 20) throw std::invalid_argument("brute_force_subset is capped at 20 entries");
  std::size_t best = 0;
  std::vector<double> chosen;
  for (std::uint32_t mask = 1; mask < (1u << w.size()); ++mask) {
    const auto size = static_cast<std::size_t>(__builtin_popcount(mask));
    if (size <= best) continue;
    chosen.clear();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (mask & (1u << i)) chosen.push_back(w[i]);
    }
    if (mean_at_most(chosen, alpha)) best = size;
  }
  return best;
}

/// Completely dependent model: P(tau_0 < t | all K streams through t) by direct
/// summation, llr[k][s] = log-LR of stream k at time s+1.
inline double brute_force_dependent(double theta, const std::vector<std::vector<double>>& llr) {
  const std::size_t t = llr.front().size();
  std::vector<double> terms;
  for (std::size_t s = 0; s < t; ++s) {
    double l = std::log(theta) + static_cast<double>(s) * std::log1p(-theta);
    for (const auto& row : llr) {
      for (std::size_t r = s; r < t; ++r) l += row[r];
    }
    terms.push_back(l);
  }
  const double num = log_sum_exp(terms);
  terms.push_back(static_cast<double>(t) * std::log1p(-theta));
  return std::exp(num - log_sum_exp(terms));
}

/// Partially dependent model by full joint enumeration over tau_0 in {0..t-1}
/// (plus the tau_0 >= t tail) and over which streams participate.
inline std::vector<double> enumerate_partial_dep(double theta, double eta,
                                                 const std::vector<std::vector<double>>& llr) {
  const std::size_t k = llr.size();
  const std::size_t t = llr.front().size();
  if (k > 16) throw std::invalid_argument("enumeration capped at 16 streams");
  std::vector<double> post(k, 0.0);
  double total = 0.0;
  for (std::size_t s = 0; s <= t; ++s) {
    const bool in_tail = s == t;
    const double prior = in_tail ? std::pow(1.0 - theta, static_cast<double>(t))
                                 : theta * std::pow(1.0 - theta, static_cast<double>(s));
    for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
      double p = prior;
      for (std::size_t i = 0; i < k; ++i) {
        const bool participates = mask & (1u << i);
        p *= participates ? eta : 1.0 - eta;
        if (participates && !in_tail) {
          double l = 0.0;
          for (std::size_t r = s; r < t; ++r) l += llr[i][r];
          p *= std::exp(l);
        }
      }
      total += p;
      if (in_tail) continue;
      for (std::size_t i = 0; i < k; ++i) {
        if (mask & (1u << i)) post[i] += p;
      }
    }
  }
  for (double& v : post) v /= total;
  return post;
}

}  // namespace cscd::verify
