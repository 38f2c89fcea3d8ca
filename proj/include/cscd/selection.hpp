#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "cscd/numeric.hpp"

namespace cscd {

/// Largest n in {0, .., size} whose prefix mean R_n = (u_1 + .. + u_n) / n
/// satisfies R_n <= alpha, with R_0 = 0. Scans every n because R_n need not
/// be monotone. Floating point inputs use compensated accumulation of the
/// excess sum(u_i - alpha) so that the boundary R_n == alpha is exact.
template <class Scalar>
std::size_t feasible_prefix_length(std::span<const Scalar> sorted, const Scalar& alpha) {
  std::size_t best = 0;
  if constexpr (std::is_floating_point_v<Scalar>) {
    CompensatedSum excess;
    for (std::size_t n = 1; n <= sorted.size(); ++n) {
      excess.add(sorted[n - 1]);
      excess.add(-alpha);
      if (excess.value() <= 0.0) best = n;
    }
  } else {
    Scalar sum = 0;
    for (std::size_t n = 1; n <= sorted.size(); ++n) {
      sum += sorted[n - 1];
      if (sum <= alpha * Scalar(n)) best = n;
    }
  }
  return best;
}

/// Ascending order of w with ties broken by the smaller stream index.
template <class Scalar>
std::vector<std::size_t> selection_order(std::span<const std::size_t> indices, std::span<const Scalar> w) {
  if (indices.size() != w.size()) throw std::invalid_argument("indices and posteriors differ in length");
  std::vector<std::size_t> order(indices.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (w[a] < w[b]) return true;
    if (w[b] < w[a]) return false;
    return indices[a] < indices[b];
  });
  return order;
}

/// One-step LFNR rule. Returns the retained stream indices in selection
/// order: the longest prefix of the sorted posteriors whose mean is <= alpha.
template <class Scalar>
std::vector<std::size_t> one_step_rule(std::span<const std::size_t> indices, std::span<const Scalar> w,
                                       const Scalar& alpha) {
  const auto order = selection_order(indices, w);
  std::vector<Scalar> sorted;
  sorted.reserve(order.size());
  for (std::size_t i : order) {
    if (!(w[i] >= Scalar(0) && w[i] <= Scalar(1))) throw std::invalid_argument("posterior outside [0,1]");
    sorted.push_back(w[i]);
  }
  const std::size_t n = feasible_prefix_length(std::span<const Scalar>(sorted), alpha);
  std::vector<std::size_t> retained;
  retained.reserve(n);
  for (std::size_t i = 0; i < n; ++i) retained.push_back(indices[order[i]]);
  return retained;
}

inline std::vector<std::size_t> one_step_rule(std::span<const std::size_t> indices, std::span<const double> w,
                                              double alpha) {
  return one_step_rule<double>(indices, w, alpha);
}

}  // namespace cscd
