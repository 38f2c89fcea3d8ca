#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cscd/detector.hpp"
#include "cscd/model.hpp"
#include "cscd/numeric.hpp"

// Time indexing follows the definitions: FNP_{t+1} and LFNR_{t+1} are
// functions of S_{t+1} and of the data through t. The arguments `t` below are
// that data time.

namespace cscd {

inline double safe_ratio(double num, std::size_t den) { return den == 0 ? 0.0 : num / static_cast<double>(den); }

/// FNP_{t+1} = #{k in S_{t+1} : tau_k < t} / (|S_{t+1}| v 1).
inline double fnp(std::span<const std::size_t> active_next, std::span<const ChangePoint> tau, std::int64_t t) {
  std::size_t changed = 0;
  for (std::size_t k : active_next) changed += tau[k].before(t) ? 1 : 0;
  return safe_ratio(static_cast<double>(changed), active_next.size());
}

/// Mean of W_{k,t} over S_{t+1}.
inline double lfnr_realized(std::span<const double> w_prev, std::span<const std::size_t> active_next) {
  CompensatedSum s;
  for (std::size_t k : active_next) s.add(w_prev[k]);
  return safe_ratio(s.value(), active_next.size());
}

/// (FDP, LFDR) over the streams dropped at this step.
inline std::pair<double, double> fdp_lfdr(std::span<const double> w_prev, std::span<const std::size_t> dropped,
                                          std::span<const ChangePoint> tau, std::int64_t t) {
  std::size_t false_stops = 0;
  CompensatedSum lfdr;
  for (std::size_t k : dropped) {
    false_stops += tau[k].before(t) ? 0 : 1;
    lfdr.add(1.0 - w_prev[k]);
  }
  return {safe_ratio(static_cast<double>(false_stops), dropped.size()), safe_ratio(lfdr.value(), dropped.size())};
}

struct RunLengthSummary {
  double run_length = 0.0;   // sum_k min(T_k, tau_k, t)
  double detections = 0.0;   // K - |S_t|
  double utilization = 0.0;  // sum_{s<=t} |S_s|
};

/// RL_t, CD_t and U_t from a decision trace covering time t.
inline RunLengthSummary run_length_and_cd(const DecisionTrace& trace, std::span<const ChangePoint> tau,
                                          std::int64_t t, std::size_t k) {
  if (t < 1 || static_cast<std::size_t>(t) > trace.active_sizes.size()) {
    throw std::out_of_range("trace does not cover the requested time");
  }
  RunLengthSummary out;
  for (std::size_t i = 0; i < k; ++i) {
    std::int64_t m = std::min(trace.stop[i].time, t);
    if (!tau[i].is_infinite()) m = std::min(m, tau[i].value());
    out.run_length += static_cast<double>(m);
  }
  const auto upto = static_cast<std::size_t>(t);
  for (std::size_t s = 0; s < upto; ++s) out.utilization += static_cast<double>(trace.active_sizes[s]);
  out.detections = static_cast<double>(k - trace.active_sizes[upto - 1]);
  return out;
}

}  // namespace cscd
