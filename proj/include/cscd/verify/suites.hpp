#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cscd/model.hpp"
#include "cscd/posterior.hpp"
#include "cscd/selection.hpp"
#include "cscd/verify/oracles.hpp"
#include "cscd/verify/order.hpp"
#include "cscd/verify/policy_dp.hpp"

// Oracle suites behind the `verify` subcommand. Each check yields one report
// line; the suites are deterministic.

namespace cscd::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline std::string fmt(double v) {
  std::ostringstream out;
  out.precision(3);
  out << std::scientific << v;
  return out.str();
}

/// Iterated recursion against the direct Bayes sum for random Gaussian-shift paths.
inline CheckResult posterior_suite(std::size_t n_sequences = 1000, std::uint64_t seed = 11) {
  std::mt19937_64 rng(seed);
  const double thetas[] = {0.01, 0.05, 0.3};
  std::uniform_int_distribution<int> length(1, 25);
  std::normal_distribution<double> noise(0.0, 1.0);
  const ObservationModel obs(GaussianShift{1.0, 1.0});
  double worst = 0.0;
  for (std::size_t i = 0; i < n_sequences; ++i) {
    const double theta = thetas[i % 3];
    const ChangePoint tau = GeometricPrior(theta).sample(rng);
    const int t_max = length(rng);
    std::vector<double> llr;
    double l = -kInf;
    for (int t = 1; t <= t_max; ++t) {
      llr.push_back(obs.log_lr(obs.sample(tau.post_change_at(t), rng)));
      l = shiryaev_step(l, theta, llr.back());
      worst = std::max(worst, std::abs(logistic(l) - brute_force_posterior(theta, llr)));
    }
  }
  return {"posterior", worst <= 1e-10, "max_abs_diff=" + fmt(worst)};
}

/// One-step rule against exhaustive subset search, I_o, and the prefix structure.
inline CheckResult selection_suite(std::size_t n_vectors = 1000, std::uint64_t seed = 12) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim(0, 12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double alphas[] = {0.05, 0.1, 0.3, 0.5};
  std::vector<std::vector<double>> cases;
  for (std::size_t i = 0; i < n_vectors; ++i) {
    std::vector<double> w(dim(rng));
    for (double& x : w) x = unit(rng) < 0.5 ? 0.2 * unit(rng) : unit(rng);
    cases.push_back(std::move(w));
  }
  // ties, boundary equalities, and exact zeros and ones
  cases.push_back({0.05, 0.05, 0.05});
  cases.push_back({0.1, 0.0, 0.1, 0.0, 0.1});
  cases.push_back({1.0, 0.0, 1.0, 0.0});
  cases.push_back({0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3});
  cases.push_back({0.02, 0.04, 0.10, 0.30});
  cases.push_back({0.6, 0.7});
  cases.push_back({0.1, 0.2, 0.3, 0.1, 0.2, 0.3});

  std::size_t checked = 0;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const auto& w = cases[c];
    for (double alpha : alphas) {
      std::vector<std::size_t> idx(w.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::shuffle(idx.begin(), idx.end(), rng);
      const auto kept = one_step_rule(std::span<const std::size_t>(idx), std::span<const double>(w), alpha);
      const std::size_t best = brute_force_subset(w, alpha);
      const std::size_t io = i_o(OrderedVec::sorted_from(w), alpha);
      if (kept.size() != best || io != best) {
        return {"selection", false,
                "case " + std::to_string(c) + " alpha=" + fmt(alpha) + ": rule=" + std::to_string(kept.size()) +
                    " oracle=" + std::to_string(best) + " I_o=" + std::to_string(io)};
      }
      // retained set must be the first |kept| entries of (w ascending, index ascending)
      std::vector<std::pair<double, std::size_t>> sorted;
      for (std::size_t i = 0; i < w.size(); ++i) sorted.emplace_back(w[i], idx[i]);
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t i = 0; i < kept.size(); ++i) {
        if (sorted[i].second != kept[i]) return {"selection", false, "case " + std::to_string(c) + ": gap in retained prefix"};
      }
      ++checked;
    }
  }
  return {"selection", true, "instances=" + std::to_string(checked)};
}

inline std::vector<CheckResult> counterexample_suite() {
  const CounterexampleResult r = counterexample_enumeration();
  std::ostringstream line;
  line << "U2=" << r.sup_u2 << " U4=" << r.sup_u4 << " coexist=" << (r.coexist ? "true" : "false");
  const bool ok = r.sup_u2 == 7 && r.sup_u4 == 10 && !r.coexist;
  return {{"counterexample", ok, line.str()}};
}

inline std::vector<CheckResult> optimality_suite() {
  const auto rows = uniform_opt_dp(TinyIidInstance{});
  std::vector<CheckResult> out;
  for (const auto& r : rows) {
    const bool ok = r.proposed_utilization == r.sup_utilization && r.proposed_run_length == r.sup_run_length &&
                    r.proposed_detections == r.inf_detections;
    std::ostringstream d;
    d << "t=" << r.t << " EU=" << r.proposed_utilization << " supEU=" << r.sup_utilization
      << " ERL=" << r.proposed_run_length << " supERL=" << r.sup_run_length << " ECD=" << r.proposed_detections
      << " infECD=" << r.inf_detections;
    out.push_back({"optimality", ok, d.str()});
  }
  return out;
}

inline std::vector<CheckResult> order_suite(std::size_t trials = 10000, std::uint64_t seed = 13) {
  std::mt19937_64 rng(seed);
  const auto mono = h_o_monotone_check(trials, 0.05, rng);
  const auto axioms = partial_order_axioms_check(trials, rng);
  CheckResult a{"order.h_o_monotone", mono.passed, "trials=" + std::to_string(mono.trials)};
  if (mono.counterexample) a.detail += " counterexample u=" + mono.counterexample->first.str() + " v=" + mono.counterexample->second.str();
  CheckResult b{"order.axioms", axioms.passed, "trials=" + std::to_string(axioms.trials)};
  if (!axioms.passed) b.detail += " " + axioms.failure;
  return {a, b};
}

/// Aggregated dependent recursion against direct summation over tau_0.
inline CheckResult dependent_suite(std::size_t n_cases = 300, std::uint64_t seed = 14) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<int> length(1, 8);
  double worst = 0.0;
  for (std::size_t c = 0; c < n_cases; ++c) {
    const double theta = c % 2 ? 0.05 : 0.3;
    const int t = length(rng);
    std::vector<std::vector<double>> llr(3, std::vector<double>(static_cast<std::size_t>(t)));
    for (auto& row : llr) {
      for (double& v : row) v = noise(rng) - 0.5;
    }
    DependentPosteriorState s;
    for (int r = 0; r < t; ++r) {
      double sum = 0.0;
      for (const auto& row : llr) sum += row[static_cast<std::size_t>(r)];
      s = update_dependent(s, theta, sum);
    }
    worst = std::max(worst, std::abs(s.w() - brute_force_dependent(theta, llr)));
  }
  return {"dependent", worst <= 1e-10, "max_abs_diff=" + fmt(worst)};
}

/// Partially dependent posterior against full joint enumeration.
inline CheckResult partial_suite(std::size_t n_cases = 300, std::uint64_t seed = 15) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<int> length(1, 6);
  const double etas[] = {0.0, 0.25, 0.5, 1.0};
  double worst = 0.0;
  for (std::size_t c = 0; c < n_cases; ++c) {
    const double theta = c % 2 ? 0.1 : 0.3;
    const double eta = etas[c % 4];
    const int t = length(rng);
    std::vector<std::vector<double>> llr(3, std::vector<double>(static_cast<std::size_t>(t)));
    for (auto& row : llr) {
      for (double& v : row) v = noise(rng) - 0.3;
    }
    const auto got = posterior_partial_dep(GeometricPrior(theta), eta, llr);
    const auto want = enumerate_partial_dep(theta, eta, llr);
    for (std::size_t k = 0; k < got.size(); ++k) worst = std::max(worst, std::abs(got[k] - want[k]));
  }
  return {"partial", worst <= 1e-10, "max_abs_diff=" + fmt(worst)};
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"posterior", "selection", "counterexample", "optimality",
                                              "order",     "dependent", "partial",  "all"};
  return names;
}

inline std::vector<CheckResult> run_suite(const std::string& name) {
  if (name == "posterior") return {posterior_suite()};
  if (name == "selection") return {selection_suite()};
  if (name == "counterexample") return counterexample_suite();
  if (name == "optimality") return optimality_suite();
  if (name == "order") return order_suite();
  if (name == "dependent") return {dependent_suite()};
  if (name == "partial") return {partial_suite()};
  if (name == "all") {
    std::vector<CheckResult> out;
    for (const auto& n : suite_names()) {
      if (n == "all") continue;
      auto part = run_suite(n);
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  throw std::invalid_argument("unknown verification suite '" + name + "'");
}

}  // namespace cscd::verify
