#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "cscd/selection.hpp"
#include "cscd/verify/exact.hpp"

// Exact dynamic programming over every F_t-measurable index-set process that
// keeps the one-step-ahead LFNR at or below alpha, for tiny instances with
// binary observations. Streams are independent given their own data, so the
// joint predictive law of the next observations factorises.

namespace cscd::verify {

/// P(X = 1) before and after the change.
struct BernoulliRates {
  Rational pre_one;
  Rational post_one;
};

/// Geometric prior (model M_s): the posterior W is a sufficient statistic.
class GeometricBelief {
 public:
  using State = Rational;
  static constexpr bool exchangeable = true;

  GeometricBelief(Rational theta, BernoulliRates rates) : theta_(std::move(theta)), rates_(std::move(rates)) {}

  State initial(std::size_t) const { return Rational(0); }
  /// W = P(tau < t | data through t)
  Rational w(std::size_t, const State& s, std::int64_t) const { return s; }
  /// P(tau <= t | data through t)
  Rational changed_by(std::size_t, const State& s, std::int64_t) const { return theta_ + (1 - theta_) * s; }
  const BernoulliRates& rates(std::size_t) const { return rates_; }

  State update(std::size_t, const State& s, std::int64_t, int x) const {
    const Rational lr = x == 1 ? rates_.post_one / rates_.pre_one : (1 - rates_.post_one) / (1 - rates_.pre_one);
    const Rational odds_ratio = (1 - theta_) * (1 - s) / (theta_ + (1 - theta_) * s);
    return lr / (odds_ratio + lr);
  }

  static std::string key(const State& s) { return s.str(); }

 private:
  Rational theta_;
  BernoulliRates rates_;
};

/// Independent streams with per-stream finite-support priors; the state is the
/// normalised posterior over the support.
class TabularBelief {
 public:
  using State = std::vector<Rational>;
  static constexpr bool exchangeable = false;

  TabularBelief(std::vector<std::vector<Rational>> priors, BernoulliRates rates)
      : priors_(std::move(priors)), rates_(std::move(rates)) {}

  State initial(std::size_t k) const { return priors_.at(k); }
  Rational w(std::size_t, const State& s, std::int64_t t) const { return mass_below(s, t); }
  Rational changed_by(std::size_t, const State& s, std::int64_t t) const { return mass_below(s, t + 1); }
  const BernoulliRates& rates(std::size_t) const { return rates_; }

  State update(std::size_t, const State& s, std::int64_t t, int x) const {
    const Rational pre = x == 1 ? rates_.pre_one : 1 - rates_.pre_one;
    const Rational post = x == 1 ? rates_.post_one : 1 - rates_.post_one;
    State next(s.size());
    Rational total = 0;
    for (std::size_t m = 0; m < s.size(); ++m) {
      next[m] = s[m] * (static_cast<std::int64_t>(m) <= t ? post : pre);
      total += next[m];
    }
    for (auto& v : next) v /= total;
    return next;
  }

  static std::string key(const State& s) {
    std::string out;
    for (const auto& v : s) out += v.str() + ";";
    return out;
  }

 private:
  static Rational mass_below(const State& s, std::int64_t t) {
    Rational acc = 0;
    for (std::size_t m = 0; m < s.size() && static_cast<std::int64_t>(m) < t; ++m) acc += s[m];
    return acc;
  }

  std::vector<std::vector<Rational>> priors_;
  BernoulliRates rates_;
};

enum class Objective {
  utilization,   // U_H = sum_{s<=H} |S_s|
  run_length,    // RL_H = sum_k (T_k ^ tau_k ^ H)
  active_count,  // |S_H|, i.e. K - CD_H
};

class InstanceTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class Belief>
class PolicyDp {
 public:
  using State = typename Belief::State;

  struct Node {
    std::int64_t t = 0;
    std::vector<std::size_t> streams;  // S_t in ascending order
    std::vector<State> states;
  };

  PolicyDp(Belief belief, std::size_t k, Rational alpha, std::size_t max_nodes = 2'000'000)
      : belief_(std::move(belief)), k_(k), alpha_(std::move(alpha)), max_nodes_(max_nodes) {
    if (k == 0 || k > 8) throw InstanceTooLarge("policy DP supports 1..8 streams");
  }

  /// sup over the LFNR-controlling class of E[objective at horizon].
  Rational optimum(Objective obj, std::int64_t horizon) { return root_value(Context{obj, horizon, Policy::optimal}); }

  /// E[objective at horizon] under the adaptive one-step rule.
  Rational proposed(Objective obj, std::int64_t horizon) { return root_value(Context{obj, horizon, Policy::proposed}); }

  /// sup of E U_b over procedures that also attain sup E U_a (a < b).
  Rational optimum_given_optimal(Objective obj_b, std::int64_t horizon_b, Objective obj_a, std::int64_t horizon_a) {
    Context c{obj_b, horizon_b, Policy::restricted};
    c.restrict_obj = obj_a;
    c.restrict_horizon = horizon_a;
    return root_value(c);
  }

  /// Optimal choices of S_{t+1} at every time-t information state reachable
  /// under the optimal policy, collected as distinct index sets.
  std::vector<std::vector<std::size_t>> optimal_choices_at(Objective obj, std::int64_t horizon, std::int64_t t) {
    const Context c{obj, horizon, Policy::optimal};
    std::set<std::vector<std::size_t>> found;
    collect_choices(c, root(), t, found);
    return {found.begin(), found.end()};
  }

  Node root() const {
    Node n;
    for (std::size_t k = 0; k < k_; ++k) {
      n.streams.push_back(k);
      n.states.push_back(belief_.initial(k));
    }
    return n;
  }

  std::size_t nodes_solved() const { return solved_; }

 private:
  enum class Policy { optimal, proposed, restricted };

  struct Context {
    Objective obj;
    std::int64_t horizon;
    Policy policy;
    Objective restrict_obj = Objective::utilization;
    std::int64_t restrict_horizon = 0;

    std::string tag() const {
      return std::to_string(static_cast<int>(obj)) + "/" + std::to_string(horizon) + "/" +
             std::to_string(static_cast<int>(policy)) + "/" + std::to_string(static_cast<int>(restrict_obj)) + "/" +
             std::to_string(restrict_horizon);
    }
  };

  Rational root_value(const Context& c) {
    if (c.horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    if (c.horizon > 6) throw InstanceTooLarge("policy DP supports horizons up to 6");
    return value(c, root());
  }

  std::string node_key(const Context& c, const Node& n) const {
    std::vector<std::string> parts;
    for (std::size_t i = 0; i < n.streams.size(); ++i) {
      std::string p = Belief::key(n.states[i]);
      if (!Belief::exchangeable) p = std::to_string(n.streams[i]) + ":" + p;
      parts.push_back(std::move(p));
    }
    if (Belief::exchangeable) std::sort(parts.begin(), parts.end());
    std::string key = c.tag() + "|" + std::to_string(n.t) + "|";
    for (const auto& p : parts) key += p + "|";
    return key;
  }

  /// Candidate S_{t+1} as position masks into n.streams.
  std::vector<std::uint32_t> feasible_actions(const Node& n) const {
    const auto m = static_cast<std::uint32_t>(n.streams.size());
    if (n.t == 0) return {(1u << m) - 1};
    std::vector<Rational> w;
    for (std::size_t i = 0; i < m; ++i) w.push_back(belief_.w(n.streams[i], n.states[i], n.t));
    std::vector<std::uint32_t> out;
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
      Rational sum = 0;
      long long size = 0;
      for (std::uint32_t i = 0; i < m; ++i) {
        if (mask & (1u << i)) {
          sum += w[i];
          ++size;
        }
      }
      if (sum <= alpha_ * Rational(size)) out.push_back(mask);
    }
    return out;
  }

  std::uint32_t proposed_action(const Node& n) const {
    const auto m = static_cast<std::uint32_t>(n.streams.size());
    if (n.t == 0) return (1u << m) - 1;
    std::vector<Rational> w;
    for (std::size_t i = 0; i < m; ++i) w.push_back(belief_.w(n.streams[i], n.states[i], n.t));
    const auto kept = one_step_rule<Rational>(std::span<const std::size_t>(n.streams), std::span<const Rational>(w), alpha_);
    std::uint32_t mask = 0;
    for (std::size_t k : kept) {
      const auto pos = std::find(n.streams.begin(), n.streams.end(), k) - n.streams.begin();
      mask |= 1u << pos;
    }
    return mask;
  }

  Rational reward(const Context& c, const Node& n, std::uint32_t mask) const {
    Rational r = 0;
    long long size = 0;
    for (std::size_t i = 0; i < n.streams.size(); ++i) {
      if (!(mask & (1u << i))) continue;
      ++size;
      if (c.obj == Objective::run_length) r += 1 - belief_.changed_by(n.streams[i], n.states[i], n.t);
    }
    switch (c.obj) {
      case Objective::utilization: return Rational(size);
      case Objective::run_length: return r;
      case Objective::active_count: return n.t + 1 == c.horizon ? Rational(size) : Rational(0);
    }
    return r;
  }

  /// Reward of choosing `mask` at node n plus the expected optimal continuation.
  Rational action_value(const Context& c, const Node& n, std::uint32_t mask) {
    Rational q = reward(c, n, mask);
    if (n.t + 1 >= c.horizon) return q;
    Node child;
    child.t = n.t + 1;
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < n.streams.size(); ++i) {
      if (mask & (1u << i)) pos.push_back(i);
    }
    child.streams.resize(pos.size());
    child.states.resize(pos.size());
    std::vector<std::array<State, 2>> next(pos.size());
    std::vector<std::array<Rational, 2>> prob(pos.size());
    for (std::size_t j = 0; j < pos.size(); ++j) {
      const std::size_t k = n.streams[pos[j]];
      const State& s = n.states[pos[j]];
      const Rational cb = belief_.changed_by(k, s, n.t);
      const auto& r = belief_.rates(k);
      prob[j][1] = cb * r.post_one + (1 - cb) * r.pre_one;
      prob[j][0] = 1 - prob[j][1];
      next[j][0] = belief_.update(k, s, n.t, 0);
      next[j][1] = belief_.update(k, s, n.t, 1);
      child.streams[j] = k;
    }
    Rational expectation = 0;
    for (std::uint32_t x = 0; x < (1u << pos.size()); ++x) {
      Rational p = 1;
      for (std::size_t j = 0; j < pos.size(); ++j) {
        const int bit = (x >> j) & 1u;
        p *= prob[j][bit];
        child.states[j] = next[j][bit];
      }
      if (p == 0) continue;
      expectation += p * value(c, child);
    }
    return q + expectation;
  }

  std::vector<std::uint32_t> allowed_actions(const Context& c, const Node& n) {
    if (c.policy == Policy::proposed) return {proposed_action(n)};
    auto actions = feasible_actions(n);
    if (c.policy == Policy::restricted && n.t < c.restrict_horizon) {
      const Context outer{c.restrict_obj, c.restrict_horizon, Policy::optimal};
      actions = argmax_actions(outer, n, actions);
    }
    return actions;
  }

  std::vector<std::uint32_t> argmax_actions(const Context& c, const Node& n, const std::vector<std::uint32_t>& actions) {
    std::vector<Rational> q;
    for (auto a : actions) q.push_back(action_value(c, n, a));
    const Rational best = *std::max_element(q.begin(), q.end());
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < actions.size(); ++i) {
      if (q[i] == best) out.push_back(actions[i]);
    }
    return out;
  }

  Rational value(const Context& c, const Node& n) {
    if (n.t >= c.horizon) return 0;
    const std::string key = node_key(c, n);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    if (++solved_ > max_nodes_) throw InstanceTooLarge("history tree exceeds the node budget");
    std::optional<Rational> best;
    for (auto a : allowed_actions(c, n)) {
      Rational q = action_value(c, n, a);
      if (!best || q > *best) best = std::move(q);
    }
    memo_.emplace(key, *best);
    return *best;
  }

  void collect_choices(const Context& c, const Node& n, std::int64_t t, std::set<std::vector<std::size_t>>& found) {
    const auto best = argmax_actions(c, n, feasible_actions(n));
    if (n.t == t) {
      for (auto mask : best) {
        std::vector<std::size_t> set;
        for (std::size_t i = 0; i < n.streams.size(); ++i) {
          if (mask & (1u << i)) set.push_back(n.streams[i]);
        }
        found.insert(set);
      }
      return;
    }
    for (auto mask : best) {
      Node child;
      child.t = n.t + 1;
      std::vector<std::size_t> pos;
      for (std::size_t i = 0; i < n.streams.size(); ++i) {
        if (mask & (1u << i)) pos.push_back(i);
      }
      for (std::uint32_t x = 0; x < (1u << pos.size()); ++x) {
        child.streams.clear();
        child.states.clear();
        for (std::size_t j = 0; j < pos.size(); ++j) {
          const std::size_t k = n.streams[pos[j]];
          child.streams.push_back(k);
          child.states.push_back(belief_.update(k, n.states[pos[j]], n.t, static_cast<int>((x >> j) & 1u)));
        }
        collect_choices(c, child, t, found);
      }
    }
  }

  Belief belief_;
  std::size_t k_;
  Rational alpha_;
  std::size_t max_nodes_;
  std::size_t solved_ = 0;
  std::unordered_map<std::string, Rational> memo_;
};

/// Per-time comparison of the adaptive rule against the exact optimum.
struct OptimalityRow {
  std::int64_t t = 0;
  Rational sup_utilization, proposed_utilization;
  Rational sup_run_length, proposed_run_length;
  Rational inf_detections, proposed_detections;
};

template <class Belief>
std::vector<OptimalityRow> optimality_table(const Belief& belief, std::size_t k, const Rational& alpha,
                                            std::int64_t horizon) {
  PolicyDp<Belief> dp(belief, k, alpha);
  std::vector<OptimalityRow> rows;
  const Rational kk(static_cast<long long>(k));
  for (std::int64_t t = 1; t <= horizon; ++t) {
    OptimalityRow r;
    r.t = t;
    r.sup_utilization = dp.optimum(Objective::utilization, t);
    r.proposed_utilization = dp.proposed(Objective::utilization, t);
    r.sup_run_length = dp.optimum(Objective::run_length, t);
    r.proposed_run_length = dp.proposed(Objective::run_length, t);
    r.inf_detections = kk - dp.optimum(Objective::active_count, t);
    r.proposed_detections = kk - dp.proposed(Objective::active_count, t);
    rows.push_back(std::move(r));
  }
  return rows;
}

struct TinyIidInstance {
  std::size_t k = 2;
  double theta = 0.3;
  double pre_one = 0.2;
  double post_one = 0.8;
  double alpha = 0.3;
  std::int64_t horizon = 3;
};

/// Exact optimality table for a small model M_s instance with Bernoulli data.
inline std::vector<OptimalityRow> uniform_opt_dp(const TinyIidInstance& inst) {
  GeometricBelief belief(decimal_rational(inst.theta),
                         BernoulliRates{decimal_rational(inst.pre_one), decimal_rational(inst.post_one)});
  return optimality_table(belief, inst.k, decimal_rational(inst.alpha), inst.horizon);
}

inline TabularBelief counterexample_belief() {
  auto r = [](long long n, long long d) { return Rational(n, d); };
  std::vector<std::vector<Rational>> priors = {
      {r(1, 10), 0, 0, r(9, 10)},
      {r(4, 10), r(6, 10), 0, 0},
      {r(43, 100), r(57, 100), 0, 0},
      {r(55, 100), 0, 0, r(45, 100)},
  };
  return TabularBelief(std::move(priors), BernoulliRates{r(1, 2), r(51, 100)});
}

inline Rational counterexample_alpha() { return Rational(34, 100); }

struct CounterexampleResult {
  Rational sup_u2;
  Rational sup_u4;
  Rational proposed_u2;
  Rational proposed_u4;
  std::vector<std::vector<std::size_t>> maximizers_u2;  // optimal S_2 (1-based stream ids)
  std::vector<std::vector<std::size_t>> maximizers_u4;
  Rational sup_u4_given_optimal_u2;
  bool coexist = false;
};

/// Exact enumeration for the heterogeneous-prior counterexample.
inline CounterexampleResult counterexample_enumeration() {
  PolicyDp<TabularBelief> dp(counterexample_belief(), 4, counterexample_alpha());
  CounterexampleResult out;
  out.sup_u2 = dp.optimum(Objective::utilization, 2);
  out.sup_u4 = dp.optimum(Objective::utilization, 4);
  out.proposed_u2 = dp.proposed(Objective::utilization, 2);
  out.proposed_u4 = dp.proposed(Objective::utilization, 4);
  auto one_based = [](std::vector<std::vector<std::size_t>> sets) {
    for (auto& s : sets) {
      for (auto& k : s) ++k;
    }
    return sets;
  };
  out.maximizers_u2 = one_based(dp.optimal_choices_at(Objective::utilization, 2, 1));
  out.maximizers_u4 = one_based(dp.optimal_choices_at(Objective::utilization, 4, 1));
  out.sup_u4_given_optimal_u2 = dp.optimum_given_optimal(Objective::utilization, 4, Objective::utilization, 2);
  out.coexist = out.sup_u4_given_optimal_u2 == out.sup_u4;
  return out;
}

}  // namespace cscd::verify
