#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cscd/model.hpp"
#include "cscd/numeric.hpp"

namespace cscd {

/// Per-stream posteriors W_{k,t} = P(tau_k < t | F_t), carried as log-odds.
/// W = 0 and W = 1 are the exact states -inf and +inf.
struct PosteriorState {
  std::int64_t t = 0;
  std::vector<double> log_odds;
  std::vector<std::uint8_t> frozen;

  PosteriorState() = default;
  explicit PosteriorState(std::size_t k) : log_odds(k, -kInf), frozen(k, 0) {}

  std::size_t size() const { return log_odds.size(); }
  double w(std::size_t k) const { return logistic(log_odds[k]); }
  bool is_frozen(std::size_t k) const { return frozen[k] != 0; }

  friend bool operator==(const PosteriorState&, const PosteriorState&) = default;
};

/// One step of the single-stream recursion in log-odds form:
///   odds' = L (theta + (1 - theta) W) / ((1 - theta)(1 - W))
///         = L (theta + odds) / (1 - theta).
inline double shiryaev_step(double log_odds, double theta, double log_lr) {
  if (log_odds == kInf) return kInf;
  if (log_lr == -kInf) return -kInf;
  return log_lr + log_add_exp(std::log(theta), log_odds) - std::log1p(-theta);
}

namespace detail {
inline void check_active(const PosteriorState& state, std::span<const std::size_t> active,
                         std::span<const double> log_lrs) {
  if (active.size() != log_lrs.size()) throw std::invalid_argument("observations misaligned with active set");
  for (std::size_t k : active) {
    if (k >= state.size()) throw std::invalid_argument("stream index out of range");
    if (state.is_frozen(k)) throw std::invalid_argument("stream " + std::to_string(k) + " is frozen");
  }
}
}  // namespace detail

/// Advances t and updates the listed streams; everything else is untouched.
inline void advance_w(PosteriorState& state, double theta, std::span<const double> log_lrs,
                      std::span<const std::size_t> active) {
  detail::check_active(state, active, log_lrs);
  for (std::size_t i = 0; i < active.size(); ++i) {
    state.log_odds[active[i]] = shiryaev_step(state.log_odds[active[i]], theta, log_lrs[i]);
  }
  ++state.t;
}

[[nodiscard]] inline PosteriorState update_w(PosteriorState state, double theta, std::span<const double> log_lrs,
                                             std::span<const std::size_t> active) {
  advance_w(state, theta, log_lrs, active);
  return state;
}

/// P(tau <= t | data through t) from V_t = P(tau < t | data through t).
inline double delta_from_v(double theta, double v) { return theta + (1.0 - theta) * v; }

/// Completely dependent model (every stream shares tau_0): rho_t = Q_t / (1-theta)^t.
struct DependentPosteriorState {
  std::int64_t t = 0;
  double log_rho = -kInf;

  double w() const { return logistic(log_rho); }
  friend bool operator==(const DependentPosteriorState&, const DependentPosteriorState&) = default;
};

/// rho_{t+1} = exp(sum_log_lr) (theta + rho_t) / (1 - theta), where sum_log_lr
/// aggregates the new observation of all K streams.
[[nodiscard]] inline DependentPosteriorState update_dependent(DependentPosteriorState state, double theta,
                                                              double sum_log_lr) {
  state.log_rho = shiryaev_step(state.log_rho, theta, sum_log_lr);
  ++state.t;
  return state;
}

/// Independent streams with finite-support priors. Keeps unnormalised log
/// posterior weights over each stream's support.
class TabularPosterior {
 public:
  explicit TabularPosterior(const TabularModel& model) {
    for (const auto& p : model.priors) {
      std::vector<double> lw;
      for (double m : p.masses()) lw.push_back(m > 0.0 ? std::log(m) : -kInf);
      log_weights_.push_back(std::move(lw));
    }
  }

  std::size_t size() const { return log_weights_.size(); }
  const std::vector<std::vector<double>>& log_weights() const { return log_weights_; }
  std::vector<std::vector<double>>& log_weights() { return log_weights_; }

  /// Log-odds of P(tau_k < t) under the current weights.
  double log_odds(std::size_t k, std::int64_t t) const {
    const auto& lw = log_weights_[k];
    const auto split = static_cast<std::size_t>(std::clamp<std::int64_t>(t, 0, static_cast<std::int64_t>(lw.size())));
    const double changed = log_sum_exp(std::span(lw).first(split));
    const double unchanged = log_sum_exp(std::span(lw).subspan(split));
    if (changed == -kInf) return -kInf;
    if (unchanged == -kInf) return kInf;
    return changed - unchanged;
  }

  void update(PosteriorState& state, std::span<const std::size_t> active, std::span<const double> log_lrs) {
    detail::check_active(state, active, log_lrs);
    const std::int64_t t = state.t;
    for (std::size_t i = 0; i < active.size(); ++i) {
      auto& lw = log_weights_.at(active[i]);
      // tau = m <= t makes the observation at t+1 post-change
      for (std::int64_t m = 0; m <= t && m < static_cast<std::int64_t>(lw.size()); ++m) {
        lw[static_cast<std::size_t>(m)] += log_lrs[i];
      }
    }
    ++state.t;
    for (std::size_t k : active) state.log_odds[k] = log_odds(k, state.t);
  }

 private:
  std::vector<std::vector<double>> log_weights_;
};

/// Partially dependent model with shared geometric tau_0 and per-stream
/// participation probability eta. Exact posterior by summation over tau_0 < t
/// with the tau_0 >= t tail collapsed to (1 - theta)^t.
///
/// cum_[k][m] = sum of stream-k log-LRs over times m+1 .. min(t, T_k).
class PartialDepPosterior {
 public:
  PartialDepPosterior(const PartialDepModel& model, std::size_t k)
      : theta_(model.tau0.theta()), eta_(model.eta), cum_(k) {}

  std::size_t size() const { return cum_.size(); }
  const std::vector<std::vector<double>>& cumulative() const { return cum_; }
  std::vector<std::vector<double>>& cumulative() { return cum_; }

  void update(PosteriorState& state, std::span<const std::size_t> active, std::span<const double> log_lrs) {
    detail::check_active(state, active, log_lrs);
    std::vector<double> step_llr(cum_.size(), 0.0);
    std::vector<std::uint8_t> observed(cum_.size(), 0);
    for (std::size_t i = 0; i < active.size(); ++i) {
      step_llr[active[i]] = log_lrs[i];
      observed[active[i]] = 1;
    }
    for (std::size_t k = 0; k < cum_.size(); ++k) {
      if (observed[k]) {
        for (double& c : cum_[k]) c += step_llr[k];
      }
      cum_[k].push_back(step_llr[k]);
    }
    ++state.t;
    const auto t = static_cast<std::size_t>(state.t);

    const GeometricPrior prior(theta_);
    std::vector<double> joint(t);
    for (std::size_t m = 0; m < t; ++m) {
      CompensatedSum s;
      for (std::size_t k = 0; k < cum_.size(); ++k) s.add(stream_term(cum_[k][m]));
      joint[m] = prior.log_mass(static_cast<std::int64_t>(m)) + s.value();
    }
    const double log_tail = prior.log_tail(state.t);
    const double log_eta = std::log(eta_);
    const double log_not_eta = std::log1p(-eta_);

    std::vector<double> num(t);
    std::vector<double> den(t + 1);
    for (std::size_t k : active) {
      for (std::size_t m = 0; m < t; ++m) {
        const double c = cum_[k][m];
        const double g = stream_term(c);
        num[m] = eta_ == 0.0 ? -kInf : joint[m] + log_eta + c - g;
        den[m] = eta_ == 1.0 ? -kInf : joint[m] + log_not_eta - g;
      }
      den[t] = log_tail;
      const double ln = log_sum_exp(num);
      const double ld = log_sum_exp(den);
      state.log_odds[k] = ln == -kInf ? -kInf : (ld == -kInf ? kInf : ln - ld);
    }
  }

 private:
  /// log(eta e^c + 1 - eta)
  double stream_term(double c) const {
    if (eta_ == 0.0) return 0.0;
    if (eta_ == 1.0) return c;
    return log_add_exp(std::log(eta_) + c, std::log1p(-eta_));
  }

  double theta_;
  double eta_;
  std::vector<std::vector<double>> cum_;
};

/// Batch posterior for the partially dependent model, no deactivation.
/// log_lrs[k][s] is the log-LR of stream k at time s+1; all rows share length t.
inline std::vector<double> posterior_partial_dep(const GeometricPrior& tau0_prior, double eta,
                                                 const std::vector<std::vector<double>>& log_lrs) {
  if (log_lrs.empty()) throw std::invalid_argument("no streams");
  const std::size_t horizon = log_lrs.front().size();
  if (horizon == 0) throw std::invalid_argument("need at least one observation");
  for (const auto& row : log_lrs) {
    if (row.size() != horizon) throw std::invalid_argument("ragged log-LR matrix");
  }
  const std::size_t k = log_lrs.size();
  PartialDepPosterior engine(PartialDepModel{tau0_prior, eta, ObservationModel(GaussianShift{})}, k);
  PosteriorState state(k);
  std::vector<std::size_t> all(k);
  for (std::size_t i = 0; i < k; ++i) all[i] = i;
  std::vector<double> column(k);
  for (std::size_t s = 0; s < horizon; ++s) {
    for (std::size_t i = 0; i < k; ++i) column[i] = log_lrs[i][s];
    engine.update(state, all, column);
  }
  std::vector<double> w(k);
  for (std::size_t i = 0; i < k; ++i) w[i] = state.w(i);
  return w;
}

/// One never-deactivated stream under M_s: V_0 .. V_horizon.
template <class Rng>
std::vector<double> v_path(double theta, const ObservationModel& obs, std::int64_t horizon, Rng& rng) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  const GeometricPrior prior(theta);
  const ChangePoint tau = prior.sample(rng);
  std::vector<double> v{0.0};
  double l = -kInf;
  for (std::int64_t t = 1; t <= horizon; ++t) {
    l = shiryaev_step(l, theta, obs.log_lr(obs.sample(tau.post_change_at(t), rng)));
    v.push_back(logistic(l));
  }
  return v;
}

}  // namespace cscd
