#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "cscd/numeric.hpp"

namespace cscd {

/// Change point of one stream. tau = m means times 1..m follow the pre-change
/// density and times m+1.. the post-change one; tau = 0 means the stream is
/// post-change from the first observation. Infinity is a dedicated state.
class ChangePoint {
 public:
  constexpr ChangePoint() = default;
  constexpr explicit ChangePoint(std::int64_t m) : time_(m) {
    if (m < 0) throw std::invalid_argument("change point must be non-negative");
  }
  static constexpr ChangePoint infinity() { return ChangePoint(); }

  constexpr bool is_infinite() const { return !time_.has_value(); }
  constexpr std::int64_t value() const { return time_.value(); }

  /// tau < t
  constexpr bool before(std::int64_t t) const { return time_.has_value() && *time_ < t; }
  /// Observation at time t is drawn from the post-change density (t > tau).
  constexpr bool post_change_at(std::int64_t t) const { return before(t); }

  friend constexpr bool operator==(const ChangePoint&, const ChangePoint&) = default;

 private:
  std::optional<std::int64_t> time_;
};

class GeometricPrior {
 public:
  explicit GeometricPrior(double theta) : theta_(theta) {
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must lie in (0,1)");
  }
  double theta() const { return theta_; }

  /// P(tau = m) = theta (1 - theta)^m
  double mass(std::int64_t m) const { return theta_ * std::pow(1.0 - theta_, static_cast<double>(m)); }
  /// P(tau >= t) = (1 - theta)^t
  double tail(std::int64_t t) const { return std::pow(1.0 - theta_, static_cast<double>(t)); }
  double log_mass(std::int64_t m) const { return std::log(theta_) + static_cast<double>(m) * std::log1p(-theta_); }
  double log_tail(std::int64_t t) const { return static_cast<double>(t) * std::log1p(-theta_); }

  template <class Rng>
  ChangePoint sample(Rng& rng) const {
    std::geometric_distribution<std::int64_t> dist(theta_);
    return ChangePoint(dist(rng));
  }

 private:
  double theta_;
};

/// Finite-support prior: masses[m] = P(tau = m), summing to one.
class TabularPrior {
 public:
  explicit TabularPrior(std::vector<double> masses) : masses_(std::move(masses)) {
    if (masses_.empty()) throw std::invalid_argument("empty prior table");
    double total = 0.0;
    for (double m : masses_) {
      if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("prior mass outside [0,1]");
      total += m;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("prior table does not sum to one");
  }
  const std::vector<double>& masses() const { return masses_; }
  std::int64_t support_size() const { return static_cast<std::int64_t>(masses_.size()); }
  double mass(std::int64_t m) const {
    return m >= 0 && m < support_size() ? masses_[static_cast<std::size_t>(m)] : 0.0;
  }
  double tail(std::int64_t t) const {
    double s = 0.0;
    for (std::int64_t m = std::max<std::int64_t>(t, 0); m < support_size(); ++m) s += mass(m);
    return s;
  }

  template <class Rng>
  ChangePoint sample(Rng& rng) const {
    std::discrete_distribution<std::int64_t> dist(masses_.begin(), masses_.end());
    return ChangePoint(dist(rng));
  }

 private:
  std::vector<double> masses_;
};

/// Pre N(0, sigma^2), post N(mu, sigma^2).
struct GaussianShift {
  double mu = 1.0;
  double sigma = 1.0;
};

/// Pre Bernoulli(p0), post Bernoulli(p1); observations are 0 or 1.
struct BernoulliPair {
  double p0 = 0.5;
  double p1 = 0.5;
};

class ObservationModel {
 public:
  ObservationModel(GaussianShift g) : impl_(g) {  // NOLINT(google-explicit-constructor)
    if (!std::isfinite(g.mu) || !(g.sigma > 0.0) || !std::isfinite(g.sigma)) {
      throw std::invalid_argument("gaussian shift needs finite mu and sigma > 0");
    }
  }
  ObservationModel(BernoulliPair b) : impl_(b) {  // NOLINT(google-explicit-constructor)
    if (!(b.p0 > 0.0 && b.p0 < 1.0 && b.p1 > 0.0 && b.p1 < 1.0)) {
      throw std::invalid_argument("bernoulli parameters must lie in (0,1)");
    }
  }

  const std::variant<GaussianShift, BernoulliPair>& impl() const { return impl_; }
  bool is_bernoulli() const { return std::holds_alternative<BernoulliPair>(impl_); }

  /// log(q(x) / p(x))
  double log_lr(double x) const {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite observation");
    if (auto g = std::get_if<GaussianShift>(&impl_)) {
      return (g->mu * x - 0.5 * g->mu * g->mu) / (g->sigma * g->sigma);
    }
    const auto& b = std::get<BernoulliPair>(impl_);
    if (x == 1.0) return std::log(b.p1 / b.p0);
    if (x == 0.0) return std::log((1.0 - b.p1) / (1.0 - b.p0));
    throw std::invalid_argument("bernoulli observation must be 0 or 1");
  }

  template <class Rng>
  double sample(bool post_change, Rng& rng) const {
    if (auto g = std::get_if<GaussianShift>(&impl_)) {
      std::normal_distribution<double> dist(post_change ? g->mu : 0.0, g->sigma);
      return dist(rng);
    }
    const auto& b = std::get<BernoulliPair>(impl_);
    std::bernoulli_distribution dist(post_change ? b.p1 : b.p0);
    return dist(rng) ? 1.0 : 0.0;
  }

  std::string fingerprint() const {
    if (auto g = std::get_if<GaussianShift>(&impl_)) {
      return "gaussian(mu=" + to_hex(g->mu) + ",sigma=" + to_hex(g->sigma) + ")";
    }
    const auto& b = std::get<BernoulliPair>(impl_);
    return "bernoulli(p0=" + to_hex(b.p0) + ",p1=" + to_hex(b.p1) + ")";
  }

 private:
  std::variant<GaussianShift, BernoulliPair> impl_;
};

/// Model M_s: i.i.d. geometric change points, common densities.
struct IidModel {
  GeometricPrior prior;
  ObservationModel obs;
};

/// tau_0 ~ Geom(theta); each stream changes at tau_0 with probability eta,
/// otherwise never.
struct PartialDepModel {
  GeometricPrior tau0;
  double eta;
  ObservationModel obs;
};

/// Independent streams with per-stream finite-support priors.
struct TabularModel {
  std::vector<TabularPrior> priors;
  std::vector<ObservationModel> obs;  // one shared entry or one per stream
};

enum class ModelKind { iid, partial_dependent, tabular };

class EnsembleModel {
 public:
  EnsembleModel(IidModel m) : impl_(std::move(m)) {}  // NOLINT(google-explicit-constructor)
  EnsembleModel(PartialDepModel m) : impl_(std::move(m)) {  // NOLINT(google-explicit-constructor)
    const double eta = std::get<PartialDepModel>(impl_).eta;
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in [0,1]");
  }
  EnsembleModel(TabularModel m) : impl_(std::move(m)) {  // NOLINT(google-explicit-constructor)
    const auto& t = std::get<TabularModel>(impl_);
    if (t.priors.empty()) throw std::invalid_argument("tabular model needs at least one stream");
    if (t.obs.size() != 1 && t.obs.size() != t.priors.size()) {
      throw std::invalid_argument("tabular model needs one observation model or one per stream");
    }
  }

  ModelKind kind() const { return static_cast<ModelKind>(impl_.index()); }
  const IidModel& iid() const { return std::get<IidModel>(impl_); }
  const PartialDepModel& partial() const { return std::get<PartialDepModel>(impl_); }
  const TabularModel& tabular() const { return std::get<TabularModel>(impl_); }

  /// Stream count fixed by the model itself (tabular only).
  std::optional<std::size_t> fixed_stream_count() const {
    if (kind() == ModelKind::tabular) return tabular().priors.size();
    return std::nullopt;
  }

  const ObservationModel& observation(std::size_t stream) const {
    switch (kind()) {
      case ModelKind::iid: return iid().obs;
      case ModelKind::partial_dependent: return partial().obs;
      case ModelKind::tabular: {
        const auto& t = tabular();
        return t.obs.size() == 1 ? t.obs.front() : t.obs.at(stream);
      }
    }
    throw std::logic_error("unreachable");
  }

  std::string fingerprint() const {
    switch (kind()) {
      case ModelKind::iid:
        return "iid(theta=" + to_hex(iid().prior.theta()) + ";" + iid().obs.fingerprint() + ")";
      case ModelKind::partial_dependent:
        return "partial(theta=" + to_hex(partial().tau0.theta()) + ",eta=" + to_hex(partial().eta) + ";" +
               partial().obs.fingerprint() + ")";
      case ModelKind::tabular: {
        std::string s = "tabular(";
        for (const auto& p : tabular().priors) {
          s += "[";
          for (double m : p.masses()) s += to_hex(m) + ",";
          s += "]";
        }
        for (const auto& o : tabular().obs) s += ";" + o.fingerprint();
        return s + ")";
      }
    }
    throw std::logic_error("unreachable");
  }

 private:
  std::variant<IidModel, PartialDepModel, TabularModel> impl_;
};

/// Draw K change points sequentially from one generator.
template <class Rng>
std::vector<ChangePoint> sample_change_points(const EnsembleModel& model, std::size_t k, Rng& rng) {
  if (k == 0) throw std::invalid_argument("stream count must be positive");
  std::vector<ChangePoint> taus;
  taus.reserve(k);
  switch (model.kind()) {
    case ModelKind::iid:
      for (std::size_t i = 0; i < k; ++i) taus.push_back(model.iid().prior.sample(rng));
      break;
    case ModelKind::partial_dependent: {
      const auto& pd = model.partial();
      const ChangePoint tau0 = pd.tau0.sample(rng);
      std::bernoulli_distribution affected(pd.eta);
      for (std::size_t i = 0; i < k; ++i) taus.push_back(affected(rng) ? tau0 : ChangePoint::infinity());
      break;
    }
    case ModelKind::tabular: {
      const auto& tab = model.tabular();
      if (k != tab.priors.size()) throw std::invalid_argument("tabular model fixes the stream count");
      for (const auto& p : tab.priors) taus.push_back(p.sample(rng));
      break;
    }
  }
  return taus;
}

/// Observation of `stream` at time t >= 1: pre-change when t <= tau.
template <class Rng>
double sample_observation(const EnsembleModel& model, std::size_t stream, std::int64_t t, ChangePoint tau, Rng& rng) {
  if (t < 1) throw std::invalid_argument("time index starts at 1");
  return model.observation(stream).sample(tau.post_change_at(t), rng);
}

inline double log_lr(const EnsembleModel& model, std::size_t stream, double x) {
  return model.observation(stream).log_lr(x);
}

/// Four-stream counterexample to uniform optimality: K = 4, Bernoulli(0.5) -> Bernoulli(0.51), finite priors on {0,1,2,3}.
inline EnsembleModel counterexample_model() {
  TabularModel m;
  m.priors = {TabularPrior({0.1, 0.0, 0.0, 0.9}), TabularPrior({0.4, 0.6, 0.0, 0.0}),
              TabularPrior({0.43, 0.57, 0.0, 0.0}), TabularPrior({0.55, 0.0, 0.0, 0.45})};
  m.obs = {ObservationModel(BernoulliPair{0.5, 0.51})};
  return EnsembleModel(std::move(m));
}

inline EnsembleModel gaussian_iid_model(double theta, double mu = 1.0, double sigma = 1.0) {
  return EnsembleModel(IidModel{GeometricPrior(theta), ObservationModel(GaussianShift{mu, sigma})});
}

}  // namespace cscd
