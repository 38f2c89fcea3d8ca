#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cscd/model.hpp"
#include "cscd/numeric.hpp"
#include "cscd/parallel.hpp"
#include "cscd/posterior.hpp"
#include "cscd/selection.hpp"
#include "cscd/thresholds.hpp"

namespace cscd {

enum class Mode { adaptive, threshold, dependent };

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::adaptive: return "adaptive";
    case Mode::threshold: return "threshold";
    case Mode::dependent: return "dependent";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "adaptive") return Mode::adaptive;
  if (s == "threshold") return Mode::threshold;
  if (s == "dependent") return Mode::dependent;
  throw std::invalid_argument("unknown mode '" + s + "'");
}

struct DetectorConfig {
  double alpha = 0.05;
  Mode mode = Mode::adaptive;
  std::optional<ThresholdTable> table{};  // threshold mode only
  unsigned threads = 1;
};

/// Last time a stream was active. While a stream is still active the entry
/// holds the current time with `censored` set.
struct StopTime {
  std::int64_t time = 0;
  bool censored = true;
  friend bool operator==(const StopTime&, const StopTime&) = default;
};

struct DecisionTrace {
  std::vector<StopTime> stop;
  std::vector<std::size_t> active_sizes;  // [i] = |S_{i+1}|
  std::vector<double> lfnr;               // [i] = mean of W_{k,i} over S_{i+1}, 0 if empty
  friend bool operator==(const DecisionTrace&, const DecisionTrace&) = default;
};

struct StepReport {
  std::int64_t t = 0;                 // selection made from W_t
  std::vector<std::size_t> retained;  // S_{t+1}, ascending index
  std::vector<std::size_t> dropped;   // S_t \ S_{t+1}, ascending index
  double lfnr = 0.0;
  double max_retained_w = 0.0;        // 1 when nothing was dropped
};

/// Complete serialisable detector state between steps.
struct DetectorSnapshot {
  std::int64_t t = 0;
  double alpha = 0.0;
  Mode mode = Mode::adaptive;
  std::string model_fingerprint;
  PosteriorState posterior;
  std::vector<std::size_t> active;
  DecisionTrace trace;
  std::vector<std::vector<double>> engine_state;  // tabular log-weights or partial-dependence sums
  double log_rho = -kInf;                          // dependent mode
  friend bool operator==(const DetectorSnapshot&, const DetectorSnapshot&) = default;
};

/// Streaming compound detector. Each step first selects S_{t+1} from the
/// posteriors W_t (freezing dropped streams at T_k = t) and then folds in the
/// observations at t+1 of the retained streams only.
class Detector {
 public:
  Detector(EnsembleModel model, DetectorConfig config, std::size_t n_streams)
      : model_(std::move(model)), config_(std::move(config)), posterior_(n_streams) {
    if (n_streams == 0) throw std::invalid_argument("detector needs at least one stream");
    if (!(config_.alpha > 0.0 && config_.alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0,1]");
    if (auto fixed = model_.fixed_stream_count(); fixed && *fixed != n_streams) {
      throw std::invalid_argument("stream count does not match the tabular model");
    }
    validate_mode();
    make_engine();
    active_.resize(n_streams);
    for (std::size_t k = 0; k < n_streams; ++k) active_[k] = k;
    trace_.stop.assign(n_streams, StopTime{0, true});
  }

  static Detector from_snapshot(EnsembleModel model, DetectorConfig config, const DetectorSnapshot& snap) {
    if (snap.model_fingerprint != model.fingerprint()) throw std::invalid_argument("snapshot belongs to another model");
    if (snap.mode != config.mode) throw std::invalid_argument("snapshot mode differs from configuration");
    if (snap.alpha != config.alpha) throw std::invalid_argument("snapshot alpha differs from configuration");
    Detector d(std::move(model), std::move(config), snap.posterior.size());
    d.posterior_ = snap.posterior;
    d.active_ = snap.active;
    d.trace_ = snap.trace;
    if (auto* tab = std::get_if<TabularPosterior>(&d.engine_)) {
      if (snap.engine_state.size() != tab->size()) throw std::invalid_argument("snapshot engine state mismatch");
      tab->log_weights() = snap.engine_state;
    } else if (auto* pd = std::get_if<PartialDepPosterior>(&d.engine_)) {
      if (snap.engine_state.size() != pd->size()) throw std::invalid_argument("snapshot engine state mismatch");
      pd->cumulative() = snap.engine_state;
    } else if (auto* dep = std::get_if<DependentPosteriorState>(&d.engine_)) {
      dep->t = snap.t;
      dep->log_rho = snap.log_rho;
    }
    return d;
  }

  DetectorSnapshot snapshot() const {
    if (selected_) throw std::logic_error("snapshot taken between selection and observation");
    DetectorSnapshot s;
    s.t = posterior_.t;
    s.alpha = config_.alpha;
    s.mode = config_.mode;
    s.model_fingerprint = model_.fingerprint();
    s.posterior = posterior_;
    s.active = active_;
    s.trace = trace_;
    if (auto* tab = std::get_if<TabularPosterior>(&engine_)) s.engine_state = tab->log_weights();
    if (auto* pd = std::get_if<PartialDepPosterior>(&engine_)) s.engine_state = pd->cumulative();
    if (auto* dep = std::get_if<DependentPosteriorState>(&engine_)) s.log_rho = dep->log_rho;
    return s;
  }

  std::size_t size() const { return posterior_.size(); }
  std::int64_t time() const { return posterior_.t; }
  const EnsembleModel& model() const { return model_; }
  const DetectorConfig& config() const { return config_; }
  const PosteriorState& posterior() const { return posterior_; }
  double w(std::size_t k) const { return posterior_.w(k); }
  const DecisionTrace& trace() const { return trace_; }
  bool awaiting_observations() const { return selected_; }

  /// Streams currently active: S_t, or S_{t+1} once select() has run.
  const std::vector<std::size_t>& active() const { return active_; }

  /// Chooses S_{t+1} from W_t and freezes the dropped streams.
  const StepReport& select() {
    if (selected_) throw std::logic_error("select() called twice without observe()");
    const std::int64_t t = posterior_.t;
    std::vector<double> w(active_.size());
    for (std::size_t i = 0; i < active_.size(); ++i) w[i] = posterior_.w(active_[i]);

    std::vector<std::uint8_t> keep(size(), 0);
    switch (config_.mode) {
      case Mode::adaptive:
        for (std::size_t k : one_step_rule(std::span<const std::size_t>(active_), std::span<const double>(w), config_.alpha)) {
          keep[k] = 1;
        }
        break;
      case Mode::threshold: {
        const double lambda = config_.table->at(t);
        for (std::size_t i = 0; i < active_.size(); ++i) keep[active_[i]] = w[i] <= lambda ? 1 : 0;
        break;
      }
      case Mode::dependent: {
        const bool stop = std::get<DependentPosteriorState>(engine_).w() > config_.alpha;
        for (std::size_t k : active_) keep[k] = stop ? 0 : 1;
        break;
      }
    }

    report_ = StepReport{};
    report_.t = t;
    CompensatedSum retained_sum;
    double max_w = 0.0;
    for (std::size_t i = 0; i < active_.size(); ++i) {
      const std::size_t k = active_[i];
      if (keep[k]) {
        report_.retained.push_back(k);
        retained_sum.add(w[i]);
        max_w = std::max(max_w, w[i]);
      } else {
        report_.dropped.push_back(k);
        posterior_.frozen[k] = 1;
        trace_.stop[k] = StopTime{t, false};
      }
    }
    const std::size_t n = report_.retained.size();
    report_.lfnr = n == 0 ? 0.0 : retained_sum.value() / static_cast<double>(n);
    report_.max_retained_w = report_.dropped.empty() ? 1.0 : max_w;
    active_ = report_.retained;
    trace_.active_sizes.push_back(n);
    trace_.lfnr.push_back(report_.lfnr);
    selected_ = true;
    return report_;
  }

  /// Observations at time t+1, aligned with active().
  void observe(std::span<const double> x) {
    if (!selected_) throw std::logic_error("observe() called before select()");
    if (x.size() != active_.size()) throw std::invalid_argument("observation count differs from active set size");
    std::vector<double> llr(x.size());
    parallel_chunks(x.size(), config_.threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) llr[i] = model_.observation(active_[i]).log_lr(x[i]);
    });
    observe_log_lr(llr);
  }

  /// Same as observe() with precomputed log-likelihood ratios.
  void observe_log_lr(std::span<const double> llr) {
    if (!selected_) throw std::logic_error("observe() called before select()");
    if (llr.size() != active_.size()) throw std::invalid_argument("observation count differs from active set size");
    std::visit([&](auto& engine) { update_engine(engine, llr); }, engine_);
    for (std::size_t k : active_) trace_.stop[k] = StopTime{posterior_.t, true};
    selected_ = false;
  }

  /// select() followed by observe() with x_of(k) giving the observation of stream k.
  template <class ObsFn>
  const StepReport& step(ObsFn&& x_of) {
    select();
    std::vector<double> x(active_.size());
    for (std::size_t i = 0; i < active_.size(); ++i) x[i] = x_of(active_[i]);
    observe(x);
    return report_;
  }

  const StepReport& last_report() const { return report_; }

 private:
  struct IidEngine {
    double theta;
  };
  using Engine = std::variant<IidEngine, TabularPosterior, PartialDepPosterior, DependentPosteriorState>;

  void validate_mode() {
    switch (config_.mode) {
      case Mode::adaptive: break;
      case Mode::threshold:
        if (!config_.table) throw std::invalid_argument("threshold mode needs a threshold table");
        if (model_.kind() != ModelKind::iid) throw std::invalid_argument("threshold mode requires the i.i.d. model");
        if (config_.table->model_fingerprint != model_.fingerprint()) {
          throw std::invalid_argument("threshold table was calibrated for a different model");
        }
        if (config_.table->alpha != config_.alpha) {
          throw std::invalid_argument("threshold table was calibrated for a different alpha");
        }
        break;
      case Mode::dependent:
        if (model_.kind() != ModelKind::partial_dependent || model_.partial().eta != 1.0) {
          throw std::invalid_argument("dependent mode requires the partially dependent model with eta = 1");
        }
        break;
    }
  }

  void make_engine() {
    if (config_.mode == Mode::dependent) {
      engine_ = DependentPosteriorState{};
      return;
    }
    switch (model_.kind()) {
      case ModelKind::iid: engine_ = IidEngine{model_.iid().prior.theta()}; break;
      case ModelKind::tabular: engine_ = TabularPosterior(model_.tabular()); break;
      case ModelKind::partial_dependent: engine_ = PartialDepPosterior(model_.partial(), size()); break;
    }
  }

  void update_engine(IidEngine& e, std::span<const double> llr) {
    parallel_chunks(active_.size(), config_.threads, [&](std::size_t b, std::size_t end) {
      for (std::size_t i = b; i < end; ++i) {
        auto& l = posterior_.log_odds[active_[i]];
        l = shiryaev_step(l, e.theta, llr[i]);
      }
    });
    ++posterior_.t;
  }

  void update_engine(TabularPosterior& e, std::span<const double> llr) { e.update(posterior_, active_, llr); }
  void update_engine(PartialDepPosterior& e, std::span<const double> llr) { e.update(posterior_, active_, llr); }

  void update_engine(DependentPosteriorState& e, std::span<const double> llr) {
    if (!active_.empty()) {
      if (active_.size() != size()) throw std::logic_error("dependent mode observes all streams jointly");
      CompensatedSum s;
      for (double v : llr) s.add(v);
      e = update_dependent(e, model_.partial().tau0.theta(), s.value());
      for (std::size_t k : active_) posterior_.log_odds[k] = e.log_rho;
    } else {
      ++e.t;
    }
    ++posterior_.t;
  }

  EnsembleModel model_;
  DetectorConfig config_;
  PosteriorState posterior_;
  Engine engine_{IidEngine{0.5}};
  std::vector<std::size_t> active_;
  DecisionTrace trace_;
  StepReport report_;
  bool selected_ = false;
};

}  // namespace cscd
