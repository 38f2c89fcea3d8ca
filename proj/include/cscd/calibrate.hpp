#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cscd/detector.hpp"
#include "cscd/parallel.hpp"
#include "cscd/synthetic.hpp"
#include "cscd/thresholds.hpp"

namespace cscd {

/// log(1 - alpha) / log(1 - theta): the time from which the limiting LFNR
/// is pinned at alpha.
inline double critical_time(double theta, double alpha) { return std::log1p(-alpha) / std::log1p(-theta); }

/// Limiting LFNR at time t for model M_s: 1 - (1 - theta)^t before the
/// critical time, alpha afterwards.
inline double lfnr_limit(double theta, double alpha, std::int64_t t) {
  if (t < 1) throw std::invalid_argument("t must be at least 1");
  if (static_cast<double>(t) < critical_time(theta, alpha)) return -std::expm1(static_cast<double>(t) * std::log1p(-theta));
  return alpha;
}

/// Runs the adaptive detector on n_streams simulated M_s streams and records,
/// for t = 0..horizon, the largest retained posterior (1 when nothing was
/// dropped), the surviving fraction |S_{t+1}|/K and the retained mean.
inline ThresholdTable calibrate_thresholds(double theta, const ObservationModel& obs, double alpha,
                                           std::size_t n_streams, std::int64_t horizon, std::uint64_t seed,
                                           unsigned threads = 1) {
  if (horizon < 1) throw std::invalid_argument("calibration horizon must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
  const EnsembleModel model(IidModel{GeometricPrior(theta), obs});
  DetectorConfig config;
  config.alpha = alpha;
  config.threads = threads;
  Detector detector(model, config, n_streams);
  const SyntheticEnsemble data(model, n_streams, seed, 0);

  ThresholdTable table;
  table.theta = theta;
  table.alpha = alpha;
  table.model_fingerprint = model.fingerprint();
  table.n_streams = n_streams;
  table.seed = seed;
  std::vector<double> x;
  for (std::int64_t t = 0; t <= horizon; ++t) {
    const StepReport& r = detector.select();
    table.lambda.push_back(r.max_retained_w);
    table.survival_frac.push_back(static_cast<double>(r.retained.size()) / static_cast<double>(n_streams));
    table.retained_mean.push_back(r.lfnr);
    const auto& active = detector.active();
    x.assign(active.size(), 0.0);
    parallel_chunks(active.size(), threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) x[i] = data.observation(active[i], t + 1);
    });
    detector.observe(x);
  }
  return table;
}

}  // namespace cscd
