#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cscd/detector.hpp"
#include "cscd/metrics.hpp"
#include "cscd/numeric.hpp"
#include "cscd/parallel.hpp"
#include "cscd/synthetic.hpp"

namespace cscd {

struct SimConfig {
  EnsembleModel model;
  std::size_t n_streams = 500;
  double alpha = 0.05;
  std::int64_t horizon = 200;
  std::size_t replications = 500;
  Mode procedure = Mode::adaptive;
  std::optional<ThresholdTable> table{};
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

enum Metric : std::size_t { kFnp, kLfnr, kActive, kUtil, kFdp, kLfdr, kRl, kCd, kMetricCount };

/// Per-time means and standard errors over replications. Row i is time t = i + 1.
struct MetricsFrame {
  std::size_t replications = 0;
  std::size_t n_streams = 0;
  std::array<std::vector<double>, kMetricCount> mean;
  std::array<std::vector<double>, kMetricCount> se;  // NaN when replications == 1

  std::size_t rows() const { return mean[kFnp].size(); }
  friend bool operator==(const MetricsFrame&, const MetricsFrame&) = default;
};

/// Per-time metric paths of one replication, rows indexed as in MetricsFrame.
inline std::array<std::vector<double>, kMetricCount> run_replication(const SimConfig& cfg, std::uint64_t rep) {
  DetectorConfig dc;
  dc.alpha = cfg.alpha;
  dc.mode = cfg.procedure;
  dc.table = cfg.table;
  dc.threads = 1;
  Detector det(cfg.model, dc, cfg.n_streams);
  const SyntheticEnsemble data(cfg.model, cfg.n_streams, cfg.seed, rep);
  const auto& taus = data.taus();
  const auto h = static_cast<std::size_t>(cfg.horizon);

  std::array<std::vector<double>, kMetricCount> out;
  for (auto& v : out) v.resize(h);
  double util = 0.0;
  double rl = 0.0;
  std::vector<double> w_dropped;
  std::vector<double> x;
  for (std::int64_t s = 0; s < cfg.horizon; ++s) {
    const StepReport& r = det.select();
    const auto i = static_cast<std::size_t>(s);
    if (cfg.procedure == Mode::adaptive && r.lfnr > cfg.alpha) {
      throw std::logic_error("adaptive procedure exceeded the LFNR level");
    }
    std::size_t false_stops = 0;
    CompensatedSum lfdr;
    for (std::size_t k : r.dropped) {
      false_stops += taus[k].before(s) ? 0 : 1;
      lfdr.add(1.0 - det.w(k));
    }
    const std::size_t n_active = r.retained.size();
    util += static_cast<double>(n_active);
    for (std::size_t k : r.retained) rl += taus[k].before(s + 1) ? 0.0 : 1.0;
    out[kFnp][i] = fnp(r.retained, taus, s);
    out[kLfnr][i] = r.lfnr;
    out[kActive][i] = static_cast<double>(n_active);
    out[kUtil][i] = util;
    out[kFdp][i] = safe_ratio(static_cast<double>(false_stops), r.dropped.size());
    out[kLfdr][i] = safe_ratio(lfdr.value(), r.dropped.size());
    out[kRl][i] = rl;
    out[kCd][i] = static_cast<double>(cfg.n_streams - n_active);
    if (s + 1 == cfg.horizon) break;
    const auto& active = det.active();
    x.resize(active.size());
    for (std::size_t j = 0; j < active.size(); ++j) x[j] = data.observation(active[j], s + 1);
    det.observe(x);
  }
  return out;
}

namespace detail {
// Running mean and sum of squared deviations per (metric, time).
struct Moments {
  double n = 0.0;
  std::array<std::vector<double>, kMetricCount> mean;
  std::array<std::vector<double>, kMetricCount> m2;

  explicit Moments(std::size_t rows) {
    for (auto& v : mean) v.assign(rows, 0.0);
    for (auto& v : m2) v.assign(rows, 0.0);
  }

  void add(const std::array<std::vector<double>, kMetricCount>& x) {
    n += 1.0;
    for (std::size_t m = 0; m < kMetricCount; ++m) {
      for (std::size_t i = 0; i < x[m].size(); ++i) {
        const double d = x[m][i] - mean[m][i];
        mean[m][i] += d / n;
        m2[m][i] += d * (x[m][i] - mean[m][i]);
      }
    }
  }

  void merge(const Moments& o) {
    if (o.n == 0.0) return;
    const double total = n + o.n;
    for (std::size_t m = 0; m < kMetricCount; ++m) {
      for (std::size_t i = 0; i < mean[m].size(); ++i) {
        const double d = o.mean[m][i] - mean[m][i];
        mean[m][i] += d * o.n / total;
        m2[m][i] += o.m2[m][i] + d * d * n * o.n / total;
      }
    }
    n = total;
  }
};
}  // namespace detail

/// Replications are grouped in fixed blocks reduced in block order, so the
/// result does not depend on the number of threads.
inline MetricsFrame run_experiment(const SimConfig& cfg) {
  if (cfg.replications < 1) throw std::invalid_argument("replications must be at least 1");
  if (cfg.horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  constexpr std::size_t kBlock = 16;
  const auto rows = static_cast<std::size_t>(cfg.horizon);
  const std::size_t n_blocks = (cfg.replications + kBlock - 1) / kBlock;
  std::vector<detail::Moments> blocks(n_blocks, detail::Moments(rows));
  parallel_for(n_blocks, cfg.threads, [&](std::size_t b) {
    const std::size_t end = std::min(cfg.replications, (b + 1) * kBlock);
    for (std::size_t rep = b * kBlock; rep < end; ++rep) blocks[b].add(run_replication(cfg, rep));
  });
  detail::Moments total(rows);
  for (const auto& b : blocks) total.merge(b);

  MetricsFrame f;
  f.replications = cfg.replications;
  f.n_streams = cfg.n_streams;
  const double n = static_cast<double>(cfg.replications);
  for (std::size_t m = 0; m < kMetricCount; ++m) {
    f.mean[m] = total.mean[m];
    f.se[m].resize(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      f.se[m][i] = cfg.replications > 1 ? std::sqrt(total.m2[m][i] / (n - 1.0) / n) : std::nan("");
    }
  }
  return f;
}

/// Metrics CSV. `metadata` lines are written as "# " comments before the header.
inline void write_metrics_csv(std::ostream& out, const MetricsFrame& f, const std::vector<std::string>& metadata) {
  out << "# cscd metrics (row t uses S_t and data through t-1)\n";
  for (const auto& line : metadata) out << "# " << line << "\n";
  out << "t,mean_fnp,se_fnp,mean_lfnr,se_lfnr,mean_active,mean_util,mean_fdp,mean_lfdr,mean_rl,mean_cd\n";
  auto se = [](double v) { return std::isnan(v) ? std::string("NA") : to_decimal(v); };
  for (std::size_t i = 0; i < f.rows(); ++i) {
    out << i + 1 << ',' << to_decimal(f.mean[kFnp][i]) << ',' << se(f.se[kFnp][i]) << ','
        << to_decimal(f.mean[kLfnr][i]) << ',' << se(f.se[kLfnr][i]) << ',' << to_decimal(f.mean[kActive][i]) << ','
        << to_decimal(f.mean[kUtil][i]) << ',' << to_decimal(f.mean[kFdp][i]) << ','
        << to_decimal(f.mean[kLfdr][i]) << ',' << to_decimal(f.mean[kRl][i]) << ',' << to_decimal(f.mean[kCd][i])
        << '\n';
  }
}

}  // namespace cscd
