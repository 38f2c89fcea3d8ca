// cscd: compound sequential change detection over parallel data streams.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 verification failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"

#include "cscd/calibrate.hpp"
#include "cscd/checkpoint.hpp"
#include "cscd/config.hpp"
#include "cscd/detector.hpp"
#include "cscd/errors.hpp"
#include "cscd/ingest.hpp"
#include "cscd/parallel.hpp"
#include "cscd/simulate.hpp"
#include "cscd/thresholds.hpp"
#include "cscd/verify/policy_dp.hpp"
#include "cscd/verify/suites.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerify = 3;

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void add_model_options(CLI::App& app, cscd::ModelSpec& spec) {
  app.add_option("--model", spec.model, "ms | partial | dependent | tabular | counterexample")
      ->check(CLI::IsMember({"ms", "partial", "dependent", "tabular", "counterexample"}))
      ->capture_default_str();
  app.add_option("--theta", spec.theta, "geometric change-point parameter")->capture_default_str();
  app.add_option("--eta", spec.eta, "participation probability (partial model)")->capture_default_str();
  app.add_option("--mu", spec.mu, "post-change mean of the Gaussian shift")->capture_default_str();
  app.add_option("--sigma", spec.sigma, "standard deviation of the Gaussian shift")->capture_default_str();
  app.add_option("--p0", spec.p0, "pre-change P(X=1) for Bernoulli data");
  app.add_option("--p1", spec.p1, "post-change P(X=1) for Bernoulli data");
  app.add_option("--prior", spec.prior, "tabular prior row per stream, e.g. \"0.1 0 0 0.9\"");
}

std::int64_t default_horizon(double theta) { return theta < 0.03 ? 600 : 200; }

/// Output target: a file, or stdout for "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw cscd::data_error("cannot open " + path + " for writing");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cscd::data_error("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

cscd::ThresholdTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cscd::data_error("cannot open threshold table " + path);
  return cscd::read_threshold_csv(in);
}

cscd::EnsembleModel make_model(const cscd::ModelSpec& spec) {
  try {
    return cscd::build_model(spec);
  } catch (const std::invalid_argument& e) {
    throw usage_error(e.what());
  }
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  cscd::ModelSpec spec;
  std::size_t k = 500;
  double alpha = 0.05;
  std::optional<std::int64_t> horizon;
  std::size_t reps = 500;
  std::string procedure = "adaptive";
  std::string table;
  std::uint64_t seed = 1;
  std::string out = "-";
};

int run_simulate(const SimulateArgs& a, unsigned threads) {
  const auto model = make_model(a.spec);
  cscd::SimConfig cfg{model};
  cfg.n_streams = model.fixed_stream_count().value_or(a.k);
  cfg.alpha = a.alpha;
  cfg.horizon = a.horizon.value_or(default_horizon(a.spec.theta));
  cfg.replications = a.reps;
  cfg.procedure = cscd::parse_mode(a.procedure);
  cfg.seed = a.seed;
  cfg.threads = threads;
  if (cfg.procedure == cscd::Mode::threshold) {
    if (a.table.empty()) throw usage_error("the threshold procedure needs --table");
    cfg.table = load_table(a.table);
  }
  cscd::MetricsFrame frame;
  try {
    frame = cscd::run_experiment(cfg);
  } catch (const std::invalid_argument& e) {
    throw usage_error(e.what());
  } catch (const std::out_of_range& e) {
    throw cscd::data_error(e.what());
  }

  std::vector<std::string> meta{"[simulate]"};
  for (const auto& line : cscd::describe(a.spec)) meta.push_back(line);
  meta.push_back("k=" + std::to_string(cfg.n_streams));
  meta.push_back("alpha=" + cscd::to_decimal(cfg.alpha));
  meta.push_back("horizon=" + std::to_string(cfg.horizon));
  meta.push_back("reps=" + std::to_string(cfg.replications));
  meta.push_back("procedure=" + a.procedure);
  if (!a.table.empty()) meta.push_back("table=" + a.table);
  meta.push_back("seed=" + std::to_string(cfg.seed));
  Output out(a.out);
  cscd::write_metrics_csv(out.stream(), frame, meta);
  return 0;
}

// ---------------------------------------------------------------- calibrate

struct CalibrateArgs {
  cscd::ModelSpec spec;
  double alpha = 0.05;
  std::size_t n = 1'000'000;
  std::optional<std::int64_t> horizon;
  std::uint64_t seed = 1;
  std::string out = "-";
};

constexpr std::size_t kCalibrationFloor = 1000;

int run_calibrate(const CalibrateArgs& a, unsigned threads) {
  if (a.spec.model != "ms") throw usage_error("calibration is defined for the i.i.d. model (--model ms)");
  if (a.n < kCalibrationFloor) {
    throw usage_error("--n must be at least " + std::to_string(kCalibrationFloor) + " streams");
  }
  cscd::ThresholdTable table;
  try {
    table = cscd::calibrate_thresholds(a.spec.theta, cscd::build_observation(a.spec), a.alpha, a.n,
                                       a.horizon.value_or(default_horizon(a.spec.theta)), a.seed, threads);
  } catch (const std::invalid_argument& e) {
    throw usage_error(e.what());
  }
  Output out(a.out);
  cscd::write_threshold_csv(out.stream(), table);
  return 0;
}

// ---------------------------------------------------------------- detect

struct DetectArgs {
  cscd::ModelSpec spec;
  double alpha = 0.05;
  std::string mode = "adaptive";
  std::string table;
  std::string input = "-";
  std::string format;
  std::string out = "-";
  std::string steps;
  std::string posteriors;
  std::string resume;
  std::string checkpoint;
  std::optional<std::int64_t> until;
};

int run_detect(const DetectArgs& a, unsigned threads) {
  const auto model = make_model(a.spec);
  cscd::DetectorConfig config;
  config.alpha = a.alpha;
  config.mode = cscd::parse_mode(a.mode);
  config.threads = threads;
  if (config.mode == cscd::Mode::threshold) {
    if (a.table.empty()) throw usage_error("threshold mode needs --table");
    config.table = load_table(a.table);
  }

  std::ifstream file;
  if (a.input != "-") {
    file.open(a.input);
    if (!file) throw cscd::data_error("cannot open " + a.input);
  }
  std::istream& in = a.input == "-" ? std::cin : file;
  std::optional<cscd::InputFormat> format;
  if (!a.format.empty()) format = cscd::parse_format(a.format);
  cscd::RowReader rows(in, format);
  cscd::BatchReader batches(rows);

  std::optional<cscd::Detector> det;
  std::vector<std::int64_t> labels;
  std::unordered_map<std::int64_t, std::size_t> index_of;
  auto make_detector = [&](auto&& factory) {
    try {
      det.emplace(factory());
    } catch (const std::invalid_argument& e) {
      throw usage_error(std::string("refused: ") + e.what());
    }
  };
  if (!a.resume.empty()) {
    const auto blob = read_file(a.resume);
    const auto restored = cscd::parse_checkpoint(blob);
    make_detector([&] { return cscd::Detector::from_snapshot(model, config, restored.snapshot); });
    labels = restored.labels;
    if (labels.empty()) {
      for (std::size_t k = 0; k < det->size(); ++k) labels.push_back(static_cast<std::int64_t>(k));
    }
    for (std::size_t k = 0; k < labels.size(); ++k) index_of[labels[k]] = k;
  }

  std::unique_ptr<Output> steps_out;
  std::unique_ptr<Output> post_out;
  if (!a.steps.empty()) {
    steps_out = std::make_unique<Output>(a.steps);
    steps_out->stream() << "t,active,lfnr,dropped\n";
  }
  if (!a.posteriors.empty()) {
    post_out = std::make_unique<Output>(a.posteriors);
    post_out->stream() << "t,stream,w,active\n";
  }

  bool any = det.has_value();
  while (auto batch = batches.next()) {
    if (a.until && batch->t > *a.until) break;
    if (!det) {
      if (batch->t != 1) {
        throw cscd::data_error("row " + std::to_string(batch->rows.front().line) + ": first time index must be 1");
      }
      for (const auto& r : batch->rows) labels.push_back(r.stream);
      std::sort(labels.begin(), labels.end());
      for (std::size_t k = 0; k < labels.size(); ++k) index_of[labels[k]] = k;
      make_detector([&] { return cscd::Detector(model, config, labels.size()); });
    }
    any = true;
    const cscd::StepReport* report = nullptr;
    try {
      report = &cscd::feed_batch(*det, index_of, labels, *batch);
    } catch (const std::out_of_range& e) {
      throw cscd::data_error(e.what());
    }
    if (steps_out) {
      auto& s = steps_out->stream();
      s << batch->t << ',' << report->retained.size() << ',' << cscd::to_decimal(report->lfnr) << ',';
      for (std::size_t i = 0; i < report->dropped.size(); ++i) s << (i ? " " : "") << labels[report->dropped[i]];
      s << '\n';
    }
    if (post_out) {
      auto& s = post_out->stream();
      for (std::size_t k = 0; k < det->size(); ++k) {
        s << batch->t << ',' << labels[k] << ',' << cscd::to_decimal(det->w(k)) << ','
          << (det->posterior().is_frozen(k) ? 0 : 1) << '\n';
      }
    }
  }
  if (!any) throw cscd::data_error("no observations");

  if (!a.checkpoint.empty()) {
    std::ofstream ck(a.checkpoint, std::ios::binary);
    if (!ck) throw cscd::data_error("cannot write checkpoint " + a.checkpoint);
    ck << cscd::checkpoint(*det, labels);
  }

  Output out(a.out);
  auto& s = out.stream();
  s << "# [detect]\n";
  for (const auto& line : cscd::describe(a.spec)) s << "# " << line << '\n';
  s << "# alpha=" << cscd::to_decimal(a.alpha) << "\n# mode=" << a.mode << '\n';
  if (!a.table.empty()) s << "# table=" << a.table << '\n';
  s << "# t=" << det->time() << '\n';
  s << "stream,T,censored\n";
  const auto& stop = det->trace().stop;
  for (std::size_t k = 0; k < stop.size(); ++k) {
    s << labels[k] << ',' << stop[k].time << ',' << (stop[k].censored ? 1 : 0) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- verify

int run_verify(const std::vector<std::string>& suites) {
  bool ok = true;
  for (const auto& name : suites) {
    std::vector<cscd::verify::CheckResult> results;
    try {
      results = cscd::verify::run_suite(name);
    } catch (const cscd::verify::InstanceTooLarge& e) {
      results.push_back({name, false, e.what()});
    }
    for (const auto& r : results) {
      std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ' ' << r.detail << '\n';
      ok = ok && r.passed;
    }
  }
  return ok ? 0 : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compound sequential change-point detection for parallel data streams"};
  app.set_config("--config", "", "INI file; [detect], [simulate], [calibrate] sections hold subcommand options");
  app.require_subcommand(1);
  unsigned threads = cscd::default_threads();
  app.add_option("--threads", threads, "worker threads (default: CSCD_THREADS or hardware concurrency)")
      ->check(CLI::PositiveNumber);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "replicate the detector on simulated ensembles");
  add_model_options(*simulate, sim.spec);
  simulate->add_option("-k,--k", sim.k, "number of streams")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--alpha", sim.alpha, "LFNR level")->capture_default_str();
  simulate->add_option("--horizon", sim.horizon, "time steps (default 600 for theta < 0.03, else 200)");
  simulate->add_option("--reps", sim.reps, "replications")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--procedure", sim.procedure, "adaptive | threshold | dependent")
      ->check(CLI::IsMember({"adaptive", "threshold", "dependent"}))
      ->capture_default_str();
  simulate->add_option("--table", sim.table, "threshold table from `calibrate`");
  simulate->add_option("--seed", sim.seed, "base seed")->capture_default_str();
  simulate->add_option("-o,--out", sim.out, "metrics CSV (- for stdout)")->capture_default_str();

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "estimate the limiting thresholds lambda_t");
  add_model_options(*calibrate, cal.spec);
  calibrate->add_option("--alpha", cal.alpha, "LFNR level")->capture_default_str();
  calibrate->add_option("-n,--n", cal.n, "simulated streams (at least 1000)")->capture_default_str();
  calibrate->add_option("--horizon", cal.horizon, "last time index (default 600 for theta < 0.03, else 200)");
  calibrate->add_option("--seed", cal.seed, "base seed")->capture_default_str();
  calibrate->add_option("-o,--out", cal.out, "threshold table CSV (- for stdout)")->capture_default_str();

  DetectArgs det;
  auto* detect = app.add_subcommand("detect", "run the detector over observed data");
  add_model_options(*detect, det.spec);
  detect->add_option("--alpha", det.alpha, "LFNR level")->capture_default_str();
  detect->add_option("--mode", det.mode, "adaptive | threshold | dependent")
      ->check(CLI::IsMember({"adaptive", "threshold", "dependent"}))
      ->capture_default_str();
  detect->add_option("--table", det.table, "threshold table for --mode threshold");
  detect->add_option("-i,--input", det.input, "observations (- for stdin)")->capture_default_str();
  detect->add_option("--format", det.format, "ndjson | csv | wide (default: detect from content)")
      ->check(CLI::IsMember({"ndjson", "jsonl", "csv", "wide"}));
  detect->add_option("-o,--out", det.out, "final stopping-time table (- for stdout)")->capture_default_str();
  detect->add_option("--steps", det.steps, "per-step report CSV");
  detect->add_option("--posteriors", det.posteriors, "per-step posterior CSV");
  detect->add_option("--resume", det.resume, "resume from a checkpoint file");
  detect->add_option("--checkpoint", det.checkpoint, "write a checkpoint after the last processed time");
  detect->add_option("--until", det.until, "stop after this time index");

  std::vector<std::string> suites{"all"};
  auto* verify = app.add_subcommand("verify", "run the oracle verification suites");
  verify->add_option("suites", suites, "posterior | selection | counterexample | optimality | order | dependent | partial | all")
      ->check(CLI::IsMember(cscd::verify::suite_names()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*simulate) return run_simulate(sim, threads);
    if (*calibrate) return run_calibrate(cal, threads);
    if (*detect) return run_detect(det, threads);
    if (*verify) return run_verify(suites);
  } catch (const usage_error& e) {
    std::cerr << "cscd: " << e.what() << '\n';
    return kExitUsage;
  } catch (const cscd::data_error& e) {
    std::cerr << "cscd: data error: " << e.what() << '\n';
    return kExitData;
  } catch (const cscd::checkpoint_error& e) {
    std::cerr << "cscd: checkpoint error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "cscd: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "cscd: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
