// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "cscd/calibrate.hpp"
#include "cscd/checkpoint.hpp"
#include "cscd/parallel.hpp"
#include "cscd/simulate.hpp"
#include "cscd/synthetic.hpp"
#include "cscd/verify/suites.hpp"

using namespace cscd;

namespace {

struct Outcome {
  bool passed;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, const std::function<Outcome()>& body, double time_limit_s = 0) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o{false, ""};
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (time_limit_s > 0 && secs > time_limit_s) {
    o.passed = false;
    o.detail += " (over the " + std::to_string(static_cast<int>(time_limit_s)) + " s limit)";
  }
  if (!o.passed) ++failures;
  std::ostringstream t;
  t.precision(2);
  t << std::fixed << secs;
  std::cout << "criterion " << id << ": " << (o.passed ? "PASS" : "FAIL") << "  " << title << "  [" << o.detail
            << "; " << t.str() << " s]" << std::endl;
}

std::string num(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(CSCD_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

int main() {
  const unsigned threads = default_threads();

  criterion(1, "posterior recursion equals direct Bayes sum (1000 paths, t<=25, tol 1e-10)", [] {
    const auto r = verify::posterior_suite(1000, 1);
    return Outcome{r.passed, r.detail};
  }, 10);

  criterion(2, "one-step rule equals exhaustive subset search and is the sorted prefix", [] {
    const auto r = verify::selection_suite(1000, 2);
    return Outcome{r.passed, r.detail};
  }, 30);

  criterion(3, "four-stream counterexample: sup E U_2 = 7, sup E U_4 = 10, no procedure attains both", [] {
    const auto r = verify::counterexample_enumeration();
    std::ostringstream d;
    d << "U2=" << r.sup_u2 << " U4=" << r.sup_u4 << " coexist=" << (r.coexist ? "true" : "false");
    return Outcome{r.sup_u2 == 7 && r.sup_u4 == 10 && !r.coexist, d.str()};
  }, 60);

  criterion(4, "K=500, theta=0.05, alpha=0.05, 500 reps, horizon 200 (single thread)", [] {
    SimConfig c{gaussian_iid_model(0.05)};
    c.n_streams = 500;
    c.alpha = 0.05;
    c.horizon = 200;
    c.replications = 500;
    c.seed = 1;
    c.threads = 1;
    const auto f = run_experiment(c);
    double max_lfnr = 0, worst_fnp_excess = -1;
    for (std::size_t i = 0; i < f.rows(); ++i) {
      max_lfnr = std::max(max_lfnr, f.mean[kLfnr][i]);
      worst_fnp_excess = std::max(worst_fnp_excess, f.mean[kFnp][i] - (0.05 + 3 * f.se[kFnp][i]));
    }
    const double final_active = f.mean[kActive].back();
    const bool ok = max_lfnr <= 0.05 && worst_fnp_excess <= 0 && final_active < 0.05 * 500;
    return Outcome{ok, "max mean LFNR=" + num(max_lfnr, 5) + " max(FNP - 0.05 - 3SE)=" + num(worst_fnp_excess, 3) +
                           " mean active at t=200: " + num(final_active)};
  }, 300);

  criterion(5, "K=500, theta=0.01, alpha=0.05: |S_t| = K for t <= 5 in every replication (500 reps)", [&] {
    SimConfig c{gaussian_iid_model(0.01)};
    c.n_streams = 500;
    c.alpha = 0.05;
    c.horizon = 5;
    c.seed = 1;
    const std::size_t reps = 500;
    std::vector<int> bad(reps, 0);
    std::vector<double> dropped(reps, 0);
    parallel_for(reps, threads, [&](std::size_t rep) {
      const auto path = run_replication(c, rep);
      for (std::size_t i = 0; i < 5; ++i) {
        if (path[kActive][i] != 500.0) bad[rep] = 1;
      }
      dropped[rep] = 500.0 - path[kActive][4];
    });
    int n_bad = 0;
    double total_dropped = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      n_bad += bad[r];
      total_dropped += dropped[r];
    }
    return Outcome{n_bad == 0, "replications with a deactivation: " + std::to_string(n_bad) + "/" + std::to_string(reps) +
                                   ", streams dropped in total: " + num(total_dropped)};
  });

  criterion(6, "calibration n=2e5, theta=0.01, alpha=0.05: closed-form retained means at t=3 and t=10, seed agreement", [&] {
    const auto a = calibrate_thresholds(0.01, GaussianShift{}, 0.05, 200'000, 10, 1, threads);
    const auto b = calibrate_thresholds(0.01, GaussianShift{}, 0.05, 200'000, 10, 2, threads);
    double max_gap = 0;
    for (std::size_t t = 0; t < a.survival_frac.size(); ++t) {
      max_gap = std::max(max_gap, std::abs(a.survival_frac[t] - b.survival_frac[t]));
    }
    const bool ok = std::abs(a.retained_mean[3] - 0.0297) <= 0.003 && std::abs(a.retained_mean[10] - 0.05) <= 0.003 &&
                    max_gap <= 0.01;
    return Outcome{ok, "retained mean t=3: " + num(a.retained_mean[3], 5) + ", t=10: " + num(a.retained_mean[10], 5) +
                           ", max survival gap: " + num(max_gap, 3)};
  });

  criterion(7, "dependent stopping, K=2000, theta=0.05, mu=1, alpha=0.05: T = tau_0 + 1 in >= 95% of 200 runs", [&] {
    const EnsembleModel model(PartialDepModel{GeometricPrior(0.05), 1.0, ObservationModel(GaussianShift{1.0, 1.0})});
    const std::size_t k = 2000, reps = 200;
    std::vector<int> hit(reps, 0);
    parallel_for(reps, threads, [&](std::size_t rep) {
      Detector det(model, DetectorConfig{0.05, Mode::dependent}, k);
      const SyntheticEnsemble data(model, k, 7, rep);
      const std::int64_t tau0 = data.taus()[0].value();
      std::vector<double> x(k);
      while (det.time() <= tau0 + 1) {
        if (det.select().retained.empty()) break;
        const std::int64_t t = det.time() + 1;
        for (std::size_t s = 0; s < k; ++s) x[s] = data.observation(s, t);
        det.observe(x);
      }
      const auto& stop = det.trace().stop[0];
      hit[rep] = !stop.censored && stop.time == tau0 + 1;
    });
    int hits = 0;
    for (int h : hit) hits += h;
    return Outcome{hits >= 190, std::to_string(hits) + "/200 runs with T = tau_0 + 1"};
  });

  criterion(8, "uniform optimality DP, K=2, theta=0.3, Bernoulli(0.2/0.8), alpha=0.3, horizon 3", [] {
    const auto rows = verify::uniform_opt_dp(verify::TinyIidInstance{});
    bool ok = rows.size() == 3;
    std::ostringstream d;
    for (const auto& r : rows) {
      ok = ok && r.proposed_utilization == r.sup_utilization && r.proposed_run_length == r.sup_run_length &&
           r.proposed_detections == r.inf_detections;
      d << "t=" << r.t << " EU=" << r.proposed_utilization << "/" << r.sup_utilization << " ERL="
        << r.proposed_run_length << "/" << r.sup_run_length << " ECD=" << r.proposed_detections << "/"
        << r.inf_detections << (r.t < 3 ? "; " : "");
    }
    return Outcome{ok, d.str()};
  }, 120);

  criterion(9, "H_o monotonicity (1e4 pairs) and partial-order axioms (1e4 triples)", [] {
    std::mt19937_64 rng(9);
    const auto mono = verify::h_o_monotone_check(10'000, 0.05, rng);
    const auto axioms = verify::partial_order_axioms_check(10'000, rng);
    return Outcome{mono.passed && axioms.passed,
                   "monotone trials=" + std::to_string(mono.trials) + " axiom trials=" + std::to_string(axioms.trials) +
                       (axioms.failure.empty() ? "" : " " + axioms.failure)};
  });

  criterion(10, "byte-identical outputs across thread counts; checkpoint resume equals uninterrupted run", [] {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("cscd_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const std::string sim = " simulate --theta 0.05 -k 500 --reps 64 --horizon 200 --seed 1 -o ";
    const std::string cal = " calibrate --theta 0.01 --n 50000 --horizon 20 --seed 3 -o ";
    bool ok = run_cli("--threads 1" + sim + (dir / "s1.csv").string()) == 0 &&
              run_cli("--threads 8" + sim + (dir / "s8.csv").string()) == 0 &&
              run_cli("--threads 1" + cal + (dir / "c1.csv").string()) == 0 &&
              run_cli("--threads 8" + cal + (dir / "c8.csv").string()) == 0;
    const bool same_sim = ok && slurp(dir / "s1.csv") == slurp(dir / "s8.csv");
    const bool same_cal = ok && slurp(dir / "c1.csv") == slurp(dir / "c8.csv");
    fs::remove_all(dir);

    const auto model = gaussian_iid_model(0.05);
    const SyntheticEnsemble data(model, 1000, 4, 0);
    auto advance = [&](Detector& d, std::int64_t until) {
      while (d.time() < until) {
        const std::int64_t t = d.time() + 1;
        d.step([&](std::size_t s) { return data.observation(s, t); });
      }
    };
    Detector full(model, DetectorConfig{0.05}, 1000);
    advance(full, 80);
    Detector part(model, DetectorConfig{0.05}, 1000);
    advance(part, 33);
    Detector resumed = restore(checkpoint(part), model, DetectorConfig{0.05});
    advance(resumed, 80);
    const bool same_trace = resumed.trace() == full.trace();
    return Outcome{same_sim && same_cal && same_trace,
                   std::string("simulate CSV ") + (same_sim ? "identical" : "differs") + ", calibrate CSV " +
                       (same_cal ? "identical" : "differs") + ", resumed trace " +
                       (same_trace ? "identical" : "differs")};
  });

  std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
