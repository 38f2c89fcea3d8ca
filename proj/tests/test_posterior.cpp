#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cscd/posterior.hpp"
#include "cscd/rng.hpp"
#include "cscd/verify/oracles.hpp"

using namespace cscd;

namespace {

// Plain-probability form of the recursion, valid while nothing overflows.
double plain_step(double w, double theta, double lr) {
  const double num = lr * (theta + (1 - theta) * w);
  return num / (num + (1 - theta) * (1 - w));
}

std::vector<double> gaussian_llrs(double theta, int t, std::mt19937_64& rng) {
  const ObservationModel obs(GaussianShift{1.0, 1.0});
  const ChangePoint tau = GeometricPrior(theta).sample(rng);
  std::vector<double> out;
  for (int s = 1; s <= t; ++s) out.push_back(obs.log_lr(obs.sample(tau.post_change_at(s), rng)));
  return out;
}

}  // namespace

TEST(UpdateW, WorkedExamples) {
  PosteriorState s(1);
  const std::vector<std::size_t> all{0};
  const std::vector<double> zero{0.0};
  s = update_w(s, 0.5, zero, all);
  EXPECT_NEAR(s.w(0), 0.5, 1e-15);
  EXPECT_EQ(s.t, 1);

  PosteriorState one(1);
  one.log_odds[0] = kInf;
  for (double l : {-50.0, 0.0, 30.0}) {
    const std::vector<double> llr{l};
    EXPECT_EQ(update_w(one, 0.2, llr, all).w(0), 1.0);
  }
}

TEST(UpdateW, ZeroLikelihoodGivesZero) {
  PosteriorState s(1);
  s.log_odds[0] = 2.0;
  const std::vector<std::size_t> all{0};
  const std::vector<double> llr{-kInf};
  EXPECT_EQ(update_w(s, 0.3, llr, all).w(0), 0.0);
}

TEST(UpdateW, MatchesPlainRecursionAndBruteForce) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 300; ++rep) {
    const double theta = rep % 2 ? 0.01 : 0.2;
    const auto llr = gaussian_llrs(theta, 10, rng);
    PosteriorState s(1);
    double plain = 0.0;
    const std::vector<std::size_t> all{0};
    for (std::size_t i = 0; i < llr.size(); ++i) {
      const std::vector<double> one{llr[i]};
      s = update_w(s, theta, one, all);
      plain = plain_step(plain, theta, std::exp(llr[i]));
      EXPECT_NEAR(s.w(0), plain, 1e-12);
      EXPECT_NEAR(s.w(0), verify::brute_force_posterior(theta, std::span(llr).first(i + 1)), 1e-10);
    }
  }
}

TEST(UpdateW, OracleEquivalenceUpToTwentyFive) {
  std::mt19937_64 rng(22);
  double worst = 0.0;
  for (int rep = 0; rep < 300; ++rep) {
    const double theta = std::array{0.01, 0.05, 0.3}[rep % 3];
    const auto llr = gaussian_llrs(theta, 25, rng);
    double l = -kInf;
    for (std::size_t i = 0; i < llr.size(); ++i) {
      l = shiryaev_step(l, theta, llr[i]);
      worst = std::max(worst, std::abs(logistic(l) - verify::brute_force_posterior(theta, std::span(llr).first(i + 1))));
    }
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(UpdateW, StaysFiniteForLongPostChangeRuns) {
  // products of likelihood ratios beyond 1e300 must not break the recursion
  double l = -kInf;
  for (int t = 0; t < 2000; ++t) l = shiryaev_step(l, 0.05, 5.0);
  EXPECT_FALSE(std::isnan(l));
  EXPECT_EQ(logistic(l), 1.0);
  l = -kInf;
  for (int t = 0; t < 2000; ++t) l = shiryaev_step(l, 0.05, -5.0);
  EXPECT_FALSE(std::isnan(l));
  EXPECT_GE(logistic(l), 0.0);
  EXPECT_LT(logistic(l), 0.01);
}

TEST(UpdateW, MonotoneInLikelihoodRatio) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int i = 0; i < 5000; ++i) {
    const double theta = 0.001 + 0.9 * u(rng);
    const double lo = log_odds_of(u(rng));
    const double llr = n(rng);
    EXPECT_LE(logistic(shiryaev_step(lo, theta, llr)), logistic(shiryaev_step(lo, theta, llr + 1e-6)));
  }
}

TEST(UpdateW, PermutationEquivariance) {
  std::mt19937_64 rng(24);
  std::normal_distribution<double> n(0.0, 1.0);
  const std::size_t k = 7;
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  PosteriorState a(k), b(k);
  std::vector<std::size_t> all(k);
  std::iota(all.begin(), all.end(), 0);
  for (int t = 0; t < 15; ++t) {
    std::vector<double> x(k), xp(k);
    for (std::size_t i = 0; i < k; ++i) x[i] = n(rng);
    for (std::size_t i = 0; i < k; ++i) xp[perm[i]] = x[i];
    a = update_w(a, 0.1, x, all);
    b = update_w(b, 0.1, xp, all);
  }
  for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(a.log_odds[i], b.log_odds[perm[i]]);
}

TEST(UpdateW, FrozenAndInactiveStreamsUnchanged) {
  PosteriorState s(3);
  std::vector<std::size_t> all{0, 1, 2};
  s = update_w(s, 0.1, std::vector<double>{0.3, 0.4, 0.5}, all);
  const double frozen_value = s.log_odds[1];
  s.frozen[1] = 1;
  const std::vector<std::size_t> active{0, 2};
  for (int t = 0; t < 10; ++t) s = update_w(s, 0.1, std::vector<double>{1.0, 1.0}, active);
  EXPECT_EQ(s.log_odds[1], frozen_value);
  EXPECT_THROW((void)update_w(s, 0.1, std::vector<double>{1.0}, std::vector<std::size_t>{1}), std::invalid_argument);
  EXPECT_THROW((void)update_w(s, 0.1, std::vector<double>{1.0}, active), std::invalid_argument);
}

TEST(DeltaFromV, Identity) {
  EXPECT_DOUBLE_EQ(delta_from_v(0.3, 0.0), 0.3);
  EXPECT_DOUBLE_EQ(delta_from_v(0.3, 1.0), 1.0);
  EXPECT_NEAR(delta_from_v(0.05, 0.2), 0.24, 1e-15);
}

TEST(DeltaFromV, EqualsOneStepPredictiveChangeProbability) {
  // P(tau <= t | data) computed directly from the brute-force sum over tau
  std::mt19937_64 rng(25);
  for (int rep = 0; rep < 50; ++rep) {
    const double theta = 0.07;
    const auto llr = gaussian_llrs(theta, 6, rng);
    std::vector<double> terms;
    for (std::size_t s = 0; s <= llr.size(); ++s) {
      double l = std::log(theta) + static_cast<double>(s) * std::log1p(-theta);
      for (std::size_t r = s; r < llr.size(); ++r) l += llr[r];
      terms.push_back(l);
    }
    const double changed_by_t = log_sum_exp(terms);
    terms.push_back(static_cast<double>(llr.size() + 1) * std::log1p(-theta));
    const double direct = std::exp(changed_by_t - log_sum_exp(terms));
    EXPECT_NEAR(delta_from_v(theta, verify::brute_force_posterior(theta, llr)), direct, 1e-12);
  }
}

TEST(UpdateDependent, WorkedExamples) {
  DependentPosteriorState s;
  EXPECT_EQ(s.w(), 0.0);
  s = update_dependent(s, 0.5, 0.0);
  EXPECT_NEAR(std::exp(s.log_rho), 1.0, 1e-15);
  EXPECT_NEAR(s.w(), 0.5, 1e-15);
  EXPECT_EQ(s.t, 1);
  EXPECT_EQ(update_dependent(s, 0.5, kInf).w(), 1.0);
  EXPECT_GT(update_dependent(s, 0.5, 800.0).w(), 1 - 1e-15);
}

TEST(UpdateDependent, MatchesDirectSumOverTau0) {
  std::mt19937_64 rng(26);
  std::normal_distribution<double> n(-0.5, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const int t = 1 + rep % 8;
    std::vector<std::vector<double>> llr(3, std::vector<double>(t));
    for (auto& row : llr) {
      for (double& v : row) v = n(rng);
    }
    DependentPosteriorState s;
    for (int r = 0; r < t; ++r) s = update_dependent(s, 0.05, llr[0][r] + llr[1][r] + llr[2][r]);
    EXPECT_NEAR(s.w(), verify::brute_force_dependent(0.05, llr), 1e-10);
  }
}

TEST(PartialDep, EtaOneEqualsDependentRecursion) {
  std::mt19937_64 rng(27);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<std::vector<double>> llr(4, std::vector<double>(9));
  for (auto& row : llr) {
    for (double& v : row) v = n(rng);
  }
  const auto w = posterior_partial_dep(GeometricPrior(0.1), 1.0, llr);
  DependentPosteriorState s;
  for (int r = 0; r < 9; ++r) s = update_dependent(s, 0.1, llr[0][r] + llr[1][r] + llr[2][r] + llr[3][r]);
  for (double v : w) EXPECT_NEAR(v, s.w(), 1e-12);
}

TEST(PartialDep, EtaZeroNeverChanges) {
  std::vector<std::vector<double>> llr(3, std::vector<double>(5, 2.0));
  for (double v : posterior_partial_dep(GeometricPrior(0.3), 0.0, llr)) EXPECT_EQ(v, 0.0);
}

TEST(PartialDep, MatchesJointEnumeration) {
  std::mt19937_64 rng(28);
  std::normal_distribution<double> n(0.0, 1.2);
  for (int rep = 0; rep < 200; ++rep) {
    const double eta = std::array{0.1, 0.5, 0.9}[rep % 3];
    const int t = 1 + rep % 6;
    std::vector<std::vector<double>> llr(3, std::vector<double>(t));
    for (auto& row : llr) {
      for (double& v : row) v = n(rng);
    }
    const auto got = posterior_partial_dep(GeometricPrior(0.2), eta, llr);
    const auto want = verify::enumerate_partial_dep(0.2, eta, llr);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(got[k], want[k], 1e-10);
  }
}

TEST(TabularPosterior, MatchesDirectBayesOverSupport) {
  TabularModel m;
  m.priors = {TabularPrior({0.1, 0.0, 0.0, 0.9}), TabularPrior({0.2, 0.3, 0.1, 0.4})};
  m.obs = {ObservationModel(BernoulliPair{0.5, 0.51})};
  TabularPosterior engine(m);
  PosteriorState s(2);
  const std::vector<std::size_t> all{0, 1};
  std::mt19937_64 rng(29);
  std::vector<std::vector<double>> xs(2);
  for (int t = 1; t <= 6; ++t) {
    std::vector<double> llr(2);
    for (int k = 0; k < 2; ++k) {
      const double x = static_cast<double>(rng() % 2);
      xs[k].push_back(x);
      llr[k] = m.obs[0].log_lr(x);
    }
    engine.update(s, all, llr);
    for (int k = 0; k < 2; ++k) {
      double changed = 0, total = 0;
      for (std::int64_t tau = 0; tau < m.priors[k].support_size(); ++tau) {
        double like = m.priors[k].mass(tau);
        for (int r = 1; r <= t; ++r) {
          const double x = xs[k][r - 1];
          const double p = r > tau ? 0.51 : 0.5;
          like *= x == 1.0 ? p : 1 - p;
        }
        total += like;
        if (tau < t) changed += like;
      }
      EXPECT_NEAR(s.w(k), changed / total, 1e-12);
    }
  }
}

TEST(VPath, StartsAtZeroAndStaysInRange) {
  CounterRng rng(substream_key(30));
  const auto v = v_path(0.05, ObservationModel(GaussianShift{}), 40, rng);
  ASSERT_EQ(v.size(), 41u);
  EXPECT_EQ(v[0], 0.0);
  for (double x : v) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
  EXPECT_THROW(v_path(0.05, ObservationModel(GaussianShift{}), 0, rng), std::invalid_argument);
}

TEST(VPath, MeanMatchesPriorChangeProbability) {
  const ObservationModel obs(GaussianShift{});
  for (auto [theta, t] : {std::pair{0.05, 1}, std::pair{0.01, 3}}) {
    CounterRng rng(substream_key(31, static_cast<std::uint64_t>(t)));
    double sum = 0;
    const int n = 100'000;
    for (int i = 0; i < n; ++i) sum += v_path(theta, obs, t, rng)[static_cast<std::size_t>(t)];
    EXPECT_NEAR(sum / n, 1 - std::pow(1 - theta, t), 0.003);
  }
}
