#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cscd/verify/exact.hpp"
#include "cscd/verify/oracles.hpp"
#include "cscd/verify/order.hpp"
#include "cscd/verify/policy_dp.hpp"
#include "cscd/verify/suites.hpp"

using namespace cscd;
using namespace cscd::verify;

TEST(BruteForcePosterior, Examples) {
  EXPECT_NEAR(brute_force_posterior(0.5, std::vector<double>{0.0}), 0.5, 1e-15);
  EXPECT_EQ(brute_force_posterior(0.2, std::vector<double>{-kInf, -kInf, -kInf}), 0.0);
}

TEST(BruteForceSubset, Examples) {
  EXPECT_EQ(brute_force_subset(std::vector<double>{0.02, 0.04, 0.10, 0.30}, 0.05), 2u);
  EXPECT_EQ(brute_force_subset(std::vector<double>{0.2, 0.3, 0.9}, 0.05), 0u);
  EXPECT_EQ(brute_force_subset(std::vector<double>(7, 0.0), 0.05), 7u);
  EXPECT_THROW(brute_force_subset(std::vector<double>(21, 0.0), 0.05), std::invalid_argument);
}

TEST(ExactMean, BoundaryDecidedExactly) {
  const std::vector<double> w(10, 0.1);
  // exact binary values: ten times the double 0.1 equals ten times alpha
  EXPECT_TRUE(mean_at_most(w, 0.1));
  EXPECT_FALSE(mean_at_most(std::vector<double>{0.1, std::nextafter(0.1, 1.0)}, 0.1));
  EXPECT_EQ(decimal_rational(0.43), Rational(43, 100));
  EXPECT_EQ(decimal_rational(-2.5e-3), Rational(-1, 400));
}

TEST(OrderedVec, IoHoExamples) {
  const OrderedVec u({0.01, 0.03, 0.20});
  EXPECT_EQ(i_o(u, 0.05), 2u);
  EXPECT_EQ(h_o(u, 0.05), OrderedVec({0.01, 0.03}));
  EXPECT_EQ(i_o(OrderedVec(), 0.05), 0u);
  EXPECT_TRUE(h_o(OrderedVec(), 0.05).empty());
  const OrderedVec v({0.2, 0.5, 0.99});
  EXPECT_EQ(h_o(v, 1.0), v);
  EXPECT_THROW(OrderedVec({0.3, 0.1}), std::invalid_argument);
  EXPECT_THROW(OrderedVec({0.3, 1.1}), std::invalid_argument);
}

TEST(PartialLeq, Examples) {
  EXPECT_TRUE(partial_leq(OrderedVec({0.1, 0.2}), OrderedVec({0.2})));
  EXPECT_FALSE(partial_leq(OrderedVec({0.3}), OrderedVec({0.2})));
  EXPECT_TRUE(partial_leq(OrderedVec({0.3, 0.9}), OrderedVec()));
  EXPECT_TRUE(partial_leq(OrderedVec(), OrderedVec()));
  EXPECT_FALSE(partial_leq(OrderedVec({0.1}), OrderedVec({0.2, 0.3})));
}

TEST(HoMonotone, ConstructedPairAndRandomTrials) {
  const OrderedVec u({0.01, 0.02, 0.9});
  const OrderedVec v({0.02, 0.05});
  ASSERT_TRUE(partial_leq(u, v));
  EXPECT_EQ(h_o(u, 0.05), OrderedVec({0.01, 0.02}));
  EXPECT_TRUE(partial_leq(h_o(u, 0.05), h_o(v, 0.05)));
  EXPECT_TRUE(partial_leq(h_o(v, 0.05), h_o(v, 0.05)));
  std::mt19937_64 rng(51);
  const auto r = h_o_monotone_check(10'000, 0.05, rng);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.trials, 10'000u);
}

TEST(HoMonotone, RandomPairsSatisfyOrder) {
  std::mt19937_64 rng(52);
  for (int i = 0; i < 2000; ++i) {
    const auto v = random_ordered(rng, 0.1, 8);
    EXPECT_TRUE(partial_leq(random_below(v, rng, 4), v));
  }
}

TEST(PartialOrder, Axioms) {
  std::mt19937_64 rng(53);
  const auto r = partial_order_axioms_check(10'000, rng);
  EXPECT_TRUE(r.passed) << r.failure;
}

TEST(Counterexample, EnumerationReproducesSuprema) {
  const auto r = counterexample_enumeration();
  EXPECT_EQ(r.sup_u2, 7);
  EXPECT_EQ(r.sup_u4, 10);
  EXPECT_FALSE(r.coexist);
  EXPECT_LT(r.sup_u4_given_optimal_u2, r.sup_u4);
  EXPECT_EQ(r.maximizers_u2, (std::vector<std::vector<std::size_t>>{{1, 2, 3}}));
  EXPECT_EQ(r.maximizers_u4, (std::vector<std::vector<std::size_t>>{{1, 4}}));
  // the adaptive rule attains the first supremum but not the second
  EXPECT_EQ(r.proposed_u2, 7);
  EXPECT_LT(r.proposed_u4, r.sup_u4);
}

TEST(Counterexample, FirstStepPosteriorInequalities) {
  // Exact W_{k,1} for each of the two outcomes of X_{k,1}
  const auto belief = counterexample_belief();
  const Rational alpha = counterexample_alpha();
  for (int mask = 0; mask < 16; ++mask) {
    std::vector<Rational> w;
    for (std::size_t k = 0; k < 4; ++k) w.push_back(belief.w(k, belief.update(k, belief.initial(k), 0, (mask >> k) & 1), 1));
    EXPECT_LT(w[0], alpha);
    EXPECT_LT(alpha, w[1]);
    EXPECT_LT(w[1], w[2]);
    EXPECT_LT(w[2], w[3]);
    EXPECT_LE((w[0] + w[1] + w[2]) / 3, Rational(314, 1000));
    EXPECT_GE((w[0] + w[1] + w[3]) / 3, Rational(346, 1000));
    EXPECT_LE((w[0] + w[3]) / 2, Rational(329, 1000));
  }
}

TEST(UniformOptDp, ProposedAttainsOptimumUnderIidModel) {
  const auto rows = uniform_opt_dp(TinyIidInstance{});
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.proposed_utilization, r.sup_utilization) << r.t;
    EXPECT_EQ(r.proposed_run_length, r.sup_run_length) << r.t;
    EXPECT_EQ(r.proposed_detections, r.inf_detections) << r.t;
  }
  EXPECT_EQ(rows[0].sup_utilization, 2);
}

TEST(UniformOptDp, OtherIidInstances) {
  for (const auto& inst : {TinyIidInstance{3, 0.2, 0.3, 0.7, 0.25, 3}, TinyIidInstance{2, 0.1, 0.4, 0.9, 0.15, 4}}) {
    for (const auto& r : uniform_opt_dp(inst)) {
      EXPECT_EQ(r.proposed_utilization, r.sup_utilization) << inst.k << " " << r.t;
      EXPECT_EQ(r.proposed_run_length, r.sup_run_length) << inst.k << " " << r.t;
      EXPECT_EQ(r.proposed_detections, r.inf_detections) << inst.k << " " << r.t;
    }
  }
}

TEST(UniformOptDp, AlphaOneKeepsEverything) {
  TinyIidInstance inst;
  inst.alpha = 1.0;
  inst.k = 3;
  for (const auto& r : uniform_opt_dp(inst)) {
    EXPECT_EQ(r.sup_utilization, Rational(3 * r.t));
    EXPECT_EQ(r.proposed_utilization, Rational(3 * r.t));
    EXPECT_EQ(r.inf_detections, 0);
  }
}

TEST(UniformOptDp, TooLargeInstancesRejected) {
  TinyIidInstance inst;
  inst.horizon = 9;
  EXPECT_THROW(uniform_opt_dp(inst), InstanceTooLarge);
  inst.horizon = 2;
  inst.k = 12;
  EXPECT_THROW(uniform_opt_dp(inst), InstanceTooLarge);
}

TEST(Suites, AllPass) {
  for (const auto& r : run_suite("all")) EXPECT_TRUE(r.passed) << r.name << " " << r.detail;
  EXPECT_THROW(run_suite("nosuch"), std::invalid_argument);
}
