#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "earl/environments.hpp"
#include "earl/mdp.hpp"
#include "earl/operators.hpp"
#include "earl/random.hpp"
#include "earl/shaping.hpp"
#include "oracles.hpp"

using namespace earl;

TEST(ShapeRewards, AlphaZeroIsBitExact) {
  const TabularMDP m = random_mdp(1, 6, 3, 0.9);
  Rng rng = make_rng(1);
  const ShapedReward sr = shape_rewards(m, random_policy(6, 3, rng), 0.0);
  EXPECT_EQ(sr.shaped(), m.reward());
}

TEST(ShapeRewards, DeterministicPolicyHasNoBonus) {
  const TabularMDP m = random_mdp(2, 3, 2, 0.9);
  const ShapedReward sr = shape_rewards(m, TabularPolicy::deterministic({1, 0, 1}, 2), 3.0);
  EXPECT_EQ(sr.bonus.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ShapeRewards, UniformPolicyClosedForm) {
  const TabularMDP m = random_mdp(3, 5, 4, 0.99);
  const ShapedReward sr = shape_rewards(m, TabularPolicy::uniform(5, 4), 0.1);
  EXPECT_NEAR(0.099 * std::log(4.0), 0.13724314175086919, 1e-15);
  EXPECT_LE((sr.bonus.array() - 0.099 * std::log(4.0)).abs().maxCoeff(), 1e-12);
}

TEST(ShapeRewards, BonusRangeAndLinearity) {
  Rng rng = make_rng(4);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const TabularMDP m = random_mdp(seed, 8, 4, 0.9);
    const TabularPolicy pi = random_policy(8, 4, rng);
    const ShapedReward a = shape_rewards(m, pi, 0.3);
    const ShapedReward b = shape_rewards(m, pi, 0.5);
    const ShapedReward ab = shape_rewards(m, pi, 0.8);
    EXPECT_GE(a.bonus.minCoeff(), 0.0);
    EXPECT_LE(a.bonus.maxCoeff(), 0.9 * 0.3 * std::log(4.0) + 1e-12);
    EXPECT_LE((ab.bonus - a.bonus - b.bonus).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((a.shaped() - a.base - a.bonus).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(TrajectoryShapedReward, Examples) {
  EXPECT_EQ(trajectory_shaped_reward(1.0, 0.0, 0.9, 0.5), 1.0);
  EXPECT_NEAR(trajectory_shaped_reward(0.0, std::log(4.0), 0.99, 0.1), 0.13724314175086919, 1e-15);
}

TEST(TrajectoryShapedReward, MonteCarloMatchesTable) {
  const TabularMDP m = random_mdp(5, 6, 3, 0.9);
  Rng rng = make_rng(5, 1);
  const TabularPolicy pi = random_policy(6, 3, rng);
  const ShapedReward sr = shape_rewards(m, pi, 0.4);
  const std::size_t s = 2, a = 1;
  std::vector<double> row(6);
  for (std::size_t k = 0; k < 6; ++k) row[k] = m.prob(s, a, k);
  std::discrete_distribution<int> draw(row.begin(), row.end());
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const int sp = draw(rng);
    const double x = trajectory_shaped_reward(m.reward()(s, a), oracle::entropy_row(pi, sp), 0.9, 0.4);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  EXPECT_LE(std::abs(mean - sr.shaped()(s, a)), 3.0 * se);
}

TEST(PotentialFunction, RejectsNonFinite) {
  EXPECT_THROW(PotentialFunction(Eigen::Vector2d(1.0, NAN)), std::invalid_argument);
}

TEST(AbsorbingAudit, AlphaZeroNoGap) {
  const TabularMDP m = random_mdp(6, 5, 3, 0.9);
  Rng rng = make_rng(6);
  const auto audit = absorbing_audit(m, random_policy(5, 3, rng), 0.0, 200);
  EXPECT_NEAR(audit.first_step_gap, 0.0, 1e-12);
  EXPECT_FALSE(audit.truncation.violated);
}

TEST(AbsorbingAudit, TruncationAndFirstStepGap) {
  const TabularMDP m = random_mdp(7, 8, 4, 0.9);
  Rng rng = make_rng(7);
  const TabularPolicy pi = random_policy(8, 4, rng);
  const auto audit = absorbing_audit(m, pi, 0.2, 200);
  EXPECT_LE(audit.truncation_residual, 1e-8);
  EXPECT_LE(audit.truncation_residual, audit.truncation_bound + 1e-12);
  EXPECT_FALSE(audit.truncation.violated);
  EXPECT_FALSE(audit.first_step.violated);
  double max_h = 0.0;
  for (std::size_t s = 0; s < 8; ++s) max_h = std::max(max_h, oracle::entropy_row(pi, s));
  EXPECT_NEAR(audit.first_step_gap, 0.2 * max_h, 1e-10);
}

TEST(PotentialShaping, ZeroPotentialIsIdentity) {
  const TabularMDP m = random_mdp(8, 6, 3, 0.9);
  const auto audit = potential_shaping_audit(m, PotentialFunction(Eigen::VectorXd::Zero(6)));
  EXPECT_TRUE(audit.identical);
  EXPECT_LE(audit.max_offset_error, 1e-9);
}

TEST(PotentialShaping, RandomPotentialPreservesArgmax) {
  Rng rng = make_rng(9);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const TabularMDP m = random_mdp(seed, 7, 3, 0.9);
    const PotentialFunction phi(random_uniform(7, 1, -5.0, 5.0, rng));
    const auto audit = potential_shaping_audit(m, phi);
    EXPECT_TRUE(audit.identical) << seed;
    EXPECT_LE(audit.max_offset_error, 1e-8);
  }
}

TEST(EntropyShift, WitnessChangesOptimalAction) {
  // s0: a0 -> s1 (r = 0), a1 -> s2 (r = 0.1). s1 absorbing with equal actions
  // (high lookahead entropy); s2 absorbing with very unequal actions.
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(6, 3);
  p(0, 1) = 1.0;
  p(1, 2) = 1.0;
  p(2, 1) = p(3, 1) = 1.0;
  p(4, 2) = p(5, 2) = 1.0;
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(3, 2);
  r(0, 1) = 0.1;
  r(2, 1) = -10.0;
  const TabularMDP m(p, r, 0.9, Eigen::Vector3d(1.0, 0.0, 0.0));
  const auto shift = entropy_policy_shift(m, 1.0);
  ASSERT_TRUE(shift.changed());
  EXPECT_EQ(shift.changed_states.front(), 0u);
  EXPECT_EQ(shift.original_argmax[0], std::vector<std::size_t>{1});
  EXPECT_EQ(shift.augmented_argmax[0], std::vector<std::size_t>{0});
  EXPECT_FALSE(entropy_policy_shift(m, 0.0).changed());
}

TEST(AuditSummary, Formats) {
  AuditSummary s{"demo", {}};
  s.add("x", 1.5);
  s.add("name", std::string("abc"));
  std::ostringstream kv;
  s.write_key_values(kv);
  EXPECT_NE(kv.str().find("name=abc"), std::string::npos);
  EXPECT_NE(kv.str().find("x=1.5"), std::string::npos);
}
