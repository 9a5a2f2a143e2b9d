#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "earl/environments.hpp"
#include "earl/gae.hpp"
#include "earl/mdp.hpp"
#include "earl/random.hpp"
#include "oracles.hpp"

using namespace earl;

namespace {

std::vector<Transition> random_transitions(std::size_t n, Rng& rng, bool terminal_end) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> h(0.0, std::log(4.0));
  std::vector<Transition> out(n);
  double v = u(rng);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].reward = u(rng);
    out[i].entropy_next = h(rng);
    out[i].value = v;
    v = u(rng);
    out[i].value_next = v;
  }
  out.back().done = terminal_end;
  return out;
}

double r_hat(const Transition& t, double gamma, double alpha) {
  return t.reward + (t.done ? 0.0 : gamma * alpha * t.entropy_next);
}

}  // namespace

TEST(GaeConfig, Validates) {
  EXPECT_THROW((GaeConfig{1.0, 0.5, 0.0}.validate()), std::invalid_argument);
  EXPECT_THROW((GaeConfig{0.9, 1.5, 0.0}.validate()), std::invalid_argument);
  EXPECT_THROW((GaeConfig{0.9, 0.5, -1.0}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((GaeConfig{0.0, 0.0, 0.0}.validate()));
}

TEST(ComputeGae, EmptyTrajectoryThrows) {
  EXPECT_THROW(compute_gae({}, GaeConfig{}), std::invalid_argument);
}

TEST(ComputeGae, LambdaZeroIsTdResidual) {
  Rng rng = make_rng(1);
  const auto tr = random_transitions(10, rng, true);
  const GaeConfig cfg{0.9, 0.0, 0.3};
  const auto adv = compute_gae(tr, cfg);
  for (std::size_t i = 0; i < tr.size(); ++i) EXPECT_EQ(adv[i], td_residual(tr[i], cfg));
}

TEST(ComputeGae, LambdaOneIsReturnMinusBaseline) {
  Rng rng = make_rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const auto tr = random_transitions(12, rng, true);
    const GaeConfig cfg{0.95, 1.0, 0.2};
    const auto adv = compute_gae(tr, cfg);
    for (std::size_t t = 0; t < tr.size(); ++t) {
      double g = 0.0;
      for (std::size_t l = t; l < tr.size(); ++l)
        g += std::pow(0.95, l - t) * r_hat(tr[l], 0.95, 0.2);
      EXPECT_NEAR(adv[t], g - tr[t].value, 1e-12);
    }
  }
}

TEST(ComputeGae, MatchesBruteForceAverage) {
  Rng rng = make_rng(3);
  for (std::size_t len = 1; len <= 6; ++len)
    for (bool terminal : {false, true}) {
      const auto tr = random_transitions(len, rng, terminal);
      const GaeConfig cfg{0.9, 0.5, 0.4};
      const auto adv = compute_gae(tr, cfg);
      for (std::size_t t = 0; t < len; ++t)
        EXPECT_NEAR(adv[t], oracle::brute_force_gae(tr, t, 0.9, 0.5, 0.4), 1e-12) << len << ' ' << t;
    }
}

TEST(ComputeGae, TruncationBootstrapsButStopsAccumulation) {
  Rng rng = make_rng(4);
  auto tr = random_transitions(6, rng, false);
  tr[2].truncated = true;
  const GaeConfig cfg{0.9, 0.7, 0.1};
  const auto adv = compute_gae(tr, cfg);
  EXPECT_NEAR(adv[2], td_residual(tr[2], cfg), 1e-15);
  const std::vector<Transition> head(tr.begin(), tr.begin() + 3);
  const auto adv_head = compute_gae(head, cfg);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(adv[i], adv_head[i], 1e-15);
}

TEST(ComputeGae, TerminalDropsValueAndEntropy) {
  Transition t;
  t.reward = 1.0;
  t.value = 0.5;
  t.value_next = 100.0;
  t.entropy_next = 1.0;
  t.done = true;
  const GaeConfig cfg{0.9, 0.5, 1.0};
  EXPECT_EQ(shaped_reward(t, cfg), 1.0);
  EXPECT_EQ(td_residual(t, cfg), 0.5);
}

TEST(ComputeGae, LinearInRewardsAndValues) {
  Rng rng = make_rng(5);
  auto tr = random_transitions(8, rng, true);
  const GaeConfig cfg{0.9, 0.8, 0.0};
  const auto base = compute_gae(tr, cfg);
  for (auto& t : tr) {
    t.reward *= 3.0;
    t.value *= 3.0;
    t.value_next *= 3.0;
  }
  const auto scaled = compute_gae(tr, cfg);
  for (std::size_t i = 0; i < tr.size(); ++i) EXPECT_NEAR(scaled[i], 3.0 * base[i], 1e-12);
}

TEST(AugmentAdvantage, Examples) {
  EXPECT_EQ(augment_advantage(1.0, 2.0, 0.9, 0.0), 1.0);
  EXPECT_NEAR(augment_advantage(1.0, std::log(4.0), 0.99, 0.1), 1.1372431417508692, 1e-15);
  EXPECT_EQ(augment_advantage(-0.3, 0.0, 0.99, 0.5), -0.3);
}

TEST(ComputeGae, UnbiasedWithExactValues) {
  const TabularMDP m = random_mdp(6, 3, 2, 0.9);
  Rng prng = make_rng(6, 1);
  const TabularPolicy pi = random_policy(3, 2, prng);
  const double alpha = 0.3;
  const QTable q = exact_policy_eval(m, pi, alpha);
  const Eigen::MatrixXd a_exact = advantage(q, pi);
  const GaeConfig cfg{0.9, 0.5, alpha};

  Rng rng = make_rng(6, 2);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(3, 2), sq = sum, count = sum;
  for (int e = 0; e < 100000; ++e) {
    const auto tr = sample_trajectory(m, pi, 5, alpha, rng);
    const double a0 = compute_gae(tr, cfg)[0];
    sum(tr[0].state, tr[0].action) += a0;
    sq(tr[0].state, tr[0].action) += a0 * a0;
    count(tr[0].state, tr[0].action) += 1.0;
  }
  for (Eigen::Index s = 0; s < 3; ++s)
    for (Eigen::Index a = 0; a < 2; ++a) {
      if (count(s, a) < 1000) continue;
      const double mean = sum(s, a) / count(s, a);
      const double se = std::sqrt((sq(s, a) / count(s, a) - mean * mean) / count(s, a));
      EXPECT_LE(std::abs(mean - a_exact(s, a)), 3.0 * se) << s << ',' << a;
    }
}

TEST(Incompatibility, AlphaZeroBothVanish) {
  const TabularMDP m = random_mdp(7, 4, 3, 0.9);
  Rng rng = make_rng(7);
  const TabularPolicy pi = random_policy(4, 3, rng);
  const auto tr = sample_trajectory(m, pi, 3, 0.0, rng);
  const auto rep = incompatibility_demo(m, pi, tr, GaeConfig{0.9, 0.5, 0.0});
  EXPECT_LE(rep.bootstrap_residual, 1e-12);
  EXPECT_LE(rep.soft_residual, 1e-12);
}

TEST(Incompatibility, SoftFailsBootstrapHolds) {
  const TabularMDP m = random_mdp(8, 4, 3, 0.9);
  Rng rng = make_rng(8);
  const TabularPolicy pi = random_policy(4, 3, rng);
  const auto tr = sample_trajectory(m, pi, 3, 0.5, rng);
  const auto rep = incompatibility_demo(m, pi, tr, GaeConfig{0.9, 0.5, 0.5});
  EXPECT_LE(rep.bootstrap_residual, 1e-12);
  EXPECT_GT(rep.soft_residual, 1e-6);
}

TEST(Incompatibility, DeterministicPolicyBothVanish) {
  const TabularMDP m = random_mdp(9, 4, 2, 0.9);
  const TabularPolicy det = TabularPolicy::deterministic({0, 1, 0, 1}, 2);
  Rng rng = make_rng(9);
  const auto tr = sample_trajectory(m, det, 3, 0.5, rng);
  const auto rep = incompatibility_demo(m, det, tr, GaeConfig{0.9, 0.5, 0.5});
  EXPECT_LE(rep.bootstrap_residual, 1e-12);
  EXPECT_LE(rep.soft_residual, 1e-12);
}

TEST(SampleTrajectory, RecordsConsistentQuantities) {
  const TabularMDP m = random_mdp(10, 5, 3, 0.9);
  Rng rng = make_rng(10);
  const TabularPolicy pi = random_policy(5, 3, rng);
  const auto tr = sample_trajectory(m, pi, 20, 0.2, rng);
  const ValueTable v = exact_state_values(m, pi, 0.2);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    EXPECT_NEAR(tr[i].log_prob, std::log(pi(tr[i].state, tr[i].action)), 1e-15);
    EXPECT_NEAR(tr[i].value, v(tr[i].state), 1e-15);
    EXPECT_NEAR(tr[i].entropy_next, policy_entropy(pi, tr[i].next_state), 1e-15);
    if (i + 1 < tr.size()) EXPECT_EQ(tr[i].next_state, tr[i + 1].state);
  }
}
