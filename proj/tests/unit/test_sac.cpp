#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "earl/environments.hpp"
#include "earl/mdp.hpp"
#include "earl/operators.hpp"
#include "earl/random.hpp"
#include "earl/sac.hpp"
#include "oracles.hpp"

using namespace earl;

namespace {

constexpr int kIn = 10;
constexpr int kActions = 4;

void randomize(Network& net, Rng& rng, double scale) {
  std::normal_distribution<double> n01(0.0, scale);
  for (double& w : net.params()) w = n01(rng);
}

std::vector<Features> random_states(std::size_t n, Rng& rng) {
  std::uniform_int_distribution<int> f(0, kIn - 1);
  std::vector<Features> out(n);
  for (auto& x : out) x = {f(rng)};
  return out;
}

void set_table(Network& net, const Eigen::MatrixXd& table) {
  auto p = net.params();
  for (Eigen::Index s = 0; s < table.rows(); ++s)
    for (Eigen::Index a = 0; a < table.cols(); ++a)
      p[static_cast<std::size_t>(s * table.cols() + a)] = table(s, a);
}

}  // namespace

TEST(QTarget, Examples) {
  EXPECT_EQ(q_target(1.5, 2.0, 1.0, 0.9, 0.5, true), 1.5);
  EXPECT_DOUBLE_EQ(q_target(1.0, 2.0, 1.0, 0.9, 0.0, false), 1.0 + 0.9 * 2.0);
  EXPECT_NEAR(q_target(1.0, 2.0, std::log(4.0), 0.9, 0.5, false), 3.42383, 1e-5);
}

TEST(VTarget, DeterministicPolicyPicksItsAction) {
  Network q(ModelKind::kTabular, 2, 3, 0, 0);
  Eigen::MatrixXd t(2, 3);
  t << 1, 2, 3, 4, 5, 6;
  set_table(q, t);
  PolicyModel pi(Network(ModelKind::kTabular, 2, 3, 0, 0));
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2, 3);
  z(1, 2) = 1000.0;
  set_table(pi.net(), z);
  Rng rng = make_rng(1);
  const Features s{1};
  for (int i = 0; i < 10; ++i) EXPECT_EQ(v_target(q, s, sample_action(pi, s, rng)), 6.0);
}

TEST(VTarget, MonteCarloMatchesPolicyAverage) {
  Rng rng = make_rng(2);
  Network q(ModelKind::kMlp, kIn, kActions, 8, 2);
  randomize(q, rng, 1.0);
  PolicyModel pi(Network(ModelKind::kMlp, kIn, kActions, 8, 3));
  randomize(pi.net(), rng, 1.0);
  const Features s{4};
  std::vector<double> qs(kActions);
  q.forward(s, qs, nullptr);
  const auto p = pi.probs(s);
  const double exact = std::inner_product(p.begin(), p.end(), qs.begin(), 0.0);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = v_target(q, s, sample_action(pi, s, rng));
    sum += y;
    sq += y * y;
  }
  const double mean = sum / n;
  EXPECT_LE(std::abs(mean - exact), 3.0 * std::sqrt((sq / n - mean * mean) / n));
}

TEST(VTarget, SoftCounterpartDiffersByLogTerm) {
  Rng rng = make_rng(3);
  Network q(ModelKind::kMlp, kIn, kActions, 8, 4);
  randomize(q, rng, 1.0);
  PolicyModel pi(Network(ModelKind::kMlp, kIn, kActions, 8, 5));
  randomize(pi.net(), rng, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Features s{i % kIn};
    const int a = sample_action(pi, s, rng);
    const double lp = pi.log_prob(s, a);
    EXPECT_NEAR(v_target(q, s, a) - soft_v_target(q, s, a, lp, 0.3), 0.3 * lp, 1e-14);
  }
}

TEST(EntropyEstimate, Deterministic) {
  EXPECT_EQ(entropy_estimate(std::vector<double>(5, 0.0)), 0.0);
  PolicyModel pi(Network(ModelKind::kTabular, 1, 4, 0, 0));
  pi.net().params()[2] = 1000.0;
  Rng rng = make_rng(4);
  EXPECT_EQ(sampled_entropy(pi, Features{0}, 5, rng), 0.0);
  EXPECT_THROW(entropy_estimate(std::vector<double>{}), std::invalid_argument);
}

TEST(EntropyEstimate, UniformConverges) {
  PolicyModel pi(Network(ModelKind::kTabular, 1, 4, 0, 0));
  Rng rng = make_rng(5);
  // Every sample equals log 4 exactly for the uniform distribution.
  const double h = sampled_entropy(pi, Features{0}, 1000000, rng);
  EXPECT_NEAR(h, std::log(4.0), 1e-9);  // summation roundoff over 1e6 terms
}

TEST(EntropyEstimate, SingleSampleIsUnbiased) {
  Rng rng = make_rng(6);
  PolicyModel pi(Network(ModelKind::kTabular, 1, 5, 0, 0));
  randomize(pi.net(), rng, 1.0);
  const double exact = pi.entropy_at(Features{0});
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sampled_entropy(pi, Features{0}, 1, rng);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  EXPECT_LE(std::abs(mean - exact), 3.0 * std::sqrt((sq / n - mean * mean) / n));
}

TEST(ProjectionLoss, ZeroAtTarget) {
  Rng rng = make_rng(7);
  Network q(ModelKind::kTabular, kIn, kActions, 0, 0);
  randomize(q, rng, 1.0);
  const double alpha = 0.4;
  PolicyModel pi(Network(ModelKind::kTabular, kIn, kActions, 0, 0));
  for (std::size_t i = 0; i < q.n_params(); ++i) pi.net().params()[i] = q.params()[i] / alpha;
  const auto states = random_states(20, rng);
  std::vector<double> grad;
  EXPECT_NEAR(projection_loss(pi, q, states, alpha, &grad), 0.0, 1e-14);
  for (double g : grad) EXPECT_NEAR(g, 0.0, 1e-14);
  EXPECT_THROW(projection_loss(pi, q, states, 0.0), std::domain_error);
}

TEST(ProjectionLoss, GradientMatchesFiniteDifferences) {
  Rng rng = make_rng(8);
  for (ModelKind kind : {ModelKind::kTabular, ModelKind::kMlp}) {
    for (int trial = 0; trial < 20; ++trial) {
      Network q(kind, kIn, kActions, 8, 100 + static_cast<std::uint64_t>(trial));
      randomize(q, rng, 1.0);
      PolicyModel pi(Network(kind, kIn, kActions, 8, static_cast<std::uint64_t>(trial)));
      randomize(pi.net(), rng, 0.7);
      const auto states = random_states(12, rng);
      std::vector<double> grad;
      projection_loss(pi, q, states, 0.5, &grad);
      const auto fd = oracle::finite_difference(
          [&](std::span<double>) { return projection_loss(pi, q, states, 0.5); },
          pi.net().params());
      EXPECT_LE(oracle::relative_error(grad, fd), 1e-5) << to_string(kind) << ' ' << trial;
    }
  }
}

TEST(Regressions, GradientsMatchFiniteDifferences) {
  Rng rng = make_rng(9);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_int_distribution<int> act(0, kActions - 1);
  for (ModelKind kind : {ModelKind::kTabular, ModelKind::kMlp}) {
    for (int trial = 0; trial < 20; ++trial) {
      Network q(kind, kIn, kActions, 8, static_cast<std::uint64_t>(trial));
      Network v(kind, kIn, 1, 8, 50 + static_cast<std::uint64_t>(trial));
      randomize(q, rng, 0.7);
      randomize(v, rng, 0.7);
      const auto states = random_states(12, rng);
      std::vector<int> actions(12);
      std::vector<double> targets(12);
      for (int& a : actions) a = act(rng);
      for (double& y : targets) y = n01(rng);
      std::vector<double> gq, gv;
      q_regression_loss(q, states, actions, targets, &gq);
      v_regression_loss(v, states, targets, &gv);
      const auto fq = oracle::finite_difference(
          [&](std::span<double>) { return q_regression_loss(q, states, actions, targets); },
          q.params());
      const auto fv = oracle::finite_difference(
          [&](std::span<double>) { return v_regression_loss(v, states, targets); }, v.params());
      EXPECT_LE(oracle::relative_error(gq, fq), 1e-5) << trial;
      EXPECT_LE(oracle::relative_error(gv, fv), 1e-5) << trial;
    }
  }
}

TEST(PolicyUpdate, TabularConvergesToSoftImprovement) {
  Rng rng = make_rng(10);
  const int S = 5;
  Network q(ModelKind::kTabular, S, kActions, 0, 0);
  randomize(q, rng, 1.0);
  PolicyModel pi(Network(ModelKind::kTabular, S, kActions, 0, 0));
  std::vector<Features> states;
  for (int s = 0; s < S; ++s) states.push_back({s});
  const double alpha = 0.5;
  Sgd opt(5.0);
  PolicyUpdateMetrics m;
  for (int i = 0; i < 5000; ++i) m = policy_update(states, q, pi, alpha, opt);
  EXPECT_LE(m.loss_after, m.loss_before + 1e-15);

  QTable table(S, kActions);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < kActions; ++a) table(s, a) = q.params()[static_cast<std::size_t>(s * kActions + a)];
  const TabularPolicy target = soft_improvement_step(table, alpha);
  for (int s = 0; s < S; ++s) {
    const auto p = pi.probs(Features{s});
    double tv = 0.0;
    for (int a = 0; a < kActions; ++a) tv += 0.5 * std::abs(p[a] - target(s, a));
    EXPECT_LE(tv, 1e-4) << s;
  }
}

TEST(Targets, RealizeBootstrapBackupInExpectation) {
  const std::size_t S = 6, A = 3;
  const TabularMDP m = random_mdp(11, S, A, 0.9);
  Rng rng = make_rng(11);
  const TabularPolicy pi = random_policy(S, A, rng);
  const QTable q = random_uniform(S, A, -2.0, 2.0, rng);
  Network q_net(ModelKind::kTabular, static_cast<int>(S), static_cast<int>(A), 0, 0);
  set_table(q_net, q);
  const double alpha = 0.7;
  // Exact expectation of y_V over a' ~ pi, then of y_Q over s' ~ P.
  Eigen::VectorXd v(S), h(S);
  for (std::size_t s = 0; s < S; ++s) {
    v(static_cast<Eigen::Index>(s)) = 0.0;
    for (std::size_t a = 0; a < A; ++a)
      v(static_cast<Eigen::Index>(s)) +=
          pi(s, a) * v_target(q_net, Features{static_cast<int>(s)}, static_cast<int>(a));
    h(static_cast<Eigen::Index>(s)) = oracle::entropy_row(pi, s);
  }
  const QTable expected = bootstrap_backup(q, m, pi, alpha);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      double y = 0.0;
      for (std::size_t sp = 0; sp < S; ++sp) {
        const auto i = static_cast<Eigen::Index>(sp);
        y += m.prob(s, a, sp) * q_target(m.reward()(static_cast<Eigen::Index>(s),
                                                    static_cast<Eigen::Index>(a)),
                                         v(i), h(i), 0.9, alpha, false);
      }
      EXPECT_NEAR(y, expected(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)), 1e-12);
    }
}

TEST(ReplayBuffer, RingOverwritesOldest) {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) buf.add({i, 0, 0.0, 0, false});
  EXPECT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.at(0).state, 3);
  EXPECT_EQ(buf.at(1).state, 4);
  EXPECT_EQ(buf.at(2).state, 2);
  EXPECT_THROW(ReplayBuffer(0), std::invalid_argument);
  ReplayBuffer empty(4);
  Rng rng = make_rng(0);
  EXPECT_THROW(empty.sample(1, rng), std::logic_error);
}

TEST(ReplayBuffer, SamplingIsUniform) {
  const std::size_t cap = 100;
  ReplayBuffer buf(cap);
  for (std::size_t i = 0; i < cap; ++i) buf.add({static_cast<int>(i), 0, 0.0, 0, false});
  Rng rng = make_rng(12);
  std::vector<double> counts(cap, 0.0);
  const std::size_t draws = 1000000;
  const auto batch = buf.sample(draws, rng);
  ASSERT_EQ(batch.size(), draws);
  for (const auto& t : batch) counts[static_cast<std::size_t>(t.state)] += 1.0;
  const double expected = static_cast<double>(draws) / cap;
  double chi2 = 0.0, worst = 0.0;
  for (double c : counts) {
    chi2 += (c - expected) * (c - expected) / expected;
    worst = std::max(worst, std::abs(c - expected) / expected);
  }
  EXPECT_GT(1.0 - boost::math::cdf(boost::math::chi_squared(cap - 1), chi2), 0.01);
  EXPECT_LE(worst, 0.05);
  Rng a = make_rng(13), b = make_rng(13);
  EXPECT_EQ(buf.sample_indices(50, a), buf.sample_indices(50, b));
}

TEST(SacNets, PolyakTrail) {
  SacNets nets = SacNets::make(kIn, kActions, ModelKind::kMlp, 8, 1.0, 0);
  Rng rng = make_rng(14);
  randomize(nets.value, rng, 1.0);
  EXPECT_GT(nets.target_divergence(), 0.0);
  nets.update_target();
  EXPECT_EQ(nets.target_divergence(), 0.0);
  nets.tau = 0.25;
  const std::vector<double> before(nets.target_value.params().begin(),
                                   nets.target_value.params().end());
  randomize(nets.value, rng, 1.0);
  nets.update_target();
  for (std::size_t i = 0; i < before.size(); ++i) {
    const double lo = std::min(before[i], nets.value.params()[i]);
    const double hi = std::max(before[i], nets.value.params()[i]);
    EXPECT_GE(nets.target_value.params()[i], lo - 1e-15);
    EXPECT_LE(nets.target_value.params()[i], hi + 1e-15);
  }
}

TEST(SacConfig, Validates) {
  SacConfig c;
  EXPECT_NO_THROW(c.validate());
  c.tau = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SacConfig{};
  c.entropy_samples = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(SacTrain, ShortRunIsDeterministic) {
  SacConfig cfg;
  cfg.iterations = 3;
  cfg.steps_per_iteration = 200;
  cfg.warmup_steps = 100;
  cfg.batch_size = 16;
  cfg.hidden = 8;
  cfg.alpha_decay_interval = 100;
  const auto sched = TemperatureSchedule::exponential(0.2, 0.9);
  const auto a = sac_train(EnvKind::kDiagonal, cfg, sched, 1);
  const auto b = sac_train(EnvKind::kDiagonal, cfg, sched, 1);
  ASSERT_EQ(a.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.rows[i].raw_return_mean, b.rows[i].raw_return_mean);
    EXPECT_EQ(a.rows[i].value_loss, b.rows[i].value_loss);
    EXPECT_TRUE(std::isfinite(a.rows[i].policy_loss));
  }
  // Decays at env steps 100, 200, ..., 500.
  EXPECT_NEAR(a.rows[2].alpha, 0.2 * std::pow(0.9, 5), 1e-15);
  EXPECT_EQ(a.rows[2].extra[3], 600.0);
}

TEST(SacTrain, TauOneTracksValueNet) {
  SacConfig cfg;
  cfg.iterations = 1;
  cfg.steps_per_iteration = 150;
  cfg.warmup_steps = 50;
  cfg.batch_size = 8;
  cfg.hidden = 8;
  cfg.tau = 1.0;
  const auto rec = sac_train(EnvKind::kDiagonal, cfg, TemperatureSchedule::constant(0.1), 2);
  EXPECT_EQ(rec.rows[0].extra[4], 0.0);
}
