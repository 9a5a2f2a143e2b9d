#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "earl/environments.hpp"

using namespace earl;

namespace {

constexpr int kUp = 0, kDown = 1, kLeft = 2, kRight = 3;

}  // namespace

TEST(Diagonal, GreedyRightHitsSuboptimum) {
  DiagonalEnv env;
  env.reset();
  StepResult r;
  int steps = 0;
  double ret = 0.0;
  while (!r.done && !r.truncated) {
    r = env.step(kRight);
    ret += r.reward;
    ++steps;
  }
  EXPECT_EQ(steps, 9);
  EXPECT_EQ(ret, 4.5);
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.capture, Capture::kSuboptimum);
}

TEST(Diagonal, GreedyDownHitsOptimum) {
  DiagonalEnv env;
  env.reset();
  StepResult r;
  int steps = 0;
  while (!r.done) {
    r = env.step(kDown);
    ++steps;
  }
  EXPECT_EQ(steps, 9);
  EXPECT_EQ(r.reward, 5.0);
  EXPECT_EQ(r.capture, Capture::kOptimum);
}

TEST(Diagonal, StationaryPolicyTruncates) {
  DiagonalEnv env;
  env.reset();
  StepResult r;
  double ret = 0.0;
  while (!r.done && !r.truncated) {
    r = env.step(kUp);
    ret += r.reward;
  }
  EXPECT_EQ(ret, 0.0);
  EXPECT_FALSE(r.done);
  EXPECT_EQ(env.steps(), 100);
  EXPECT_THROW(env.step(kUp), std::logic_error);
}

TEST(Diagonal, StepEdgeCases) {
  DiagonalEnv env;
  env.reset();
  EXPECT_EQ(env.step(kUp).observation, 0);
  EXPECT_EQ(env.step(kLeft).observation, 0);
  EXPECT_THROW(env.step(4), std::out_of_range);
  EXPECT_THROW(env.step(-1), std::out_of_range);
  for (int i = 0; i < 8; ++i) EXPECT_EQ(env.step(kRight).reward, 0.0);
  const StepResult r = env.step(kRight);
  EXPECT_EQ(env.state().agent, (Cell{0, 9}));
  EXPECT_EQ(r.reward, 4.5);
  EXPECT_TRUE(r.done);
}

TEST(Diagonal, EncodingRoundTrip) {
  DiagonalEnv env;
  EXPECT_EQ(env.reset(), 0);
  EXPECT_EQ(env.features(0), std::vector<int>{0});
  for (int id = 0; id < env.n_state_ids(); ++id) EXPECT_EQ(env.encode(env.decode(id)), id);
}

TEST(Diagonal, EpisodeReturnsAreInRewardSet) {
  DiagonalEnv env(3);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> act(0, 3);
  for (int e = 0; e < 200; ++e) {
    env.reset();
    StepResult r;
    double ret = 0.0;
    while (!r.done && !r.truncated) {
      r = env.step(act(rng));
      ret += r.reward;
      EXPECT_GE(env.state().agent.row, 0);
      EXPECT_LT(env.state().agent.row, 10);
      EXPECT_GE(env.state().agent.col, 0);
      EXPECT_LT(env.state().agent.col, 10);
    }
    EXPECT_TRUE(ret == 0.0 || ret == 4.5 || ret == 5.0) << ret;
  }
}

TEST(TwoColors, SuboptimumResetsToStart) {
  TwoColorsEnv env(1);
  env.reset();
  // Walk along row 9 then up column 9; avoid the goal by checking it first.
  int guard = 0;
  StepResult r;
  while (r.capture != Capture::kSuboptimum && guard++ < 100) {
    const Cell a = env.state().agent;
    const int action = a.col < 9 ? kRight : kUp;
    r = env.step(action);
  }
  ASSERT_EQ(r.capture, Capture::kSuboptimum);
  EXPECT_EQ(r.reward, 0.5);
  EXPECT_EQ(env.state().agent, (Cell{9, 0}));
  EXPECT_FALSE(r.done);
}

TEST(TwoColors, OptimumRelocatesAwayFromAgentAndSuboptimum) {
  TwoColorsEnv env(2);
  env.reset();
  int captures = 0;
  for (int t = 0; t < 499 && captures < 20; ++t) {
    const Cell a = env.state().agent, g = env.goal();
    int action = a.row < g.row ? kDown : a.row > g.row ? kUp : a.col < g.col ? kRight : kLeft;
    // Step around the suboptimum cell.
    if (env.move(a, action) == (Cell{0, 9})) action = kDown;
    const StepResult r = env.step(action);
    if (r.capture == Capture::kOptimum) {
      ++captures;
      EXPECT_EQ(r.reward, 1.0);
      EXPECT_NE(env.goal(), env.state().agent);
      EXPECT_NE(env.goal(), (Cell{0, 9}));
    }
  }
  EXPECT_GE(captures, 10);
}

TEST(TwoColors, EncodingExample) {
  TwoColorsEnv env;
  GridState s;
  s.agent = {9, 0};
  s.goal = Cell{3, 3};
  const auto f = env.features(env.encode(s));
  EXPECT_EQ(f, (std::vector<int>{90, 100 + 33}));
  for (int id = 0; id < env.n_state_ids(); id += 37) EXPECT_EQ(env.encode(env.decode(id)), id);
}

TEST(TwoColors, RelocationIsUniform) {
  TwoColorsEnv env(5);
  env.reset();
  std::map<int, int> counts;
  // reset() relocates with the agent on the start cell.
  for (int i = 0; i < 100000; ++i) {
    env.reset();
    const Cell g = env.goal();
    ++counts[g.row * 10 + g.col];
  }
  // Eligible: 100 cells minus start and suboptimum.
  EXPECT_EQ(counts.count(90), 0u);
  EXPECT_EQ(counts.count(9), 0u);
  const double expected = 100000.0 / 98.0;
  double chi2 = 0.0;
  for (int c = 0; c < 100; ++c) {
    if (c == 90 || c == 9) continue;
    const double o = counts.count(c) ? counts[c] : 0.0;
    chi2 += (o - expected) * (o - expected) / expected;
  }
  const boost::math::chi_squared dist(97);
  EXPECT_GT(1.0 - boost::math::cdf(dist, chi2), 0.01);
}

TEST(TwoColors, EpisodeLengthAndRewards) {
  TwoColorsEnv env(6);
  env.reset();
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> act(0, 3);
  StepResult r;
  int steps = 0;
  while (!r.truncated) {
    r = env.step(act(rng));
    ++steps;
    EXPECT_TRUE(r.reward == 0.0 || r.reward == 0.5 || r.reward == 1.0);
    EXPECT_FALSE(r.done);
  }
  EXPECT_EQ(steps, 500);
}

TEST(Environments, ReplayIsDeterministic) {
  for (EnvKind kind : {EnvKind::kDiagonal, EnvKind::kTwoColors}) {
    auto a = make_environment(kind, 11);
    auto b = make_environment(kind, 11);
    a->reset();
    b->reset();
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> act(0, 3);
    for (int t = 0; t < 90; ++t) {
      const int x = act(rng);
      const StepResult ra = a->step(x), rb = b->step(x);
      EXPECT_EQ(ra.observation, rb.observation);
      EXPECT_EQ(ra.reward, rb.reward);
      if (ra.done || ra.truncated) break;
    }
  }
}

TEST(Environments, ParseAndRender) {
  EXPECT_EQ(parse_env_kind("twocolors"), EnvKind::kTwoColors);
  EXPECT_THROW(parse_env_kind("maze"), std::invalid_argument);
  DiagonalEnv env;
  env.reset();
  const std::string grid = env.render();
  EXPECT_EQ(grid[0], 'A');
  EXPECT_NE(grid.find('S'), std::string::npos);
  EXPECT_NE(grid.find('G'), std::string::npos);
}

TEST(RandomMdp, DeterministicAndValid) {
  const TabularMDP a = random_mdp(42, 7, 3, 0.9);
  const TabularMDP b = random_mdp(42, 7, 3, 0.9);
  EXPECT_EQ(a.transition(), b.transition());
  EXPECT_EQ(a.reward(), b.reward());
  EXPECT_EQ(a.initial_dist(), b.initial_dist());
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const TabularMDP m = random_mdp(s, 1 + s % 20, 1 + s % 5, 0.5);
    EXPECT_LE((m.transition().rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_LE(m.reward().cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(ToTabular, DiagonalPathValues) {
  const TabularMDP m = to_tabular(EnvKind::kDiagonal, 0.99);
  EXPECT_EQ(m.n_states(), 100u);
  EXPECT_EQ(m.initial_dist()(0), 1.0);
  // Entering (9,0) from (8,0) moving down pays 5.0.
  EXPECT_EQ(m.reward()(80, kDown), 5.0);
  EXPECT_EQ(m.reward()(8, kRight), 4.5);
  EXPECT_EQ(m.prob(90, kUp, 90), 1.0);
  EXPECT_EQ(m.reward()(90, kUp), 0.0);
}

TEST(WriteTrajectory, OneLinePerTransition) {
  std::vector<Transition> tr(2);
  tr[1].done = true;
  tr[1].reward = 4.5;
  std::ostringstream os;
  write_trajectory(os, tr);
  const std::string text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}
