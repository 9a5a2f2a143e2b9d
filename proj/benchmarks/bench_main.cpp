#include <benchmark/benchmark.h>

#include <vector>

#include "earl/environments.hpp"
#include "earl/gae.hpp"
#include "earl/mdp.hpp"
#include "earl/nn.hpp"
#include "earl/operators.hpp"
#include "earl/random.hpp"

using namespace earl;

static void BM_SoftBackup(benchmark::State& state) {
  const auto S = static_cast<std::size_t>(state.range(0));
  const TabularMDP m = random_mdp(1, S, 5, 0.99);
  Rng rng = make_rng(1);
  const TabularPolicy pi = random_policy(S, 5, rng);
  QTable q = QTable::Zero(S, 5);
  for (auto _ : state) {
    q = soft_backup(q, m, pi, 0.1);
    benchmark::DoNotOptimize(q.data());
  }
}
BENCHMARK(BM_SoftBackup)->Arg(20)->Arg(100)->Arg(400);

static void BM_ExactPolicyEval(benchmark::State& state) {
  const auto S = static_cast<std::size_t>(state.range(0));
  const TabularMDP m = random_mdp(2, S, 4, 0.9);
  Rng rng = make_rng(2);
  const TabularPolicy pi = random_policy(S, 4, rng);
  for (auto _ : state) benchmark::DoNotOptimize(exact_policy_eval(m, pi, 0.1).data());
}
BENCHMARK(BM_ExactPolicyEval)->Arg(20)->Arg(100);

static void BM_ValueIteration(benchmark::State& state) {
  const TabularMDP m = to_tabular(EnvKind::kDiagonal, 0.99);
  for (auto _ : state) benchmark::DoNotOptimize(value_iteration(m, 0.05, 1e-8).values.data());
}
BENCHMARK(BM_ValueIteration);

static void BM_ComputeGae(benchmark::State& state) {
  Rng rng = make_rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Transition> tr(static_cast<std::size_t>(state.range(0)));
  for (auto& t : tr) t.reward = u(rng), t.value = u(rng), t.value_next = u(rng);
  const GaeConfig cfg{0.99, 0.95, 0.05};
  for (auto _ : state) benchmark::DoNotOptimize(compute_gae(tr, cfg).data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ComputeGae)->Arg(512)->Arg(4096);

static void BM_MlpForwardBackward(benchmark::State& state) {
  const Network net(ModelKind::kMlp, 200, 4, 64, 4);
  const std::vector<int> features{17, 133};
  std::vector<double> out(4), grad(net.n_params()), d_out{0.1, -0.2, 0.3, 0.0};
  Network::Cache cache;
  for (auto _ : state) {
    net.forward(features, out, &cache);
    net.backward(features, cache, d_out, grad);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_MlpForwardBackward);

static void BM_EnvStep(benchmark::State& state) {
  auto env = make_environment(EnvKind::kTwoColors, 5);
  env->reset();
  Rng rng = make_rng(5);
  std::uniform_int_distribution<int> act(0, 3);
  for (auto _ : state) {
    const StepResult r = env->step(act(rng));
    if (r.done || r.truncated) env->reset();
    benchmark::DoNotOptimize(r.observation);
  }
}
BENCHMARK(BM_EnvStep);

BENCHMARK_MAIN();
