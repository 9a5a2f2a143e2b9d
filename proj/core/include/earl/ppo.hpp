#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "earl/environments.hpp"
#include "earl/gae.hpp"
#include "earl/nn.hpp"
#include "earl/random.hpp"
#include "earl/record.hpp"
#include "earl/schedule.hpp"

namespace earl {

struct PpoConfig {
  double clip_ratio = 0.2;
  int epochs = 4;           // L
  int minibatch_size = 128;
  double policy_lr = 3e-4;
  double value_lr = 1e-3;
  double max_grad_norm = 0.5;  // <= 0 disables clipping
  GaeConfig gae{0.99, 0.95, 0.0};
  int rollout_steps = 512;  // M
  int iterations = 100;     // N
  ModelKind model = ModelKind::kMlp;
  int hidden = 64;
  EnvOptions env;
  // Ablation switches; both are on in the full method.
  bool shape_rewards = true;
  bool augment_advantages = true;

  void validate() const;
};

/// Per-environment bookkeeping that survives across rollouts.
struct RolloutState {
  int observation = 0;
  double episode_return = 0.0;  // raw rewards of the episode in progress
  bool needs_reset = true;
};

struct Rollout {
  std::vector<Transition> transitions;
  std::vector<double> shaped_rewards;    // r + gamma alpha H(s'), zero bonus on termination
  std::vector<double> episode_returns;   // raw, for episodes that ended in this rollout
  std::vector<double> state_entropies;   // H(s_t) of the rollout policy
  int optimum_captures = 0;
  int suboptimum_captures = 0;
};

/// Runs the policy for `steps` environment steps. Transitions keep the raw
/// reward; the shaped reward uses the entropy of the rollout policy at the
/// successor state.
Rollout collect_rollout(GridEnvironment& env, RolloutState& state, const PolicyModel& policy,
                        const ValueModel& value, int steps, double alpha, double gamma, Rng& rng);

/// One row of an update batch, in feature space.
struct PpoSample {
  Features obs;
  int action = 0;
  double old_log_prob = 0.0;
  double advantage = 0.0;  // after normalization, before augmentation
  Features next_obs;
  bool done = false;       // successor entropy counts as 0
  double value_target = 0.0;
  double weight = 1.0;     // losses are weighted means
};

struct PolicyLossStats {
  double surrogate = 0.0;     // weighted mean of the clipped objective
  double kl = 0.0;            // mean of (r - 1) - log r
  double clip_fraction = 0.0;
  double entropy_next = 0.0;  // weighted mean H(s') under current parameters
};

/// -E[min(r A_aug, clip(r, 1 - eps, 1 + eps) A_aug)] with
/// A_aug = A + gamma alpha H_theta(s'). The entropy term is a function of the
/// parameters and is differentiated. `grad`, when given, is overwritten.
double ppo_policy_loss(const PolicyModel& policy, std::span<const PpoSample> batch,
                       double clip_ratio, double gamma, double alpha,
                       std::vector<double>* grad = nullptr, PolicyLossStats* stats = nullptr);

/// E[gamma alpha H_theta(s')], the augmentation term alone (maximized).
double entropy_augmentation(const PolicyModel& policy, std::span<const PpoSample> batch,
                            double gamma, double alpha, std::vector<double>* grad = nullptr);

/// 0.5 E[(V(s) - target)^2].
double value_regression_loss(const ValueModel& value, std::span<const PpoSample> batch,
                             std::vector<double>* grad = nullptr);

struct UpdateMetrics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double kl = 0.0;
  double entropy_mean = 0.0;
  double clip_fraction = 0.0;
};

/// Builds normalized samples from a rollout and its GAE advantages.
std::vector<PpoSample> make_ppo_batch(const GridEnvironment& env, const Rollout& rollout,
                                      std::span<const double> advantages,
                                      bool normalize = true);

/// L epochs of shuffled minibatch ascent on the clipped surrogate, plus value
/// regression.
UpdateMetrics ppo_update(std::span<const PpoSample> batch, PolicyModel& policy,
                         ValueModel& value, Optimizer& policy_opt, Optimizer& value_opt,
                         const PpoConfig& config, double alpha, Rng& rng);

struct PpoAgent {
  PolicyModel policy;
  ValueModel value;
};

PpoAgent make_ppo_agent(const GridEnvironment& env, const PpoConfig& config, std::uint64_t seed);

/// Algorithm loop: N iterations of rollout, GAE and L update epochs; the
/// schedule steps once per iteration. Extra columns: episodes,
/// optimum_captures, suboptimum_captures, clip_fraction.
TrainingRecord train(EnvKind kind, const PpoConfig& config, TemperatureSchedule schedule,
                     std::uint64_t seed);

}  // namespace earl
