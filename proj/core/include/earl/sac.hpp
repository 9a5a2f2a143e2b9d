#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "earl/environments.hpp"
#include "earl/nn.hpp"
#include "earl/random.hpp"
#include "earl/record.hpp"
#include "earl/schedule.hpp"

namespace earl {

struct ReplayTransition {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
  bool done = false;
};

/// Fixed-capacity ring; once full, new items overwrite the oldest.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void add(const ReplayTransition& t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const ReplayTransition& at(std::size_t slot) const { return items_.at(slot); }

  /// n slot indices drawn uniformly with replacement.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;
  std::vector<ReplayTransition> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<ReplayTransition> items_;
};

struct SacConfig {
  std::size_t capacity = 100000;
  std::size_t batch_size = 64;
  double q_lr = 3e-4;
  double value_lr = 3e-4;
  double policy_lr = 3e-4;
  double tau = 0.005;
  double gamma = 0.99;
  int hidden = 64;
  ModelKind model = ModelKind::kMlp;
  int entropy_samples = 5;
  int warmup_steps = 1000;          // uniform-random actions, no updates
  int steps_per_iteration = 1000;   // one metrics row per this many env steps
  int iterations = 20;
  int alpha_decay_interval = 1000;  // env steps per schedule step
  double max_grad_norm = 0.0;
  EnvOptions env;

  void validate() const;
};

/// Q_w, V_phi, its polyak trail V_phibar and pi_theta.
struct SacNets {
  Network q;
  Network value;
  Network target_value;
  PolicyModel policy;
  double tau = 0.005;

  static SacNets make(int feature_dim, int n_actions, ModelKind kind, int hidden, double tau,
                      std::uint64_t seed);
  void update_target();
  /// Euclidean distance between value and target parameters.
  double target_divergence() const;
};

/// r + gamma (1 - done) (V_target(s') + alpha H(s')).
double q_target(double reward, double v_target_next, double entropy_next, double gamma,
                double alpha, bool done);

/// Q_w(s, a') for a freshly sampled a'; no entropy term.
double v_target(const Network& q_net, std::span<const int> features, int sampled_action);

/// The soft-operator counterpart Q_w(s, a') - alpha log pi(a'|s), kept for
/// side-by-side comparison.
double soft_v_target(const Network& q_net, std::span<const int> features, int sampled_action,
                     double log_prob, double alpha);

/// Mean of -log p over the samples.
double entropy_estimate(std::span<const double> log_probs);

/// Draws n actions from pi(.|s) and returns entropy_estimate of their log-probs.
double sampled_entropy(const PolicyModel& policy, std::span<const int> features, int n, Rng& rng);

int sample_action(const PolicyModel& policy, std::span<const int> features, Rng& rng);

/// Mean over states of KL(pi_theta(.|s) || softmax(Q_w(s,.) / alpha)); the
/// target is held fixed.
double projection_loss(const PolicyModel& policy, const Network& q_net,
                       std::span<const Features> states, double alpha,
                       std::vector<double>* grad = nullptr);

/// 0.5 mean (Q_w(s,a) - y)^2 over the batch.
double q_regression_loss(const Network& q_net, std::span<const Features> states,
                         std::span<const int> actions, std::span<const double> targets,
                         std::vector<double>* grad = nullptr);

/// 0.5 mean (V(s) - y)^2 over the batch.
double v_regression_loss(const Network& value_net, std::span<const Features> states,
                         std::span<const double> targets, std::vector<double>* grad = nullptr);

struct PolicyUpdateMetrics {
  double loss_before = 0.0;
  double loss_after = 0.0;
};

/// One optimizer step on the projection loss. Requires alpha > 0.
PolicyUpdateMetrics policy_update(std::span<const Features> states, const Network& q_net,
                                  PolicyModel& policy, double alpha, Optimizer& opt,
                                  double max_grad_norm = 0.0);

/// Per-step loop: act, store, sample, critic step, actor step, value step,
/// polyak. Extra columns: episodes, optimum_captures, suboptimum_captures,
/// buffer_size, target_divergence.
TrainingRecord sac_train(EnvKind kind, const SacConfig& config, TemperatureSchedule schedule,
                         std::uint64_t seed);

}  // namespace earl
