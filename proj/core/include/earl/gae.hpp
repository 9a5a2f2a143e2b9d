#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "earl/mdp.hpp"
#include "earl/random.hpp"

namespace earl {

/// One environment step as seen by the advantage estimator and learners.
///
/// `reward` is the raw environment reward; shaping happens in compute_gae.
/// On true termination (`done`) the successor contributes neither value nor
/// entropy. On a time-limit cut (`truncated`) the successor value still
/// bootstraps but advantage accumulation stops.
struct Transition {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
  double entropy_next = 0.0;
  double value = 0.0;
  double value_next = 0.0;
  double log_prob = 0.0;
  bool done = false;
  bool truncated = false;
};

struct GaeConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double alpha = 0.0;

  void validate() const;
};

/// r_t + gamma * alpha * H(s_{t+1}), with the entropy dropped on termination.
double shaped_reward(const Transition& t, const GaeConfig& config);

/// delta_t = r_hat_t + gamma (1 - done) V(s_{t+1}) - V(s_t).
double td_residual(const Transition& t, const GaeConfig& config);

/// Backward recursion A_t = delta_t + gamma lambda (1 - end_t) A_{t+1}, where
/// end_t marks termination or truncation.
std::vector<double> compute_gae(std::span<const Transition> trajectory, const GaeConfig& config);

/// A_t + gamma * alpha * H_current(s_{t+1}).
inline double augment_advantage(double advantage, double entropy_next_current_policy,
                                double gamma, double alpha) {
  return advantage + gamma * alpha * entropy_next_current_policy;
}

/// Rollout of `policy` on a tabular model starting from rho0. Fills state,
/// action, reward, next_state, entropy_next, log_prob and the exact augmented
/// values V(s), V(s') at temperature `alpha`; never sets done or truncated.
std::vector<Transition> sample_trajectory(const TabularMDP& mdp, const TabularPolicy& policy,
                                          std::size_t length, double alpha, Rng& rng);

struct IncompatibilityReport {
  double bootstrap_residual = 0.0;  // max_t |n-step average - GAE sum| under bootstrap shaping
  double soft_residual = 0.0;       // smallest such residual over the soft associations
  double soft_residual_unattached = 0.0;  // one-step residuals use the raw reward
  double soft_residual_attached = 0.0;    // one-step residuals add -alpha log pi to each reward
};

/// Compares the exponentially weighted n-step advantages with the
/// one-step-residual sum for both operators on a trajectory sampled from a
/// known tabular model. Exact values come from `mdp` and `policy`; the
/// trajectory supplies states, actions, rewards and boundary flags.
IncompatibilityReport incompatibility_demo(const TabularMDP& mdp, const TabularPolicy& policy,
                                           std::span<const Transition> trajectory,
                                           const GaeConfig& config);

}  // namespace earl
