#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace earl {

/// State values V(s), one entry per state.
using ValueTable = Eigen::VectorXd;
/// Action values Q(s, a), rows are states and columns are actions.
using QTable = Eigen::MatrixXd;

/// Raised when a linear solve or an iterative scheme produces a non-finite or
/// unconverged result.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Finite discounted MDP (S, A, P, r, rho0, gamma).
///
/// Transition probabilities are stored as a dense (S*A) x S matrix whose row
/// `s * n_actions + a` is the distribution P(. | s, a). Construction validates
/// every simplex and the discount; an invalid model never exists.
class TabularMDP {
 public:
  static constexpr double kSimplexTolerance = 1e-12;

  TabularMDP(Eigen::MatrixXd transition, Eigen::MatrixXd reward, double discount,
             Eigen::VectorXd initial_dist);

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  double discount() const { return discount_; }
  /// Stored bound C_r >= max |r(s, a)|.
  double reward_bound() const { return reward_bound_; }

  const Eigen::MatrixXd& transition() const { return transition_; }
  const Eigen::MatrixXd& reward() const { return reward_; }
  const Eigen::VectorXd& initial_dist() const { return initial_dist_; }

  std::size_t row(std::size_t state, std::size_t action) const {
    return state * n_actions_ + action;
  }
  double prob(std::size_t state, std::size_t action, std::size_t next) const {
    return transition_(static_cast<Eigen::Index>(row(state, action)),
                       static_cast<Eigen::Index>(next));
  }

  /// Same dynamics with a different reward table.
  TabularMDP with_reward(Eigen::MatrixXd reward) const;

 private:
  std::size_t n_states_;
  std::size_t n_actions_;
  Eigen::MatrixXd transition_;
  Eigen::MatrixXd reward_;
  double discount_;
  Eigen::VectorXd initial_dist_;
  double reward_bound_;
};

/// Row-stochastic table pi(a | s).
class TabularPolicy {
 public:
  explicit TabularPolicy(Eigen::MatrixXd probs);

  static TabularPolicy uniform(std::size_t n_states, std::size_t n_actions);
  /// One-hot rows selecting `actions[s]` in each state.
  static TabularPolicy deterministic(const std::vector<std::size_t>& actions,
                                     std::size_t n_actions);
  /// Row-wise softmax of a logit table.
  static TabularPolicy from_logits(const Eigen::MatrixXd& logits);

  std::size_t n_states() const { return static_cast<std::size_t>(probs_.rows()); }
  std::size_t n_actions() const { return static_cast<std::size_t>(probs_.cols()); }
  const Eigen::MatrixXd& probs() const { return probs_; }
  double operator()(std::size_t state, std::size_t action) const {
    return probs_(static_cast<Eigen::Index>(state), static_cast<Eigen::Index>(action));
  }

 private:
  Eigen::MatrixXd probs_;
};

/// Shannon entropy in nats of one distribution, with 0 log 0 = 0.
double distribution_entropy(const Eigen::Ref<const Eigen::RowVectorXd>& probs);

/// H(s) = -sum_a pi(a|s) log pi(a|s). Throws std::out_of_range for a bad state.
double policy_entropy(const TabularPolicy& policy, std::size_t state);

/// H(s) for every state.
Eigen::VectorXd policy_entropies(const TabularPolicy& policy);

/// E_{s' ~ P(.|s,a)}[f(s')] as an S x A table.
Eigen::MatrixXd expected_next(const TabularMDP& mdp, const Eigen::VectorXd& f);

/// P_pi(s, s') = sum_a pi(a|s) P(s'|s,a).
Eigen::MatrixXd policy_transition(const TabularMDP& mdp, const TabularPolicy& policy);

/// V(s) = sum_a pi(a|s) Q(s,a).
ValueTable policy_average(const QTable& q, const TabularPolicy& policy);

/// Q^pi for the entropy-shaped reward r + gamma*alpha*E[H(s')], by a direct
/// solve of the (S*A)-dimensional linear system Q = r_hat + gamma P Pi Q.
QTable exact_policy_eval(const TabularMDP& mdp, const TabularPolicy& policy, double alpha);

/// V^pi for the same shaped reward, solved on the state side:
/// (I - gamma P_pi) V = sum_a pi r_hat.
ValueTable exact_state_values(const TabularMDP& mdp, const TabularPolicy& policy,
                              double alpha);

/// eta(pi) = E_{s0, a0}[Q^pi(s0, a0)]. With alpha = 0 this is the plain
/// expected discounted reward.
double discounted_return(const TabularMDP& mdp, const TabularPolicy& policy, double alpha);

/// Unnormalized discounted visitation (I - gamma P_pi^T)^{-1} rho0.
Eigen::VectorXd state_visitation(const TabularMDP& mdp, const TabularPolicy& policy);

/// A(s,a) = Q(s,a) - sum_b pi(b|s) Q(s,b).
Eigen::MatrixXd advantage(const QTable& q, const TabularPolicy& policy);

}  // namespace earl
