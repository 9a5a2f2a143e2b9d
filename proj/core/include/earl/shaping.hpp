#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "earl/bound_report.hpp"
#include "earl/mdp.hpp"

namespace earl {

/// r_hat(s,a) = r(s,a) + gamma * alpha * E_{s'}[H(s')], kept as its two parts.
struct ShapedReward {
  Eigen::MatrixXd base;
  Eigen::MatrixXd bonus;
  double alpha = 0.0;

  Eigen::MatrixXd shaped() const { return base + bonus; }
};

/// Phi over states, used for f(s,a,s') = gamma Phi(s') - Phi(s).
class PotentialFunction {
 public:
  explicit PotentialFunction(Eigen::VectorXd phi);
  const Eigen::VectorXd& values() const { return phi_; }

 private:
  Eigen::VectorXd phi_;
};

/// Ordered key/value pairs with a title; renders as text or `key=value` lines.
struct AuditSummary {
  std::string title;
  std::vector<std::pair<std::string, std::string>> entries;

  void add(std::string key, double value);
  void add(std::string key, std::string value);
  void write_text(std::ostream& os) const;
  void write_key_values(std::ostream& os) const;
};

ShapedReward shape_rewards(const TabularMDP& mdp, const TabularPolicy& policy, double alpha);

/// Sample-path form r_t + gamma * alpha * H(s_{t+1}).
inline double trajectory_shaped_reward(double reward, double entropy_next, double gamma,
                                       double alpha) {
  return reward + gamma * alpha * entropy_next;
}

/// MDP whose reward is r(s,a) + E_{s'}[gamma Phi(s') - Phi(s)].
TabularMDP potential_shaped_mdp(const TabularMDP& mdp, const PotentialFunction& phi);

struct AbsorbingAudit {
  std::size_t horizon = 0;
  double truncation_residual = 0.0;  // ||Q_h - Q^pi|| for the h-step bootstrap unroll
  double truncation_bound = 0.0;     // gamma^h (C_r + gamma alpha C_H) / (1 - gamma)
  double first_step_gap = 0.0;       // max_s |V_soft_h(s) - V_boot_h(s)|
  double first_step_gap_error = 0.0; // max_s |V_soft_h - V_boot_h - alpha H(s)|
  BoundReport truncation;
  BoundReport first_step;

  AuditSummary summary() const;
};

/// Unrolls both Q backups for `horizon` steps. The bootstrap side must match
/// the exact Q^pi up to the truncation tail; the soft side's state value
/// carries an extra alpha * H(s) at the first step.
AbsorbingAudit absorbing_audit(const TabularMDP& mdp, const TabularPolicy& policy, double alpha,
                               std::size_t horizon);

struct PotentialShapingAudit {
  std::vector<std::vector<std::size_t>> original_argmax;
  std::vector<std::vector<std::size_t>> shaped_argmax;
  std::size_t tied_states = 0;  // states with more than one optimal action
  bool identical = false;
  double max_offset_error = 0.0;  // max |Q'*(s,a) - (Q*(s,a) - Phi(s))|

  AuditSummary summary() const;
};

PotentialShapingAudit potential_shaping_audit(const TabularMDP& mdp,
                                              const PotentialFunction& phi);

struct EntropyShiftReport {
  std::vector<std::vector<std::size_t>> original_argmax;
  std::vector<std::vector<std::size_t>> augmented_argmax;
  std::vector<std::size_t> changed_states;

  bool changed() const { return !changed_states.empty(); }
  AuditSummary summary() const;
};

/// Compares optimal argmax sets at alpha = 0 and at `alpha`.
EntropyShiftReport entropy_policy_shift(const TabularMDP& mdp, double alpha);

/// Argmax-set tie tolerance shared by the shaping audits.
inline constexpr double kArgmaxTieTolerance = 1e-9;

}  // namespace earl
