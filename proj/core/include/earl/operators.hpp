#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "earl/bound_report.hpp"
#include "earl/mdp.hpp"

namespace earl {

enum class BackupKind { kSoftQ, kBootstrapQ, kPolicyV, kOptimalV };

/// Soft backup with temperature on the log term:
/// r(s,a) + gamma E_{s'}[ E_{a'~pi}[Q(s',a') - alpha log pi(a'|s')] ].
QTable soft_backup(const QTable& q, const TabularMDP& mdp, const TabularPolicy& policy,
                   double alpha);

/// Bootstrap backup: r(s,a) + gamma E_{s'}[ E_{a'~pi}[Q(s',a')] + alpha H(s') ].
QTable bootstrap_backup(const QTable& q, const TabularMDP& mdp, const TabularPolicy& policy,
                        double alpha);

/// Dispatches to one of the two Q backups above.
QTable q_backup(BackupKind kind, const QTable& q, const TabularMDP& mdp,
                const TabularPolicy& policy, double alpha);

/// T_alpha^pi V(s) = E_{a~pi}[ r_hat(s,a) + gamma E_{s'}[V(s')] ], with r_hat
/// built from the entropy of `policy`.
ValueTable v_backup(const ValueTable& v, const TabularMDP& mdp, double alpha,
                    const TabularPolicy& policy);

/// T_alpha^* V(s) = max_a [ r(s,a) + gamma E_{s'}[ V(s') + alpha H(s') ] ] for a
/// fixed entropy table H.
ValueTable optimal_v_backup(const ValueTable& v, const TabularMDP& mdp, double alpha,
                            const Eigen::VectorXd& entropy_ref);

/// T_alpha^* with the entropy table taken from the one-step softmax reference
/// policy of `v` (see lookahead_entropy).
ValueTable v_backup(const ValueTable& v, const TabularMDP& mdp, double alpha);

/// Entropy of softmax((r + gamma P V) / alpha) in every state; zeros when alpha
/// is 0.
Eigen::VectorXd lookahead_entropy(const ValueTable& v, const TabularMDP& mdp, double alpha);

struct ValueIterationResult {
  ValueTable values;
  QTable q;  // r_hat + gamma P V under the final entropy table
  TabularPolicy greedy;
  Eigen::VectorXd entropy_ref;
  std::size_t sweeps = 0;
};

/// Entropy-augmented value iteration.
///
/// Sweeps T_alpha^* while refreshing the entropy table from the lookahead
/// softmax policy, then freezes that table and runs the (contracting) backup
/// until ||V_{k+1} - V_k|| <= tol (1 - gamma) / gamma, so the returned values
/// are within `tol` of the frozen operator's fixed point.
ValueIterationResult value_iteration(const TabularMDP& mdp, double alpha, double tol);

/// pi(a|s) = exp(Q(s,a)/alpha) / Z(s). Throws std::domain_error for alpha <= 0.
TabularPolicy soft_improvement_step(const QTable& q, double alpha);

/// Per-state set of actions within `tie_tol` of the row maximum.
std::vector<std::vector<std::size_t>> argmax_sets(const QTable& q, double tie_tol);

/// D_KL(p || q) per state; +inf where p > 0 and q = 0.
Eigen::VectorXd kl_divergence_rows(const TabularPolicy& p, const TabularPolicy& q);

/// Iterates `backup` from `start` until the sup-norm residual is at most
/// `residual_tol`. Throws NumericError after `max_iter` applications.
QTable iterate_to_fixed_point(const std::function<QTable(const QTable&)>& backup,
                              QTable start, double residual_tol,
                              std::size_t max_iter = 1'000'000);

// ---------------------------------------------------------------------------
// Audits. Each returns BoundReports; asserted claims carry the stated
// tolerance, diagnostic claims are flagged in their label.

/// Random pairs V1, V2 with entries in [-10, 10]; checks
/// ||T V1 - T V2|| <= gamma ||V1 - V2|| + 1e-9 for T_alpha^pi under a random
/// policy and for T_alpha^* under a random entropy table. `operator_gain`
/// scales the backup outputs and exists only as a negative control.
std::vector<BoundReport> contraction_audit(const TabularMDP& mdp, double alpha,
                                           std::size_t trials, std::uint64_t seed,
                                           double operator_gain = 1.0);

struct ConjugacyAudit {
  BoundReport single_step;  // ||soft(Q) - bootstrap(Q)|| <= 1e-12 on a random Q
  BoundReport fixed_point;  // ||Q_soft* - Q_boot*|| <= 1e-8
};
ConjugacyAudit conjugacy_audit(const TabularMDP& mdp, const TabularPolicy& policy,
                               double alpha, std::uint64_t seed = 0);

/// ||V~* - V*|| <= gamma / (1 - gamma) alpha log|A| + 1e-9.
BoundReport optimal_error_bound_audit(const TabularMDP& mdp, double alpha,
                                      std::uint64_t seed = 0);

struct SoftPolicyIterationAudit {
  std::vector<BoundReport> monotonicity;  // one per round, min(Q_{k+1} - Q_k) >= -1e-10
  BoundReport convergence;                // ||Q_last - Q_fixed|| <= 1e-6
  QTable final_q;
  TabularPolicy final_policy;
};
/// Alternates exact evaluation and the softmax improvement step from a
/// random start policy.
SoftPolicyIterationAudit soft_policy_iteration_audit(const TabularMDP& mdp, double alpha,
                                                     std::size_t iterations,
                                                     std::uint64_t seed);
/// Same, starting from a given policy.
SoftPolicyIterationAudit soft_policy_iteration_audit(const TabularMDP& mdp, double alpha,
                                                     std::size_t iterations,
                                                     const TabularPolicy& start,
                                                     std::uint64_t seed = 0);

struct PerfDiffAudit {
  BoundReport classical;  // alpha = 0 identity
  BoundReport augmented;  // entropy-augmented identity at the given alpha
};
PerfDiffAudit perf_diff_audit(const TabularMDP& mdp, const TabularPolicy& pi_old,
                              const TabularPolicy& pi_new, double alpha,
                              std::uint64_t seed = 0);

struct SurrogateAudit {
  double eta_new = 0.0;
  double surrogate = 0.0;       // L_hat under rho_{pi_old}
  double exact_surrogate = 0.0; // same expectation under rho_{pi_new}
  double epsilon = 0.0;         // max |A^{pi_old}|
  double zeta = 0.0;            // max_s KL(pi_old || pi_new)
  bool excluded = false;        // zeta infinite
  BoundReport linear;           // eta_new >= L_hat - 2 eps gamma / (1-gamma)^2 zeta
  BoundReport squared;          // eta_new >= L_hat - 4 eps gamma / (1-gamma)^2 zeta^2 (diagnostic)
};
SurrogateAudit surrogate_bound_audit(const TabularMDP& mdp, const TabularPolicy& pi_old,
                                     const TabularPolicy& pi_new, double alpha,
                                     std::uint64_t seed = 0);

struct SoftObjectiveAudit {
  double max_entropy_objective = 0.0;  // entropy counted from t = 0
  double augmented_return = 0.0;       // entropy counted from t = 1
  double soft_fixed_point_return = 0.0;
  BoundReport consistency;    // augmented_return == soft_fixed_point_return
  BoundReport inconsistency;  // J - eta == alpha E_{rho0}[H(s0)]
};
SoftObjectiveAudit soft_objective_audit(const TabularMDP& mdp, const TabularPolicy& policy,
                                        double alpha, std::uint64_t seed = 0);

}  // namespace earl
