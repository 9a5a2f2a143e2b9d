#include "earl/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "earl/random.hpp"

namespace earl {
namespace {

double sup_norm(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

Eigen::MatrixXd lookahead_q(const ValueTable& v, const TabularMDP& mdp) {
  return mdp.reward() + mdp.discount() * expected_next(mdp, v);
}

double stop_threshold(double tol, double gamma) {
  return gamma > 0.0 ? tol * (1.0 - gamma) / gamma : std::numeric_limits<double>::infinity();
}

}  // namespace

QTable soft_backup(const QTable& q, const TabularMDP& mdp, const TabularPolicy& policy,
                   double alpha) {
  const auto S = static_cast<Eigen::Index>(mdp.n_states());
  const auto A = static_cast<Eigen::Index>(mdp.n_actions());
  Eigen::VectorXd v_soft(S);
  for (Eigen::Index s = 0; s < S; ++s) {
    double acc = 0.0;
    for (Eigen::Index a = 0; a < A; ++a) {
      const double p = policy.probs()(s, a);
      if (p > 0.0) acc += p * (q(s, a) - alpha * std::log(p));
    }
    v_soft(s) = acc;
  }
  return mdp.reward() + mdp.discount() * expected_next(mdp, v_soft);
}

QTable bootstrap_backup(const QTable& q, const TabularMDP& mdp, const TabularPolicy& policy,
                        double alpha) {
  const Eigen::VectorXd v = policy_average(q, policy) + alpha * policy_entropies(policy);
  return mdp.reward() + mdp.discount() * expected_next(mdp, v);
}

QTable q_backup(BackupKind kind, const QTable& q, const TabularMDP& mdp,
                const TabularPolicy& policy, double alpha) {
  switch (kind) {
    case BackupKind::kSoftQ: return soft_backup(q, mdp, policy, alpha);
    case BackupKind::kBootstrapQ: return bootstrap_backup(q, mdp, policy, alpha);
    default: throw std::invalid_argument("q_backup: not a Q-backup kind");
  }
}

ValueTable v_backup(const ValueTable& v, const TabularMDP& mdp, double alpha,
                    const TabularPolicy& policy) {
  const Eigen::MatrixXd target =
      mdp.reward() + mdp.discount() * expected_next(mdp, v + alpha * policy_entropies(policy));
  return policy_average(target, policy);
}

ValueTable optimal_v_backup(const ValueTable& v, const TabularMDP& mdp, double alpha,
                            const Eigen::VectorXd& entropy_ref) {
  const Eigen::MatrixXd target =
      mdp.reward() + mdp.discount() * expected_next(mdp, v + alpha * entropy_ref);
  return target.rowwise().maxCoeff();
}

Eigen::VectorXd lookahead_entropy(const ValueTable& v, const TabularMDP& mdp, double alpha) {
  if (alpha <= 0.0) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mdp.n_states()));
  return policy_entropies(soft_improvement_step(lookahead_q(v, mdp), alpha));
}

ValueTable v_backup(const ValueTable& v, const TabularMDP& mdp, double alpha) {
  return optimal_v_backup(v, mdp, alpha, lookahead_entropy(v, mdp, alpha));
}

ValueIterationResult value_iteration(const TabularMDP& mdp, double alpha, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
  if (alpha < 0.0) throw std::invalid_argument("value_iteration: alpha must be nonnegative");
  constexpr std::size_t kMaxSweeps = 1'000'000;
  constexpr std::size_t kJointSweeps = 20'000;
  const double gamma = mdp.discount();
  const double threshold = stop_threshold(tol, gamma);

  ValueTable v = ValueTable::Zero(static_cast<Eigen::Index>(mdp.n_states()));
  std::size_t sweeps = 0;

  // Joint phase: entropy table follows the values.
  if (alpha > 0.0) {
    for (std::size_t k = 0; k < kJointSweeps; ++k) {
      ValueTable next = v_backup(v, mdp, alpha);
      ++sweeps;
      const double delta = (next - v).cwiseAbs().maxCoeff();
      v = std::move(next);
      if (delta <= threshold) break;
    }
  }

  // Frozen phase: a fixed entropy table makes the backup a gamma-contraction.
  const Eigen::VectorXd entropy = lookahead_entropy(v, mdp, alpha);
  for (std::size_t k = 0;; ++k) {
    if (k >= kMaxSweeps) throw NumericError("value_iteration: sweep cap exceeded");
    ValueTable next = optimal_v_backup(v, mdp, alpha, entropy);
    ++sweeps;
    const double delta = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    if (delta <= threshold) break;
  }

  QTable q = mdp.reward() + gamma * expected_next(mdp, v + alpha * entropy);
  std::vector<std::size_t> greedy(mdp.n_states());
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    Eigen::Index best = 0;
    q.row(s).maxCoeff(&best);
    greedy[static_cast<std::size_t>(s)] = static_cast<std::size_t>(best);
  }
  return ValueIterationResult{std::move(v), std::move(q),
                              TabularPolicy::deterministic(greedy, mdp.n_actions()),
                              entropy, sweeps};
}

TabularPolicy soft_improvement_step(const QTable& q, double alpha) {
  if (!(alpha > 0.0))
    throw std::domain_error("soft_improvement_step: alpha must be positive");
  return TabularPolicy::from_logits(q / alpha);
}

std::vector<std::vector<std::size_t>> argmax_sets(const QTable& q, double tie_tol) {
  std::vector<std::vector<std::size_t>> sets(static_cast<std::size_t>(q.rows()));
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    const double top = q.row(s).maxCoeff();
    for (Eigen::Index a = 0; a < q.cols(); ++a)
      if (q(s, a) >= top - tie_tol) sets[static_cast<std::size_t>(s)].push_back(
          static_cast<std::size_t>(a));
  }
  return sets;
}

Eigen::VectorXd kl_divergence_rows(const TabularPolicy& p, const TabularPolicy& q) {
  Eigen::VectorXd kl = Eigen::VectorXd::Zero(p.probs().rows());
  for (Eigen::Index s = 0; s < kl.size(); ++s) {
    for (Eigen::Index a = 0; a < p.probs().cols(); ++a) {
      const double ps = p.probs()(s, a);
      const double qs = q.probs()(s, a);
      if (ps <= 0.0) continue;
      if (qs <= 0.0) {
        kl(s) = std::numeric_limits<double>::infinity();
        break;
      }
      kl(s) += ps * std::log(ps / qs);
    }
  }
  return kl;
}

QTable iterate_to_fixed_point(const std::function<QTable(const QTable&)>& backup,
                              QTable start, double residual_tol, std::size_t max_iter) {
  QTable q = std::move(start);
  for (std::size_t k = 0; k < max_iter; ++k) {
    QTable next = backup(q);
    const double residual = sup_norm(next - q);
    q = std::move(next);
    if (residual <= residual_tol) return q;
  }
  throw NumericError("fixed-point iteration did not reach the residual target");
}

std::vector<BoundReport> contraction_audit(const TabularMDP& mdp, double alpha,
                                           std::size_t trials, std::uint64_t seed,
                                           double operator_gain) {
  std::vector<BoundReport> reports;
  reports.reserve(2 * trials);
  const auto S = static_cast<Eigen::Index>(mdp.n_states());
  const double gamma = mdp.discount();
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed, t);
    const ValueTable v1 = random_uniform(S, 1, -10.0, 10.0, rng);
    const ValueTable v2 = random_uniform(S, 1, -10.0, 10.0, rng);
    const TabularPolicy policy = random_policy(mdp.n_states(), mdp.n_actions(), rng);
    const Eigen::VectorXd entropy_ref =
        policy_entropies(random_policy(mdp.n_states(), mdp.n_actions(), rng));
    const double dist = (v1 - v2).cwiseAbs().maxCoeff();

    const ValueTable pi1 = operator_gain * v_backup(v1, mdp, alpha, policy);
    const ValueTable pi2 = operator_gain * v_backup(v2, mdp, alpha, policy);
    reports.push_back(BoundReport::check("contraction/T_pi", Relation::kAtMost,
                                         (pi1 - pi2).cwiseAbs().maxCoeff(), gamma * dist,
                                         1e-9, seed + t));

    const ValueTable st1 = operator_gain * optimal_v_backup(v1, mdp, alpha, entropy_ref);
    const ValueTable st2 = operator_gain * optimal_v_backup(v2, mdp, alpha, entropy_ref);
    reports.push_back(BoundReport::check("contraction/T_star", Relation::kAtMost,
                                         (st1 - st2).cwiseAbs().maxCoeff(), gamma * dist,
                                         1e-9, seed + t));
  }
  return reports;
}

ConjugacyAudit conjugacy_audit(const TabularMDP& mdp, const TabularPolicy& policy,
                               double alpha, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0xC0);
  const QTable probe = random_uniform(static_cast<Eigen::Index>(mdp.n_states()),
                                      static_cast<Eigen::Index>(mdp.n_actions()), -10.0, 10.0,
                                      rng);
  ConjugacyAudit out;
  out.single_step = BoundReport::check(
      "conjugacy/single_step", Relation::kAtMost,
      sup_norm(soft_backup(probe, mdp, policy, alpha) -
               bootstrap_backup(probe, mdp, policy, alpha)),
      1e-12, 0.0, seed);

  const QTable zero = QTable::Zero(probe.rows(), probe.cols());
  const QTable q_soft = iterate_to_fixed_point(
      [&](const QTable& q) { return soft_backup(q, mdp, policy, alpha); }, zero, 1e-12);
  const QTable q_boot = iterate_to_fixed_point(
      [&](const QTable& q) { return bootstrap_backup(q, mdp, policy, alpha); }, zero, 1e-12);
  out.fixed_point = BoundReport::check("conjugacy/fixed_point", Relation::kAtMost,
                                       sup_norm(q_soft - q_boot), 1e-8, 0.0, seed);
  return out;
}

BoundReport optimal_error_bound_audit(const TabularMDP& mdp, double alpha, std::uint64_t seed) {
  constexpr double kTol = 1e-10;
  const ValueIterationResult augmented = value_iteration(mdp, alpha, kTol);
  const ValueIterationResult plain = value_iteration(mdp, 0.0, kTol);
  const double gamma = mdp.discount();
  const double bound =
      gamma / (1.0 - gamma) * alpha * std::log(static_cast<double>(mdp.n_actions()));
  return BoundReport::check("optimal_error_bound", Relation::kAtMost,
                            (augmented.values - plain.values).cwiseAbs().maxCoeff(), bound,
                            1e-9, seed);
}

SoftPolicyIterationAudit soft_policy_iteration_audit(const TabularMDP& mdp, double alpha,
                                                     std::size_t iterations,
                                                     std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x5E);
  return soft_policy_iteration_audit(
      mdp, alpha, iterations, random_policy(mdp.n_states(), mdp.n_actions(), rng), seed);
}

SoftPolicyIterationAudit soft_policy_iteration_audit(const TabularMDP& mdp, double alpha,
                                                     std::size_t iterations,
                                                     const TabularPolicy& start,
                                                     std::uint64_t seed) {
  if (iterations < 1) throw std::invalid_argument("soft policy iteration needs >= 1 round");
  if (!(alpha > 0.0)) throw std::domain_error("soft policy iteration needs alpha > 0");
  constexpr std::size_t kFixedPointRounds = 2000;

  SoftPolicyIterationAudit out{{}, {}, exact_policy_eval(mdp, start, alpha), start};
  for (std::size_t k = 0; k < iterations; ++k) {
    TabularPolicy next = soft_improvement_step(out.final_q, alpha);
    QTable q_next = exact_policy_eval(mdp, next, alpha);
    out.monotonicity.push_back(BoundReport::check("soft_improvement/monotone",
                                                  Relation::kAtLeast,
                                                  (q_next - out.final_q).minCoeff(), 0.0, 1e-10,
                                                  seed + k));
    out.final_q = std::move(q_next);
    out.final_policy = std::move(next);
  }

  // Continue the same iteration to its own fixed point.
  QTable q = out.final_q;
  for (std::size_t k = 0; k < kFixedPointRounds; ++k) {
    QTable next = exact_policy_eval(mdp, soft_improvement_step(q, alpha), alpha);
    const double change = sup_norm(next - q);
    q = std::move(next);
    if (change <= 1e-12) break;
  }
  out.convergence = BoundReport::check("soft_improvement/converged", Relation::kAtMost,
                                       sup_norm(out.final_q - q), 1e-6, 0.0, seed);
  return out;
}

PerfDiffAudit perf_diff_audit(const TabularMDP& mdp, const TabularPolicy& pi_old,
                              const TabularPolicy& pi_new, double alpha, std::uint64_t seed) {
  const Eigen::VectorXd rho_new = state_visitation(mdp, pi_new);
  auto expected_under_new = [&](const Eigen::MatrixXd& table) {
    return rho_new.dot(policy_average(table, pi_new));
  };

  PerfDiffAudit out;
  {
    const QTable q_old = exact_policy_eval(mdp, pi_old, 0.0);
    const double eta_old = mdp.initial_dist().dot(policy_average(q_old, pi_old));
    const double eta_new = discounted_return(mdp, pi_new, 0.0);
    out.classical = BoundReport::check("perf_diff/classical", Relation::kEqual, eta_new,
                                       eta_old + expected_under_new(advantage(q_old, pi_old)),
                                       1e-8, seed);
  }
  {
    const QTable q_old = exact_policy_eval(mdp, pi_old, alpha);
    const double eta_old = mdp.initial_dist().dot(policy_average(q_old, pi_old));
    const double eta_new = discounted_return(mdp, pi_new, alpha);
    const Eigen::VectorXd entropy_gap = policy_entropies(pi_new) - policy_entropies(pi_old);
    const Eigen::MatrixXd term =
        advantage(q_old, pi_old) + mdp.discount() * alpha * expected_next(mdp, entropy_gap);
    out.augmented = BoundReport::check("perf_diff/augmented", Relation::kEqual, eta_new,
                                       eta_old + expected_under_new(term), 1e-8, seed);
  }
  return out;
}

SurrogateAudit surrogate_bound_audit(const TabularMDP& mdp, const TabularPolicy& pi_old,
                                     const TabularPolicy& pi_new, double alpha,
                                     std::uint64_t seed) {
  const double gamma = mdp.discount();
  const QTable q_old = exact_policy_eval(mdp, pi_old, alpha);
  const double eta_old = mdp.initial_dist().dot(policy_average(q_old, pi_old));
  const Eigen::MatrixXd adv = advantage(q_old, pi_old);
  const Eigen::VectorXd entropy_gap = policy_entropies(pi_new) - policy_entropies(pi_old);
  const Eigen::MatrixXd term = adv + gamma * alpha * expected_next(mdp, entropy_gap);

  SurrogateAudit out;
  out.eta_new = discounted_return(mdp, pi_new, alpha);
  out.surrogate = eta_old + state_visitation(mdp, pi_old).dot(policy_average(term, pi_new));
  out.exact_surrogate =
      eta_old + state_visitation(mdp, pi_new).dot(policy_average(term, pi_new));
  out.epsilon = adv.cwiseAbs().maxCoeff();
  out.zeta = kl_divergence_rows(pi_old, pi_new).maxCoeff();
  out.excluded = !std::isfinite(out.zeta);

  const double scale = out.epsilon * gamma / ((1.0 - gamma) * (1.0 - gamma));
  const double zeta = out.excluded ? 0.0 : out.zeta;
  out.linear = BoundReport::check("surrogate/linear_kl", Relation::kAtLeast, out.eta_new,
                                  out.surrogate - 2.0 * scale * zeta, 1e-10, seed);
  out.squared = BoundReport::check("surrogate/squared_kl(diagnostic)", Relation::kAtLeast,
                                   out.eta_new, out.surrogate - 4.0 * scale * zeta * zeta,
                                   1e-10, seed);
  return out;
}

SoftObjectiveAudit soft_objective_audit(const TabularMDP& mdp, const TabularPolicy& policy,
                                        double alpha, std::uint64_t seed) {
  const Eigen::VectorXd entropy = policy_entropies(policy);
  const Eigen::VectorXd rho = state_visitation(mdp, policy);

  SoftObjectiveAudit out;
  out.max_entropy_objective =
      rho.dot(policy_average(mdp.reward(), policy) + alpha * entropy);
  out.augmented_return = discounted_return(mdp, policy, alpha);
  const QTable q_soft = iterate_to_fixed_point(
      [&](const QTable& q) { return soft_backup(q, mdp, policy, alpha); },
      QTable::Zero(static_cast<Eigen::Index>(mdp.n_states()),
                   static_cast<Eigen::Index>(mdp.n_actions())),
      1e-12);
  out.soft_fixed_point_return = mdp.initial_dist().dot(policy_average(q_soft, policy));

  out.consistency = BoundReport::check("soft_objective/consistent", Relation::kEqual,
                                       out.augmented_return, out.soft_fixed_point_return,
                                       1e-8, seed);
  out.inconsistency = BoundReport::check(
      "soft_objective/first_step_gap", Relation::kEqual,
      out.max_entropy_objective - out.augmented_return,
      alpha * mdp.initial_dist().dot(entropy), 1e-8, seed);
  return out;
}

}  // namespace earl
