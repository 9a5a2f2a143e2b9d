#include "earl/shaping.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "earl/operators.hpp"

namespace earl {
namespace {

std::string format_sets(const std::vector<std::vector<std::size_t>>& sets) {
  std::ostringstream os;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    if (s) os << ' ';
    os << '{';
    for (std::size_t i = 0; i < sets[s].size(); ++i) os << (i ? "," : "") << sets[s][i];
    os << '}';
  }
  return os.str();
}

constexpr double kSolveTol = 1e-11;

}  // namespace

PotentialFunction::PotentialFunction(Eigen::VectorXd phi) : phi_(std::move(phi)) {
  if (!phi_.allFinite()) throw std::invalid_argument("potential must be finite");
}

void AuditSummary::add(std::string key, double value) {
  std::ostringstream os;
  os << std::setprecision(17) << value;
  entries.emplace_back(std::move(key), os.str());
}

void AuditSummary::add(std::string key, std::string value) {
  entries.emplace_back(std::move(key), std::move(value));
}

void AuditSummary::write_text(std::ostream& os) const {
  os << "== " << title << " ==\n";
  std::size_t width = 0;
  for (const auto& [k, v] : entries) width = std::max(width, k.size());
  for (const auto& [k, v] : entries)
    os << "  " << std::left << std::setw(static_cast<int>(width)) << k << " : " << v << '\n';
}

void AuditSummary::write_key_values(std::ostream& os) const {
  for (const auto& [k, v] : entries) os << title << '.' << k << '=' << v << '\n';
}

ShapedReward shape_rewards(const TabularMDP& mdp, const TabularPolicy& policy, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("alpha must be nonnegative");
  ShapedReward out;
  out.base = mdp.reward();
  out.alpha = alpha;
  if (alpha == 0.0) {
    out.bonus = Eigen::MatrixXd::Zero(out.base.rows(), out.base.cols());
  } else {
    out.bonus = mdp.discount() * alpha * expected_next(mdp, policy_entropies(policy));
  }
  return out;
}

TabularMDP potential_shaped_mdp(const TabularMDP& mdp, const PotentialFunction& phi) {
  if (phi.values().size() != static_cast<Eigen::Index>(mdp.n_states()))
    throw std::invalid_argument("potential has the wrong length");
  Eigen::MatrixXd reward = mdp.reward() + mdp.discount() * expected_next(mdp, phi.values());
  reward.colwise() -= phi.values();
  return mdp.with_reward(std::move(reward));
}

AuditSummary AbsorbingAudit::summary() const {
  AuditSummary s{"absorbing", {}};
  s.add("horizon", static_cast<double>(horizon));
  s.add("bootstrap_truncation_residual", truncation_residual);
  s.add("bootstrap_truncation_bound", truncation_bound);
  s.add("soft_first_step_gap", first_step_gap);
  s.add("soft_first_step_gap_error", first_step_gap_error);
  s.add("violated", std::string(truncation.violated || first_step.violated ? "1" : "0"));
  return s;
}

AbsorbingAudit absorbing_audit(const TabularMDP& mdp, const TabularPolicy& policy, double alpha,
                               std::size_t horizon) {
  if (horizon < 2) throw std::invalid_argument("absorbing_audit: horizon must be >= 2");
  const auto S = static_cast<Eigen::Index>(mdp.n_states());
  const auto A = static_cast<Eigen::Index>(mdp.n_actions());
  const double gamma = mdp.discount();

  QTable q_boot = QTable::Zero(S, A);
  QTable q_soft = QTable::Zero(S, A);
  for (std::size_t t = 0; t < horizon; ++t) {
    q_boot = bootstrap_backup(q_boot, mdp, policy, alpha);
    q_soft = soft_backup(q_soft, mdp, policy, alpha);
  }

  AbsorbingAudit out;
  out.horizon = horizon;
  const QTable exact = exact_policy_eval(mdp, policy, alpha);
  out.truncation_residual = (q_boot - exact).cwiseAbs().maxCoeff();
  const double c_h = std::log(static_cast<double>(mdp.n_actions()));
  out.truncation_bound = std::pow(gamma, static_cast<double>(horizon)) *
                         (mdp.reward_bound() + gamma * alpha * c_h) / (1.0 - gamma);

  // State values at the first step of each unroll.
  Eigen::VectorXd v_soft(S);
  for (Eigen::Index s = 0; s < S; ++s) {
    double acc = 0.0;
    for (Eigen::Index a = 0; a < A; ++a) {
      const double p = policy.probs()(s, a);
      if (p > 0.0) acc += p * (q_soft(s, a) - alpha * std::log(p));
    }
    v_soft(s) = acc;
  }
  const Eigen::VectorXd v_boot = policy_average(q_boot, policy);
  const Eigen::VectorXd gap = v_soft - v_boot;
  // Independent entropy: direct summation rather than policy_entropies.
  Eigen::VectorXd expected_gap(S);
  for (Eigen::Index s = 0; s < S; ++s) {
    double h = 0.0;
    for (Eigen::Index a = 0; a < A; ++a) {
      const double p = policy.probs()(s, a);
      h += p > 0.0 ? -p * std::log(p) : 0.0;
    }
    expected_gap(s) = alpha * h;
  }
  out.first_step_gap = gap.cwiseAbs().maxCoeff();
  out.first_step_gap_error = (gap - expected_gap).cwiseAbs().maxCoeff();
  out.truncation = BoundReport::check("absorbing/bootstrap_truncation", Relation::kAtMost,
                                      out.truncation_residual, out.truncation_bound, 1e-12);
  out.first_step = BoundReport::check("absorbing/soft_first_step", Relation::kAtMost,
                                      out.first_step_gap_error, 1e-8, 0.0);
  return out;
}

AuditSummary PotentialShapingAudit::summary() const {
  AuditSummary s{"potential_shaping", {}};
  s.add("original_argmax", format_sets(original_argmax));
  s.add("shaped_argmax", format_sets(shaped_argmax));
  s.add("tied_states", static_cast<double>(tied_states));
  s.add("max_offset_error", max_offset_error);
  s.add("identical", std::string(identical ? "1" : "0"));
  return s;
}

PotentialShapingAudit potential_shaping_audit(const TabularMDP& mdp,
                                              const PotentialFunction& phi) {
  const ValueIterationResult original = value_iteration(mdp, 0.0, kSolveTol);
  const ValueIterationResult shaped =
      value_iteration(potential_shaped_mdp(mdp, phi), 0.0, kSolveTol);

  PotentialShapingAudit out;
  out.original_argmax = argmax_sets(original.q, kArgmaxTieTolerance);
  out.shaped_argmax = argmax_sets(shaped.q, kArgmaxTieTolerance);
  out.identical = out.original_argmax == out.shaped_argmax;
  for (const auto& set : out.original_argmax)
    if (set.size() > 1) ++out.tied_states;
  QTable expected = original.q;
  expected.colwise() -= phi.values();
  out.max_offset_error = (shaped.q - expected).cwiseAbs().maxCoeff();
  return out;
}

AuditSummary EntropyShiftReport::summary() const {
  AuditSummary s{"entropy_shift", {}};
  s.add("original_argmax", format_sets(original_argmax));
  s.add("augmented_argmax", format_sets(augmented_argmax));
  std::ostringstream os;
  for (std::size_t i = 0; i < changed_states.size(); ++i) os << (i ? "," : "") << changed_states[i];
  s.add("changed_states", os.str());
  s.add("changed", std::string(changed() ? "1" : "0"));
  return s;
}

EntropyShiftReport entropy_policy_shift(const TabularMDP& mdp, double alpha) {
  EntropyShiftReport out;
  out.original_argmax = argmax_sets(value_iteration(mdp, 0.0, kSolveTol).q, kArgmaxTieTolerance);
  out.augmented_argmax =
      argmax_sets(value_iteration(mdp, alpha, kSolveTol).q, kArgmaxTieTolerance);
  for (std::size_t s = 0; s < out.original_argmax.size(); ++s)
    if (out.original_argmax[s] != out.augmented_argmax[s]) out.changed_states.push_back(s);
  return out;
}

}  // namespace earl
