#include "earl/mdp.hpp"

#include <cmath>
#include <sstream>

namespace earl {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

void check_simplex_rows(const Eigen::MatrixXd& m, const char* name) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    if (!row.allFinite() || row.minCoeff() < 0.0 ||
        std::abs(row.sum() - 1.0) > TabularMDP::kSimplexTolerance) {
      std::ostringstream os;
      os << name << " row " << i << " is not a probability distribution (sum "
         << row.sum() << ")";
      throw std::invalid_argument(os.str());
    }
  }
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& table) {
  // Row-major flattening matches the (s * A + a) transition row layout.
  Eigen::VectorXd out(table.size());
  const Eigen::Index cols = table.cols();
  for (Eigen::Index s = 0; s < table.rows(); ++s)
    for (Eigen::Index a = 0; a < cols; ++a) out(s * cols + a) = table(s, a);
  return out;
}

}  // namespace

TabularMDP::TabularMDP(Eigen::MatrixXd transition, Eigen::MatrixXd reward, double discount,
                       Eigen::VectorXd initial_dist)
    : n_states_(static_cast<std::size_t>(reward.rows())),
      n_actions_(static_cast<std::size_t>(reward.cols())),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      discount_(discount),
      initial_dist_(std::move(initial_dist)),
      reward_bound_(0.0) {
  require(n_states_ >= 1 && n_actions_ >= 1, "MDP needs at least one state and action");
  require(transition_.rows() == static_cast<Eigen::Index>(n_states_ * n_actions_) &&
              transition_.cols() == static_cast<Eigen::Index>(n_states_),
          "transition must be (S*A) x S");
  require(initial_dist_.size() == static_cast<Eigen::Index>(n_states_),
          "initial distribution must have one entry per state");
  require(discount_ >= 0.0 && discount_ < 1.0, "discount must lie in [0, 1)");
  require(reward_.allFinite(), "rewards must be finite");
  check_simplex_rows(transition_, "transition");
  check_simplex_rows(initial_dist_.transpose(), "initial distribution");
  reward_bound_ = reward_.cwiseAbs().maxCoeff();
}

TabularMDP TabularMDP::with_reward(Eigen::MatrixXd reward) const {
  return TabularMDP(transition_, std::move(reward), discount_, initial_dist_);
}

TabularPolicy::TabularPolicy(Eigen::MatrixXd probs) : probs_(std::move(probs)) {
  require(probs_.rows() >= 1 && probs_.cols() >= 1, "policy table is empty");
  check_simplex_rows(probs_, "policy");
}

TabularPolicy TabularPolicy::uniform(std::size_t n_states, std::size_t n_actions) {
  return TabularPolicy(Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n_states),
                                                 static_cast<Eigen::Index>(n_actions),
                                                 1.0 / static_cast<double>(n_actions)));
}

TabularPolicy TabularPolicy::deterministic(const std::vector<std::size_t>& actions,
                                           std::size_t n_actions) {
  Eigen::MatrixXd probs =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(actions.size()),
                            static_cast<Eigen::Index>(n_actions));
  for (std::size_t s = 0; s < actions.size(); ++s) {
    require(actions[s] < n_actions, "deterministic action out of range");
    probs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(actions[s])) = 1.0;
  }
  return TabularPolicy(std::move(probs));
}

TabularPolicy TabularPolicy::from_logits(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd probs(logits.rows(), logits.cols());
  for (Eigen::Index s = 0; s < logits.rows(); ++s) {
    const double top = logits.row(s).maxCoeff();
    probs.row(s) = (logits.row(s).array() - top).exp().matrix();
    probs.row(s) /= probs.row(s).sum();
  }
  return TabularPolicy(std::move(probs));
}

double distribution_entropy(const Eigen::Ref<const Eigen::RowVectorXd>& probs) {
  double h = 0.0;
  for (Eigen::Index a = 0; a < probs.size(); ++a) {
    const double p = probs(a);
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double policy_entropy(const TabularPolicy& policy, std::size_t state) {
  if (state >= policy.n_states()) throw std::out_of_range("state id out of range");
  return distribution_entropy(policy.probs().row(static_cast<Eigen::Index>(state)));
}

Eigen::VectorXd policy_entropies(const TabularPolicy& policy) {
  Eigen::VectorXd h(static_cast<Eigen::Index>(policy.n_states()));
  for (Eigen::Index s = 0; s < h.size(); ++s)
    h(s) = distribution_entropy(policy.probs().row(s));
  return h;
}

Eigen::MatrixXd expected_next(const TabularMDP& mdp, const Eigen::VectorXd& f) {
  const Eigen::VectorXd flat = mdp.transition() * f;
  const auto S = static_cast<Eigen::Index>(mdp.n_states());
  const auto A = static_cast<Eigen::Index>(mdp.n_actions());
  Eigen::MatrixXd out(S, A);
  for (Eigen::Index s = 0; s < S; ++s)
    for (Eigen::Index a = 0; a < A; ++a) out(s, a) = flat(s * A + a);
  return out;
}

Eigen::MatrixXd policy_transition(const TabularMDP& mdp, const TabularPolicy& policy) {
  const auto S = static_cast<Eigen::Index>(mdp.n_states());
  const auto A = static_cast<Eigen::Index>(mdp.n_actions());
  Eigen::MatrixXd p_pi = Eigen::MatrixXd::Zero(S, S);
  for (Eigen::Index s = 0; s < S; ++s)
    for (Eigen::Index a = 0; a < A; ++a)
      p_pi.row(s) += policy.probs()(s, a) * mdp.transition().row(s * A + a);
  return p_pi;
}

ValueTable policy_average(const QTable& q, const TabularPolicy& policy) {
  return q.cwiseProduct(policy.probs()).rowwise().sum();
}

QTable exact_policy_eval(const TabularMDP& mdp, const TabularPolicy& policy, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("alpha must be nonnegative");
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions())
    throw std::invalid_argument("policy shape does not match MDP");
  const auto S = static_cast<Eigen::Index>(mdp.n_states());
  const auto A = static_cast<Eigen::Index>(mdp.n_actions());
  const double gamma = mdp.discount();

  const Eigen::MatrixXd shaped =
      mdp.reward() + gamma * alpha * expected_next(mdp, policy_entropies(policy));

  // Pi maps Q (flattened) to V: Pi(s, s*A + a) = pi(a|s).
  Eigen::MatrixXd pi_map = Eigen::MatrixXd::Zero(S, S * A);
  for (Eigen::Index s = 0; s < S; ++s)
    for (Eigen::Index a = 0; a < A; ++a) pi_map(s, s * A + a) = policy.probs()(s, a);

  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S * A, S * A);
  system.noalias() -= gamma * (mdp.transition() * pi_map);
  const Eigen::VectorXd q_flat = system.partialPivLu().solve(flatten(shaped));
  if (!q_flat.allFinite()) throw NumericError("policy evaluation solve is singular");

  QTable q(S, A);
  for (Eigen::Index s = 0; s < S; ++s)
    for (Eigen::Index a = 0; a < A; ++a) q(s, a) = q_flat(s * A + a);
  return q;
}

ValueTable exact_state_values(const TabularMDP& mdp, const TabularPolicy& policy,
                              double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("alpha must be nonnegative");
  const auto S = static_cast<Eigen::Index>(mdp.n_states());
  const Eigen::MatrixXd shaped =
      mdp.reward() + mdp.discount() * alpha * expected_next(mdp, policy_entropies(policy));
  const Eigen::VectorXd r_pi = policy_average(shaped, policy);
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S);
  system.noalias() -= mdp.discount() * policy_transition(mdp, policy);
  ValueTable v = system.partialPivLu().solve(r_pi);
  if (!v.allFinite()) throw NumericError("state value solve is singular");
  return v;
}

double discounted_return(const TabularMDP& mdp, const TabularPolicy& policy, double alpha) {
  const QTable q = exact_policy_eval(mdp, policy, alpha);
  return mdp.initial_dist().dot(policy_average(q, policy));
}

Eigen::VectorXd state_visitation(const TabularMDP& mdp, const TabularPolicy& policy) {
  const auto S = static_cast<Eigen::Index>(mdp.n_states());
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S);
  system.noalias() -= mdp.discount() * policy_transition(mdp, policy).transpose();
  Eigen::VectorXd rho = system.partialPivLu().solve(mdp.initial_dist());
  if (!rho.allFinite()) throw NumericError("visitation solve is singular");
  return rho;
}

Eigen::MatrixXd advantage(const QTable& q, const TabularPolicy& policy) {
  if (q.rows() != policy.probs().rows() || q.cols() != policy.probs().cols())
    throw std::invalid_argument("advantage: shapes differ");
  return q.colwise() - policy_average(q, policy);
}

}  // namespace earl
