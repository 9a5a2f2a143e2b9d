#include "earl/gae.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace earl {

void GaeConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gae: gamma must be in [0,1)");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("gae: lambda must be in [0,1]");
  if (!(alpha >= 0.0)) throw std::invalid_argument("gae: alpha must be nonnegative");
}

double shaped_reward(const Transition& t, const GaeConfig& config) {
  return t.done ? t.reward
                : t.reward + config.gamma * config.alpha * t.entropy_next;
}

double td_residual(const Transition& t, const GaeConfig& config) {
  const double next = t.done ? 0.0 : t.value_next;
  return shaped_reward(t, config) + config.gamma * next - t.value;
}

std::vector<double> compute_gae(std::span<const Transition> trajectory, const GaeConfig& config) {
  config.validate();
  if (trajectory.empty()) throw std::invalid_argument("compute_gae: empty trajectory");
  std::vector<double> adv(trajectory.size());
  double running = 0.0;
  for (std::size_t i = trajectory.size(); i-- > 0;) {
    const Transition& t = trajectory[i];
    const bool last = i + 1 == trajectory.size();
    const double carry = (last || t.done || t.truncated) ? 0.0 : running;
    running = td_residual(t, config) + config.gamma * config.lambda * carry;
    adv[i] = running;
  }
  return adv;
}

namespace {

struct Segment {
  std::size_t begin;
  std::size_t end;  // inclusive
};

std::vector<Segment> split_episodes(std::span<const Transition> traj) {
  std::vector<Segment> out;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj[i].done || traj[i].truncated || i + 1 == traj.size()) {
      out.push_back({begin, i});
      begin = i + 1;
    }
  }
  return out;
}

// Max over t of |(1-lambda) sum_n lambda^{n-1} A^n_t (tail weight on the full
// return) - sum_l (gamma lambda)^l delta_{t+l}| within one segment.
double telescoping_residual(const Segment& seg, const std::vector<double>& first_reward,
                            const std::vector<double>& later_reward,
                            const std::vector<double>& delta,
                            const std::vector<double>& value,
                            const std::vector<double>& value_next, double gamma,
                            double lambda) {
  double worst = 0.0;
  for (std::size_t t = seg.begin; t <= seg.end; ++t) {
    const std::size_t horizon = seg.end - t + 1;
    double partial = 0.0;
    double average = 0.0;
    for (std::size_t n = 1; n <= horizon; ++n) {
      const std::size_t k = t + n - 1;
      const double g = std::pow(gamma, static_cast<double>(n - 1));
      partial += g * (n == 1 ? first_reward[k] : later_reward[k]);
      const double n_step = partial + gamma * g * value_next[k] - value[t];
      const double weight = n < horizon ? (1.0 - lambda) * std::pow(lambda, static_cast<double>(n - 1))
                                        : std::pow(lambda, static_cast<double>(horizon - 1));
      average += weight * n_step;
    }
    double gae = 0.0;
    for (std::size_t l = 0; l < horizon; ++l)
      gae += std::pow(gamma * lambda, static_cast<double>(l)) * delta[t + l];
    worst = std::max(worst, std::abs(average - gae));
  }
  return worst;
}

}  // namespace

std::vector<Transition> sample_trajectory(const TabularMDP& mdp, const TabularPolicy& policy,
                                          std::size_t length, double alpha, Rng& rng) {
  const ValueTable v = exact_state_values(mdp, policy, alpha);
  const Eigen::VectorXd h = policy_entropies(policy);
  auto draw = [&rng](const Eigen::Ref<const Eigen::RowVectorXd>& probs) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double x = u(rng);
    for (Eigen::Index i = 0; i + 1 < probs.size(); ++i) {
      x -= probs(i);
      if (x < 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size() - 1);
  };
  std::vector<Transition> out(length);
  int s = draw(mdp.initial_dist().transpose());
  for (Transition& t : out) {
    t.state = s;
    t.action = draw(policy.probs().row(s));
    t.reward = mdp.reward()(s, t.action);
    t.next_state =
        draw(mdp.transition().row(static_cast<Eigen::Index>(mdp.row(s, t.action))));
    t.entropy_next = h(t.next_state);
    t.value = v(s);
    t.value_next = v(t.next_state);
    t.log_prob = std::log(policy(static_cast<std::size_t>(s), static_cast<std::size_t>(t.action)));
    s = t.next_state;
  }
  return out;
}

IncompatibilityReport incompatibility_demo(const TabularMDP& mdp, const TabularPolicy& policy,
                                           std::span<const Transition> trajectory,
                                           const GaeConfig& config) {
  config.validate();
  if (trajectory.empty()) throw std::invalid_argument("incompatibility_demo: empty trajectory");
  const double gamma = config.gamma;
  const double alpha = config.alpha;
  const TabularMDP model(mdp.transition(), mdp.reward(), gamma, mdp.initial_dist());
  const ValueTable v = exact_state_values(model, policy, alpha);
  const Eigen::VectorXd h = policy_entropies(policy);

  const std::size_t n = trajectory.size();
  std::vector<double> v_now(n), v_next(n), soft_now(n), soft_next(n);
  std::vector<double> r_hat(n), r_raw(n), r_logged(n);
  std::vector<double> delta_boot(n), delta_plain(n), delta_logged(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = trajectory[i];
    const double log_pi = std::log(policy(static_cast<std::size_t>(t.state),
                                          static_cast<std::size_t>(t.action)));
    v_now[i] = v(t.state);
    v_next[i] = t.done ? 0.0 : v(t.next_state);
    soft_now[i] = v(t.state) + alpha * h(t.state);
    soft_next[i] = t.done ? 0.0 : v(t.next_state) + alpha * h(t.next_state);
    r_hat[i] = t.done ? t.reward : t.reward + gamma * alpha * h(t.next_state);
    r_raw[i] = t.reward;
    r_logged[i] = t.reward - alpha * log_pi;
    delta_boot[i] = r_hat[i] + gamma * v_next[i] - v_now[i];
    delta_plain[i] = r_raw[i] + gamma * soft_next[i] - soft_now[i];
    delta_logged[i] = r_logged[i] + gamma * soft_next[i] - soft_now[i];
  }

  IncompatibilityReport out;
  for (const Segment& seg : split_episodes(trajectory)) {
    out.bootstrap_residual = std::max(
        out.bootstrap_residual, telescoping_residual(seg, r_hat, r_hat, delta_boot, v_now, v_next,
                                                     gamma, config.lambda));
    // Soft n-step targets: the first reward carries no log term, later ones do.
    out.soft_residual_unattached = std::max(
        out.soft_residual_unattached,
        telescoping_residual(seg, r_raw, r_logged, delta_plain, soft_now, soft_next, gamma,
                             config.lambda));
    out.soft_residual_attached = std::max(
        out.soft_residual_attached,
        telescoping_residual(seg, r_raw, r_logged, delta_logged, soft_now, soft_next, gamma,
                             config.lambda));
  }
  out.soft_residual = std::min(out.soft_residual_unattached, out.soft_residual_attached);
  return out;
}

}  // namespace earl
