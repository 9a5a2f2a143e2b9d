#include "earl/sac.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace earl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::add(const ReplayTransition& t) {
  if (items_.size() < capacity_) {
    items_.push_back(t);
  } else {
    items_[cursor_] = t;
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (items_.empty()) throw std::logic_error("sampling from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = pick(rng);
  return out;
}

std::vector<ReplayTransition> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  std::vector<ReplayTransition> out;
  out.reserve(n);
  for (std::size_t i : sample_indices(n, rng)) out.push_back(items_[i]);
  return out;
}

void SacConfig::validate() const {
  if (capacity == 0 || batch_size == 0) throw std::invalid_argument("sac: empty buffer or batch");
  if (!(q_lr > 0.0 && value_lr > 0.0 && policy_lr > 0.0))
    throw std::invalid_argument("sac: learning rates must be positive");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("sac: tau must be in (0,1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("sac: gamma must be in [0,1)");
  if (entropy_samples < 1) throw std::invalid_argument("sac: entropy_samples must be >= 1");
  if (steps_per_iteration < 1 || iterations < 1 || alpha_decay_interval < 1 || warmup_steps < 0)
    throw std::invalid_argument("sac: step counts must be positive");
}

SacNets SacNets::make(int feature_dim, int n_actions, ModelKind kind, int hidden, double tau,
                      std::uint64_t seed) {
  Network value(kind, feature_dim, 1, hidden, seed * 4 + 2);
  Network target = value;
  return SacNets{Network(kind, feature_dim, n_actions, hidden, seed * 4 + 1), std::move(value),
                 std::move(target),
                 PolicyModel(Network(kind, feature_dim, n_actions, hidden, seed * 4 + 3, 0.01)),
                 tau};
}

void SacNets::update_target() { polyak_update(target_value.params(), value.params(), tau); }

double SacNets::target_divergence() const {
  double acc = 0.0;
  const auto a = value.params();
  const auto b = target_value.params();
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

double q_target(double reward, double v_target_next, double entropy_next, double gamma,
                double alpha, bool done) {
  return done ? reward : reward + gamma * (v_target_next + alpha * entropy_next);
}

double v_target(const Network& q_net, std::span<const int> features, int sampled_action) {
  std::vector<double> q(static_cast<std::size_t>(q_net.out_dim()));
  q_net.forward(features, q, nullptr);
  return q.at(static_cast<std::size_t>(sampled_action));
}

double soft_v_target(const Network& q_net, std::span<const int> features, int sampled_action,
                     double log_prob, double alpha) {
  return v_target(q_net, features, sampled_action) - alpha * log_prob;
}

double entropy_estimate(std::span<const double> log_probs) {
  if (log_probs.empty()) throw std::invalid_argument("entropy_estimate: no samples");
  return -std::accumulate(log_probs.begin(), log_probs.end(), 0.0) /
         static_cast<double>(log_probs.size());
}

int sample_action(const PolicyModel& policy, std::span<const int> features, Rng& rng) {
  const std::vector<double> p = policy.probs(features);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    x -= p[i];
    if (x < 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(p.size()) - 1;
}

double sampled_entropy(const PolicyModel& policy, std::span<const int> features, int n,
                       Rng& rng) {
  const std::vector<double> logp = log_softmax(policy.logits(features));
  std::vector<double> cdf(logp.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < logp.size(); ++i) cdf[i] = (acc += std::exp(logp[i]));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> draws(static_cast<std::size_t>(n));
  for (double& d : draws) {
    const double x = u(rng) * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), x);
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
    d = logp[k];
  }
  return entropy_estimate(draws);
}

double projection_loss(const PolicyModel& policy, const Network& q_net,
                       std::span<const Features> states, double alpha,
                       std::vector<double>* grad) {
  if (!(alpha > 0.0)) throw std::domain_error("projection loss needs alpha > 0");
  if (states.empty()) throw std::invalid_argument("projection_loss: empty batch");
  const Network& net = policy.net();
  if (grad) grad->assign(net.n_params(), 0.0);
  const auto n_act = static_cast<std::size_t>(policy.n_actions());
  std::vector<double> q(n_act), dz(n_act);
  Network::Cache cache;
  const double inv_n = 1.0 / static_cast<double>(states.size());
  double total = 0.0;
  for (const Features& s : states) {
    const std::vector<double> logp = log_softmax(policy.logits(s, &cache));
    q_net.forward(s, q, nullptr);
    for (double& x : q) x /= alpha;
    const std::vector<double> logt = log_softmax(q);
    double kl = 0.0;
    for (std::size_t j = 0; j < n_act; ++j) kl += std::exp(logp[j]) * (logp[j] - logt[j]);
    total += kl;
    if (!grad) continue;
    for (std::size_t j = 0; j < n_act; ++j)
      dz[j] = inv_n * std::exp(logp[j]) * ((logp[j] - logt[j]) - kl);
    net.backward(s, cache, dz, *grad);
  }
  return total * inv_n;
}

double q_regression_loss(const Network& q_net, std::span<const Features> states,
                         std::span<const int> actions, std::span<const double> targets,
                         std::vector<double>* grad) {
  if (states.empty()) throw std::invalid_argument("q_regression_loss: empty batch");
  if (grad) grad->assign(q_net.n_params(), 0.0);
  const auto n_act = static_cast<std::size_t>(q_net.out_dim());
  std::vector<double> q(n_act), dq(n_act, 0.0);
  Network::Cache cache;
  const double inv_n = 1.0 / static_cast<double>(states.size());
  double total = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    q_net.forward(states[i], q, &cache);
    const auto a = static_cast<std::size_t>(actions[i]);
    const double err = q[a] - targets[i];
    total += 0.5 * err * err;
    if (!grad) continue;
    dq[a] = inv_n * err;
    q_net.backward(states[i], cache, dq, *grad);
    dq[a] = 0.0;
  }
  return total * inv_n;
}

double v_regression_loss(const Network& value_net, std::span<const Features> states,
                         std::span<const double> targets, std::vector<double>* grad) {
  if (states.empty()) throw std::invalid_argument("v_regression_loss: empty batch");
  if (grad) grad->assign(value_net.n_params(), 0.0);
  Network::Cache cache;
  const double inv_n = 1.0 / static_cast<double>(states.size());
  double total = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    double v = 0.0;
    value_net.forward(states[i], std::span<double>(&v, 1), &cache);
    const double err = v - targets[i];
    total += 0.5 * err * err;
    if (!grad) continue;
    const double d = inv_n * err;
    value_net.backward(states[i], cache, std::span<const double>(&d, 1), *grad);
  }
  return total * inv_n;
}

PolicyUpdateMetrics policy_update(std::span<const Features> states, const Network& q_net,
                                  PolicyModel& policy, double alpha, Optimizer& opt,
                                  double max_grad_norm) {
  std::vector<double> grad;
  PolicyUpdateMetrics m;
  m.loss_before = projection_loss(policy, q_net, states, alpha, &grad);
  clip_grad_norm(grad, max_grad_norm);
  opt.step(policy.net().params(), grad);
  m.loss_after = projection_loss(policy, q_net, states, alpha);
  return m;
}

namespace {

void check_finite(const char* what, double value, std::size_t step, double alpha) {
  if (std::isfinite(value)) return;
  std::ostringstream msg;
  msg << what << " is not finite (" << value << ") at env step " << step << ", alpha "
      << alpha;
  throw TrainingError(msg.str());
}

}  // namespace

TrainingRecord sac_train(EnvKind kind, const SacConfig& config, TemperatureSchedule schedule,
                         std::uint64_t seed) {
  config.validate();
  auto env = make_environment(kind, seed, config.env);
  SacNets nets = SacNets::make(env->feature_dim(), env->n_actions(), config.model,
                               config.hidden, config.tau, seed);
  auto q_opt = make_optimizer(config.model, config.q_lr);
  auto v_opt = make_optimizer(config.model, config.value_lr);
  auto pi_opt = make_optimizer(config.model, config.policy_lr);
  ReplayBuffer buffer(config.capacity);
  Rng rng = make_rng(seed, 0x534143);
  std::uniform_int_distribution<int> random_action(0, env->n_actions() - 1);

  TrainingRecord record;
  record.extra_columns = {"episodes", "optimum_captures", "suboptimum_captures", "buffer_size",
                          "target_divergence"};

  const std::size_t n = config.batch_size;
  std::vector<Features> states(n), next_states(n);
  std::vector<int> actions(n);
  std::vector<double> y_q(n), y_v(n), grad;

  int obs = env->reset();
  double episode_return = 0.0;
  double last_mean = 0.0, last_std = 0.0;
  double alpha = schedule.step();
  std::size_t step = 0;

  for (int it = 0; it < config.iterations; ++it) {
    std::vector<double> returns;
    double entropy_sum = 0.0, pi_loss = 0.0, v_loss = 0.0, q_loss = 0.0;
    int updates = 0, opt_caps = 0, sub_caps = 0;
    for (int k = 0; k < config.steps_per_iteration; ++k, ++step) {
      if (step > 0 && step % static_cast<std::size_t>(config.alpha_decay_interval) == 0)
        alpha = schedule.step();
      if (!(alpha > 0.0)) throw std::domain_error("sac needs alpha > 0");

      const Features f = env->features(obs);
      entropy_sum += nets.policy.entropy_at(f);
      const int a = step < static_cast<std::size_t>(config.warmup_steps)
                        ? random_action(rng)
                        : sample_action(nets.policy, f, rng);
      const StepResult res = env->step(a);
      buffer.add({obs, a, res.reward, res.observation, res.done});
      episode_return += res.reward;
      if (res.capture == Capture::kOptimum) ++opt_caps;
      if (res.capture == Capture::kSuboptimum) ++sub_caps;
      obs = res.observation;
      if (res.done || res.truncated) {
        returns.push_back(episode_return);
        episode_return = 0.0;
        obs = env->reset();
      }

      if (step < static_cast<std::size_t>(config.warmup_steps) || buffer.size() < n) continue;

      const std::vector<ReplayTransition> batch = buffer.sample(n, rng);
      for (std::size_t i = 0; i < n; ++i) {
        states[i] = env->features(batch[i].state);
        next_states[i] = env->features(batch[i].next_state);
        actions[i] = batch[i].action;
        double v_next = 0.0, h_next = 0.0;
        if (!batch[i].done) {
          nets.target_value.forward(next_states[i], std::span<double>(&v_next, 1), nullptr);
          h_next = sampled_entropy(nets.policy, next_states[i], config.entropy_samples, rng);
        }
        y_q[i] = q_target(batch[i].reward, v_next, h_next, config.gamma, alpha, batch[i].done);
      }
      const double lq = q_regression_loss(nets.q, states, actions, y_q, &grad);
      check_finite("q loss", lq, step, alpha);
      clip_grad_norm(grad, config.max_grad_norm);
      q_opt->step(nets.q.params(), grad);

      const PolicyUpdateMetrics pm = policy_update(states, nets.q, nets.policy, alpha, *pi_opt,
                                                   config.max_grad_norm);
      check_finite("projection loss", pm.loss_before, step, alpha);

      for (std::size_t i = 0; i < n; ++i)
        y_v[i] = v_target(nets.q, states[i], sample_action(nets.policy, states[i], rng));
      const double lv = v_regression_loss(nets.value, states, y_v, &grad);
      check_finite("value loss", lv, step, alpha);
      clip_grad_norm(grad, config.max_grad_norm);
      v_opt->step(nets.value.params(), grad);
      nets.update_target();

      q_loss += lq;
      pi_loss += pm.loss_before;
      v_loss += lv;
      ++updates;
    }
    if (!returns.empty()) {
      last_mean = std::accumulate(returns.begin(), returns.end(), 0.0) /
                  static_cast<double>(returns.size());
      double var = 0.0;
      for (double x : returns) var += (x - last_mean) * (x - last_mean);
      last_std = std::sqrt(var / static_cast<double>(returns.size()));
    }
    IterationMetrics row;
    row.iteration = it;
    row.raw_return_mean = last_mean;
    row.raw_return_std = last_std;
    row.entropy_mean = entropy_sum / config.steps_per_iteration;
    row.alpha = alpha;
    row.policy_loss = updates ? pi_loss / updates : 0.0;
    row.value_loss = updates ? 0.5 * (v_loss + q_loss) / updates : 0.0;
    row.kl = row.policy_loss;
    row.extra = {static_cast<double>(returns.size()), static_cast<double>(opt_caps),
                 static_cast<double>(sub_caps), static_cast<double>(buffer.size()),
                 nets.target_divergence()};
    record.rows.push_back(std::move(row));
  }
  return record;
}

}  // namespace earl
