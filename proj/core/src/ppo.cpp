#include "earl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "earl/shaping.hpp"

namespace earl {

void PpoConfig::validate() const {
  if (!(clip_ratio > 0.0)) throw std::invalid_argument("ppo: clip_ratio must be positive");
  if (epochs < 1 || rollout_steps < 1 || iterations < 1)
    throw std::invalid_argument("ppo: epochs, rollout_steps and iterations must be >= 1");
  if (minibatch_size < 1) throw std::invalid_argument("ppo: minibatch_size must be >= 1");
  if (!(policy_lr > 0.0) || !(value_lr > 0.0))
    throw std::invalid_argument("ppo: learning rates must be positive");
  if (model == ModelKind::kMlp && hidden < 1)
    throw std::invalid_argument("ppo: hidden width must be >= 1");
  gae.validate();
}

namespace {

int sample_categorical(std::span<const double> probs, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    x -= probs[i];
    if (x < 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

double weight_total(std::span<const PpoSample> batch) {
  double w = 0.0;
  for (const PpoSample& s : batch) w += s.weight;
  if (!(w > 0.0)) throw std::invalid_argument("batch weights must sum to a positive value");
  return w;
}

[[noreturn]] void fail_non_finite(const char* what, std::span<const PpoSample> batch,
                                  double loss) {
  std::ostringstream msg;
  msg << what << " is not finite (" << loss << "); batch of " << batch.size() << " samples";
  double lo = INFINITY, hi = -INFINITY, lp_lo = INFINITY;
  for (const PpoSample& s : batch) {
    lo = std::min(lo, s.advantage);
    hi = std::max(hi, s.advantage);
    lp_lo = std::min(lp_lo, s.old_log_prob);
  }
  msg << ", advantage range [" << lo << ", " << hi << "], min old log-prob " << lp_lo;
  throw TrainingError(msg.str());
}

}  // namespace

Rollout collect_rollout(GridEnvironment& env, RolloutState& state, const PolicyModel& policy,
                        const ValueModel& value, int steps, double alpha, double gamma,
                        Rng& rng) {
  if (steps < 1) throw std::invalid_argument("collect_rollout: steps must be >= 1");
  Rollout out;
  out.transitions.reserve(static_cast<std::size_t>(steps));
  out.shaped_rewards.reserve(static_cast<std::size_t>(steps));
  out.state_entropies.reserve(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    if (state.needs_reset) {
      state.observation = env.reset();
      state.episode_return = 0.0;
      state.needs_reset = false;
    }
    const Features obs = env.features(state.observation);
    const std::vector<double> logp = log_softmax(policy.logits(obs));
    std::vector<double> p(logp.size());
    std::transform(logp.begin(), logp.end(), p.begin(), [](double x) { return std::exp(x); });
    const int action = sample_categorical(p, rng);

    const StepResult res = env.step(action);
    const Features next = env.features(res.observation);

    Transition tr;
    tr.state = state.observation;
    tr.action = action;
    tr.reward = res.reward;
    tr.next_state = res.observation;
    tr.entropy_next = res.done ? 0.0 : policy.entropy_at(next);
    tr.value = value.value(obs);
    tr.value_next = res.done ? 0.0 : value.value(next);
    tr.log_prob = logp[static_cast<std::size_t>(action)];
    tr.done = res.done;
    tr.truncated = res.truncated;
    out.transitions.push_back(tr);
    out.shaped_rewards.push_back(
        trajectory_shaped_reward(res.reward, tr.entropy_next, gamma, alpha));
    out.state_entropies.push_back(entropy(p));

    if (res.capture == Capture::kOptimum) ++out.optimum_captures;
    if (res.capture == Capture::kSuboptimum) ++out.suboptimum_captures;
    state.episode_return += res.reward;
    state.observation = res.observation;
    if (res.done || res.truncated) {
      out.episode_returns.push_back(state.episode_return);
      state.needs_reset = true;
    }
  }
  return out;
}

double ppo_policy_loss(const PolicyModel& policy, std::span<const PpoSample> batch,
                       double clip_ratio, double gamma, double alpha, std::vector<double>* grad,
                       PolicyLossStats* stats) {
  const Network& net = policy.net();
  const double total_w = weight_total(batch);
  if (grad) grad->assign(net.n_params(), 0.0);
  const auto n_act = static_cast<std::size_t>(policy.n_actions());
  std::vector<double> dz(n_act);
  Network::Cache cur, nxt;
  double objective = 0.0, kl = 0.0, clipped_w = 0.0, ent_next = 0.0;

  for (const PpoSample& s : batch) {
    const std::vector<double> logp = log_softmax(policy.logits(s.obs, &cur));
    const double ratio = std::exp(logp[static_cast<std::size_t>(s.action)] - s.old_log_prob);

    std::vector<double> pn;
    double h_next = 0.0;
    const bool entropy_term = alpha != 0.0 && !s.done;
    if (entropy_term) {
      pn = softmax(policy.logits(s.next_obs, &nxt));
      h_next = entropy(pn);
    }
    const double aug = s.advantage + gamma * alpha * h_next;
    const double clamped = std::clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio);
    const double unclipped_obj = ratio * aug;
    const double clipped_obj = clamped * aug;
    const bool use_unclipped = unclipped_obj <= clipped_obj;
    objective += s.weight * std::min(unclipped_obj, clipped_obj);
    kl += s.weight * ((ratio - 1.0) - std::log(ratio));
    if (clamped != ratio) clipped_w += s.weight;
    ent_next += s.weight * h_next;

    if (!grad) continue;
    const double scale = -s.weight / total_w;
    // Clipped branch is flat in the ratio.
    const double d_ratio = use_unclipped ? aug : 0.0;
    const double d_aug = use_unclipped ? ratio : clamped;
    if (d_ratio != 0.0) {
      for (std::size_t j = 0; j < n_act; ++j) {
        const double onehot = j == static_cast<std::size_t>(s.action) ? 1.0 : 0.0;
        dz[j] = scale * d_ratio * ratio * (onehot - std::exp(logp[j]));
      }
      net.backward(s.obs, cur, dz, *grad);
    }
    if (entropy_term && d_aug != 0.0) {
      const std::vector<double> dh = entropy_logit_gradient(pn);
      for (std::size_t j = 0; j < n_act; ++j) dz[j] = scale * d_aug * gamma * alpha * dh[j];
      net.backward(s.next_obs, nxt, dz, *grad);
    }
  }
  const double loss = -objective / total_w;
  if (stats) {
    stats->surrogate = objective / total_w;
    stats->kl = kl / total_w;
    stats->clip_fraction = clipped_w / total_w;
    stats->entropy_next = ent_next / total_w;
  }
  return loss;
}

double entropy_augmentation(const PolicyModel& policy, std::span<const PpoSample> batch,
                            double gamma, double alpha, std::vector<double>* grad) {
  const Network& net = policy.net();
  const double total_w = weight_total(batch);
  if (grad) grad->assign(net.n_params(), 0.0);
  Network::Cache cache;
  double total = 0.0;
  for (const PpoSample& s : batch) {
    if (s.done) continue;
    const std::vector<double> p = softmax(policy.logits(s.next_obs, &cache));
    total += s.weight * gamma * alpha * entropy(p);
    if (!grad) continue;
    std::vector<double> dz = entropy_logit_gradient(p);
    for (double& g : dz) g *= s.weight * gamma * alpha / total_w;
    net.backward(s.next_obs, cache, dz, *grad);
  }
  return total / total_w;
}

double value_regression_loss(const ValueModel& value, std::span<const PpoSample> batch,
                             std::vector<double>* grad) {
  const Network& net = value.net();
  const double total_w = weight_total(batch);
  if (grad) grad->assign(net.n_params(), 0.0);
  Network::Cache cache;
  double total = 0.0;
  for (const PpoSample& s : batch) {
    const double err = value.value(s.obs, &cache) - s.value_target;
    total += 0.5 * s.weight * err * err;
    if (!grad) continue;
    const double d = s.weight * err / total_w;
    net.backward(s.obs, cache, std::span<const double>(&d, 1), *grad);
  }
  return total / total_w;
}

std::vector<PpoSample> make_ppo_batch(const GridEnvironment& env, const Rollout& rollout,
                                      std::span<const double> advantages, bool normalize) {
  const auto& tr = rollout.transitions;
  if (advantages.size() != tr.size())
    throw std::invalid_argument("make_ppo_batch: advantage count mismatch");
  double mean = 0.0, sd = 1.0;
  if (normalize && tr.size() > 1) {
    mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) /
           static_cast<double>(advantages.size());
    double var = 0.0;
    for (double a : advantages) var += (a - mean) * (a - mean);
    sd = std::sqrt(var / static_cast<double>(advantages.size() - 1));
    if (!(sd > 1e-8)) sd = 1.0;
  }
  std::vector<PpoSample> out(tr.size());
  for (std::size_t i = 0; i < tr.size(); ++i) {
    PpoSample& s = out[i];
    s.obs = env.features(tr[i].state);
    s.action = tr[i].action;
    s.old_log_prob = tr[i].log_prob;
    s.advantage = (advantages[i] - mean) / sd;
    s.next_obs = env.features(tr[i].next_state);
    s.done = tr[i].done;
    s.value_target = advantages[i] + tr[i].value;
  }
  return out;
}

UpdateMetrics ppo_update(std::span<const PpoSample> batch, PolicyModel& policy,
                         ValueModel& value, Optimizer& policy_opt, Optimizer& value_opt,
                         const PpoConfig& config, double alpha, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("ppo_update: empty batch");
  const double gamma = config.gae.gamma;
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<PpoSample> mini;
  std::vector<double> g_pi, g_v;
  UpdateMetrics m;
  int n_updates = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.minibatch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(config.minibatch_size));
      mini.clear();
      for (std::size_t k = start; k < stop; ++k) mini.push_back(batch[order[k]]);

      const double lp = ppo_policy_loss(policy, mini, config.clip_ratio, gamma, alpha, &g_pi);
      if (!std::isfinite(lp)) fail_non_finite("policy loss", mini, lp);
      clip_grad_norm(g_pi, config.max_grad_norm);
      policy_opt.step(policy.net().params(), g_pi);

      const double lv = value_regression_loss(value, mini, &g_v);
      if (!std::isfinite(lv)) fail_non_finite("value loss", mini, lv);
      clip_grad_norm(g_v, config.max_grad_norm);
      value_opt.step(value.net().params(), g_v);

      m.policy_loss += lp;
      m.value_loss += lv;
      ++n_updates;
    }
  }
  m.policy_loss /= n_updates;
  m.value_loss /= n_updates;
  PolicyLossStats after;
  ppo_policy_loss(policy, batch, config.clip_ratio, gamma, alpha, nullptr, &after);
  if (!std::isfinite(after.kl)) fail_non_finite("kl estimate", batch, after.kl);
  m.kl = after.kl;
  m.clip_fraction = after.clip_fraction;
  double h = 0.0;
  for (const PpoSample& s : batch) h += policy.entropy_at(s.obs);
  m.entropy_mean = h / static_cast<double>(batch.size());
  return m;
}

PpoAgent make_ppo_agent(const GridEnvironment& env, const PpoConfig& config,
                        std::uint64_t seed) {
  const int in = env.feature_dim();
  return PpoAgent{
      PolicyModel(Network(config.model, in, env.n_actions(), config.hidden, seed * 2 + 1, 0.01)),
      ValueModel(Network(config.model, in, 1, config.hidden, seed * 2 + 2, 1.0))};
}

TrainingRecord train(EnvKind kind, const PpoConfig& config, TemperatureSchedule schedule,
                     std::uint64_t seed) {
  config.validate();
  auto env = make_environment(kind, seed, config.env);
  PpoAgent agent = make_ppo_agent(*env, config, seed);
  auto policy_opt = make_optimizer(config.model, config.policy_lr);
  auto value_opt = make_optimizer(config.model, config.value_lr);
  Rng rng = make_rng(seed, 0x50504F);
  RolloutState state;

  TrainingRecord record;
  record.extra_columns = {"episodes", "optimum_captures", "suboptimum_captures",
                          "clip_fraction"};
  double last_mean = 0.0, last_std = 0.0;
  for (int it = 0; it < config.iterations; ++it) {
    const double alpha = schedule.step();
    const double shaping_alpha = config.shape_rewards ? alpha : 0.0;
    const Rollout rollout = collect_rollout(*env, state, agent.policy, agent.value,
                                            config.rollout_steps, shaping_alpha,
                                            config.gae.gamma, rng);
    GaeConfig gae = config.gae;
    gae.alpha = shaping_alpha;
    const std::vector<double> adv = compute_gae(rollout.transitions, gae);
    const std::vector<PpoSample> batch = make_ppo_batch(*env, rollout, adv, true);
    const UpdateMetrics um =
        ppo_update(batch, agent.policy, agent.value, *policy_opt, *value_opt, config,
                   config.augment_advantages ? alpha : 0.0, rng);

    // Iterations with no finished episode repeat the last reported return.
    if (!rollout.episode_returns.empty()) {
      const auto& r = rollout.episode_returns;
      last_mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
      double var = 0.0;
      for (double x : r) var += (x - last_mean) * (x - last_mean);
      last_std = std::sqrt(var / static_cast<double>(r.size()));
    }
    IterationMetrics row;
    row.iteration = it;
    row.raw_return_mean = last_mean;
    row.raw_return_std = last_std;
    row.entropy_mean =
        std::accumulate(rollout.state_entropies.begin(), rollout.state_entropies.end(), 0.0) /
        static_cast<double>(rollout.state_entropies.size());
    row.alpha = alpha;
    row.policy_loss = um.policy_loss;
    row.value_loss = um.value_loss;
    row.kl = um.kl;
    row.extra = {static_cast<double>(rollout.episode_returns.size()),
                 static_cast<double>(rollout.optimum_captures),
                 static_cast<double>(rollout.suboptimum_captures), um.clip_fraction};
    record.rows.push_back(std::move(row));
  }
  return record;
}

}  // namespace earl
