#include "earl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "earl/random.hpp"

namespace earl {

const char* to_string(ModelKind kind) {
  return kind == ModelKind::kTabular ? "tabular" : "mlp";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "tabular") return ModelKind::kTabular;
  if (name == "mlp") return ModelKind::kMlp;
  throw std::invalid_argument("unknown model kind: " + name);
}

Network::Network(ModelKind kind, int in_dim, int out_dim, int hidden, std::uint64_t seed,
                 double output_scale)
    : kind_(kind), in_dim_(in_dim), out_dim_(out_dim), hidden_(hidden) {
  if (in_dim < 1 || out_dim < 1) throw std::invalid_argument("network dimensions must be positive");
  if (kind == ModelKind::kTabular) {
    hidden_ = 0;
    params_.assign(static_cast<std::size_t>(in_dim) * out_dim, 0.0);
    return;
  }
  if (hidden < 1) throw std::invalid_argument("mlp needs a hidden layer");
  params_.assign(b2_offset() + static_cast<std::size_t>(out_dim), 0.0);
  Rng rng = make_rng(seed, 0x4E4E);
  // Glorot-uniform weights, zero biases.
  std::uniform_real_distribution<double> w1(-std::sqrt(6.0 / (in_dim + hidden)),
                                            std::sqrt(6.0 / (in_dim + hidden)));
  for (std::size_t i = w1_offset(); i < b1_offset(); ++i) params_[i] = w1(rng);
  const double limit2 = output_scale * std::sqrt(6.0 / (hidden + out_dim));
  std::uniform_real_distribution<double> w2(-limit2, limit2);
  for (std::size_t i = w2_offset(); i < b2_offset(); ++i) params_[i] = w2(rng);
}

void Network::forward(std::span<const int> features, std::span<double> out,
                      Cache* cache) const {
  if (kind_ == ModelKind::kTabular) {
    std::fill(out.begin(), out.end(), 0.0);
    for (int f : features) {
      const double* row = params_.data() + static_cast<std::size_t>(f) * out_dim_;
      for (int k = 0; k < out_dim_; ++k) out[k] += row[k];
    }
    return;
  }
  std::vector<double> local;
  std::vector<double>& h = cache ? cache->hidden : local;
  h.assign(params_.begin() + static_cast<std::ptrdiff_t>(b1_offset()),
           params_.begin() + static_cast<std::ptrdiff_t>(w2_offset()));
  for (int f : features) {
    const double* col = params_.data() + w1_offset() + static_cast<std::size_t>(f) * hidden_;
    for (int j = 0; j < hidden_; ++j) h[j] += col[j];
  }
  for (double& x : h) x = std::tanh(x);
  const double* w2 = params_.data() + w2_offset();
  const double* b2 = params_.data() + b2_offset();
  for (int k = 0; k < out_dim_; ++k) {
    const double* row = w2 + static_cast<std::size_t>(k) * hidden_;
    double acc = b2[k];
    for (int j = 0; j < hidden_; ++j) acc += row[j] * h[j];
    out[k] = acc;
  }
}

void Network::backward(std::span<const int> features, const Cache& cache,
                       std::span<const double> d_out, std::span<double> grad) const {
  if (kind_ == ModelKind::kTabular) {
    for (int f : features) {
      double* row = grad.data() + static_cast<std::size_t>(f) * out_dim_;
      for (int k = 0; k < out_dim_; ++k) row[k] += d_out[k];
    }
    return;
  }
  const std::vector<double>& h = cache.hidden;
  const double* w2 = params_.data() + w2_offset();
  std::vector<double> d_pre(static_cast<std::size_t>(hidden_), 0.0);
  for (int k = 0; k < out_dim_; ++k) {
    const double g = d_out[k];
    if (g == 0.0) continue;
    const double* row = w2 + static_cast<std::size_t>(k) * hidden_;
    double* g_row = grad.data() + w2_offset() + static_cast<std::size_t>(k) * hidden_;
    for (int j = 0; j < hidden_; ++j) {
      g_row[j] += g * h[j];
      d_pre[j] += g * row[j];
    }
    grad[b2_offset() + k] += g;
  }
  for (int j = 0; j < hidden_; ++j) d_pre[j] *= 1.0 - h[j] * h[j];
  for (int j = 0; j < hidden_; ++j) grad[b1_offset() + j] += d_pre[j];
  for (int f : features) {
    double* col = grad.data() + w1_offset() + static_cast<std::size_t>(f) * hidden_;
    for (int j = 0; j < hidden_; ++j) col[j] += d_pre[j];
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  const double top = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (double& x : p) z += (x = std::exp(x - top));
  for (double& x : p) x /= z;
  return p;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double x : logits) z += std::exp(x - top);
  const double log_z = top + std::log(z);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_z;
  return out;
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

std::vector<double> entropy_logit_gradient(std::span<const double> probs) {
  const double h = entropy(probs);
  std::vector<double> g(probs.size());
  for (std::size_t j = 0; j < probs.size(); ++j)
    g[j] = probs[j] > 0.0 ? -probs[j] * (std::log(probs[j]) + h) : 0.0;
  return g;
}

std::vector<double> PolicyModel::logits(std::span<const int> features,
                                        Network::Cache* cache) const {
  std::vector<double> out(static_cast<std::size_t>(net_.out_dim()));
  net_.forward(features, out, cache);
  return out;
}

std::vector<double> PolicyModel::probs(std::span<const int> features) const {
  return softmax(logits(features));
}

double PolicyModel::log_prob(std::span<const int> features, int action) const {
  return log_softmax(logits(features))[static_cast<std::size_t>(action)];
}

double PolicyModel::entropy_at(std::span<const int> features) const {
  return entropy(probs(features));
}

double ValueModel::value(std::span<const int> features, Network::Cache* cache) const {
  double out = 0.0;
  net_.forward(features, std::span<double>(&out, 1), cache);
  return out;
}

void Sgd::step(std::span<double> params, std::span<const double> grad) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad[i];
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (m_.size() != params.size()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
    t_ = 0;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

std::unique_ptr<Optimizer> make_optimizer(ModelKind kind, double lr) {
  if (kind == ModelKind::kTabular) return std::make_unique<Sgd>(lr);
  return std::make_unique<Adam>(lr);
}

double clip_grad_norm(std::span<double> grad, double max_norm) {
  const double norm =
      std::sqrt(std::inner_product(grad.begin(), grad.end(), grad.begin(), 0.0));
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grad) g *= scale;
  }
  return norm;
}

void polyak_update(std::span<double> target, std::span<const double> source, double tau) {
  if (target.size() != source.size()) throw std::invalid_argument("polyak: size mismatch");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("polyak: tau must be in (0,1]");
  for (std::size_t i = 0; i < target.size(); ++i)
    target[i] = (1.0 - tau) * target[i] + tau * source[i];
}

}  // namespace earl
