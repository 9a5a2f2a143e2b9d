#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace earl {

/// Binary observation given by the indices of its active entries.
using Features = std::vector<int>;

/// Tabular: one parameter row per input index, output = sum of active rows.
/// Mlp: input -> hidden (tanh) -> linear output.
enum class ModelKind { kTabular, kMlp };

const char* to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

/// Small differentiable function of a binary feature vector.
///
/// All parameters live in one flat buffer so optimizers, polyak averaging and
/// finite-difference checks can treat every model the same way. `backward`
/// accumulates d(loss)/d(params) given d(loss)/d(outputs) from the matching
/// `forward` call.
class Network {
 public:
  struct Cache {
    std::vector<double> hidden;  // tanh activations (Mlp only)
  };

  Network(ModelKind kind, int in_dim, int out_dim, int hidden, std::uint64_t seed,
          double output_scale = 1.0);

  ModelKind kind() const { return kind_; }
  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  int hidden_dim() const { return hidden_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t n_params() const { return params_.size(); }

  void forward(std::span<const int> features, std::span<double> out, Cache* cache) const;
  void backward(std::span<const int> features, const Cache& cache,
                std::span<const double> d_out, std::span<double> grad) const;

 private:
  std::size_t w1_offset() const { return 0; }
  std::size_t b1_offset() const { return static_cast<std::size_t>(in_dim_) * hidden_; }
  std::size_t w2_offset() const { return b1_offset() + static_cast<std::size_t>(hidden_); }
  std::size_t b2_offset() const {
    return w2_offset() + static_cast<std::size_t>(out_dim_) * hidden_;
  }

  ModelKind kind_;
  int in_dim_;
  int out_dim_;
  int hidden_;
  std::vector<double> params_;
};

std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);
/// Entropy in nats with 0 log 0 = 0.
double entropy(std::span<const double> probs);
/// d H(softmax(z)) / dz_j = -p_j (log p_j + H).
std::vector<double> entropy_logit_gradient(std::span<const double> probs);

/// Categorical policy over logits produced by a Network.
class PolicyModel {
 public:
  explicit PolicyModel(Network net) : net_(std::move(net)) {}

  Network& net() { return net_; }
  const Network& net() const { return net_; }
  int n_actions() const { return net_.out_dim(); }

  std::vector<double> logits(std::span<const int> features,
                             Network::Cache* cache = nullptr) const;
  std::vector<double> probs(std::span<const int> features) const;
  double log_prob(std::span<const int> features, int action) const;
  double entropy_at(std::span<const int> features) const;

 private:
  Network net_;
};

/// Scalar state-value function.
class ValueModel {
 public:
  explicit ValueModel(Network net) : net_(std::move(net)) {}

  Network& net() { return net_; }
  const Network& net() const { return net_; }
  double value(std::span<const int> features, Network::Cache* cache = nullptr) const;

 private:
  Network net_;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(std::span<double> params, std::span<const double> grad) = 0;
};

class Sgd final : public Optimizer {
 public:
  explicit Sgd(double lr) : lr_(lr) {}
  void step(std::span<double> params, std::span<const double> grad) override;

 private:
  double lr_;
};

class Adam final : public Optimizer {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(std::span<double> params, std::span<const double> grad) override;

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

/// Plain SGD for tabular models, Adam for perceptrons.
std::unique_ptr<Optimizer> make_optimizer(ModelKind kind, double lr);

/// Rescales `grad` so its Euclidean norm is at most `max_norm` (no-op when
/// max_norm <= 0). Returns the norm before clipping.
double clip_grad_norm(std::span<double> grad, double max_norm);

/// target <- (1 - tau) target + tau source.
void polyak_update(std::span<double> target, std::span<const double> source, double tau);

}  // namespace earl
