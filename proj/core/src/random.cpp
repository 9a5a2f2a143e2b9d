#include "earl/random.hpp"

#include <cmath>

namespace earl {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
  return Rng(seq);
}

Eigen::MatrixXd random_stochastic_rows(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::exponential_distribution<double> gamma1(1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = gamma1(rng);
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

Eigen::MatrixXd random_uniform(Eigen::Index rows, Eigen::Index cols, double lo, double hi,
                               Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

TabularPolicy random_policy(std::size_t n_states, std::size_t n_actions, Rng& rng) {
  return TabularPolicy(random_stochastic_rows(static_cast<Eigen::Index>(n_states),
                                              static_cast<Eigen::Index>(n_actions), rng));
}

TabularPolicy random_softmax_policy(std::size_t n_states, std::size_t n_actions,
                                    double logit_scale, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd logits(static_cast<Eigen::Index>(n_states),
                         static_cast<Eigen::Index>(n_actions));
  for (Eigen::Index i = 0; i < logits.rows(); ++i)
    for (Eigen::Index j = 0; j < logits.cols(); ++j) logits(i, j) = logit_scale * n(rng);
  return TabularPolicy::from_logits(logits);
}

}  // namespace earl
