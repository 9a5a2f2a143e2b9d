#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <random>

#include "earl/mdp.hpp"

namespace earl {

using Rng = std::mt19937_64;

/// Independent stream for (seed, index), so per-instance work can run in any
/// order and still reproduce.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Rows drawn from a flat Dirichlet.
Eigen::MatrixXd random_stochastic_rows(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Entries uniform in [lo, hi].
Eigen::MatrixXd random_uniform(Eigen::Index rows, Eigen::Index cols, double lo, double hi,
                               Rng& rng);

TabularPolicy random_policy(std::size_t n_states, std::size_t n_actions, Rng& rng);

/// Softmax of Gaussian logits with the given scale; scale 0 gives uniform rows.
TabularPolicy random_softmax_policy(std::size_t n_states, std::size_t n_actions,
                                    double logit_scale, Rng& rng);

}  // namespace earl
