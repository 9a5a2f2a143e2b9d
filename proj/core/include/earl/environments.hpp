#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "earl/gae.hpp"
#include "earl/mdp.hpp"

namespace earl {

enum class EnvKind { kDiagonal, kTwoColors };

/// Four-neighbourhood moves; a move off the grid leaves the agent in place.
enum class Action : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr int kNumActions = 4;

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct GridState {
  Cell agent;
  std::optional<Cell> goal;  // TwoColors only
  int width = 10;
  int height = 10;
};

/// Which rewarded cell, if any, the last move captured.
enum class Capture { kNone, kSuboptimum, kOptimum };

struct StepResult {
  int observation = 0;  // state id after the move
  double reward = 0.0;
  bool done = false;       // episode terminated by the task
  bool truncated = false;  // episode cut by the step limit
  Capture capture = Capture::kNone;
};

struct EnvOptions {
  int size = 10;
  int max_steps = 0;  // 0 selects the kind's default (100 Diagonal, 500 TwoColors)
};

const char* to_string(EnvKind kind);
EnvKind parse_env_kind(const std::string& name);

/// Grid world with integer state ids and binary feature encodings.
///
/// State ids serve tabular consumers; `features` lists the active indices of
/// the one-hot (Diagonal) or two-hot (TwoColors) observation vector.
class GridEnvironment {
 public:
  virtual ~GridEnvironment() = default;

  virtual EnvKind kind() const = 0;
  /// Starts a new episode and returns the initial observation.
  virtual int reset() = 0;
  /// Throws std::out_of_range for an invalid action and std::logic_error when
  /// the episode has already ended.
  StepResult step(int action);

  int observe() const { return encode(state_); }
  const GridState& state() const { return state_; }
  int steps() const { return steps_; }
  int max_steps() const { return max_steps_; }
  int size() const { return size_; }
  int n_actions() const { return kNumActions; }

  virtual int n_state_ids() const = 0;
  virtual int feature_dim() const = 0;
  virtual std::vector<int> features(int state_id) const = 0;
  virtual int encode(const GridState& state) const = 0;
  virtual GridState decode(int state_id) const = 0;

  /// Character grid for debugging: A agent, S suboptimum, G goal.
  std::string render() const;

  /// Destination of `action` from `from`; off-grid moves stay put.
  Cell move(Cell from, int action) const;

 protected:
  GridEnvironment(int size, int max_steps);
  virtual StepResult apply(Cell target) = 0;
  virtual char marker(Cell cell) const = 0;

  GridState state_;
  int size_;
  int max_steps_;
  int steps_ = 0;
  bool finished_ = false;
};

/// Episodic: start top-left, 4.5 at top-right, 5.0 at bottom-left; both end
/// the episode.
class DiagonalEnv final : public GridEnvironment {
 public:
  static constexpr double kSuboptimumReward = 4.5;
  static constexpr double kOptimumReward = 5.0;

  explicit DiagonalEnv(std::uint64_t seed = 0, EnvOptions options = {});

  EnvKind kind() const override { return EnvKind::kDiagonal; }
  int reset() override;
  int n_state_ids() const override { return size_ * size_; }
  int feature_dim() const override { return size_ * size_; }
  std::vector<int> features(int state_id) const override { return {state_id}; }
  int encode(const GridState& state) const override;
  GridState decode(int state_id) const override;

  Cell start() const { return {0, 0}; }
  Cell suboptimum() const { return {0, size_ - 1}; }
  Cell optimum() const { return {size_ - 1, 0}; }

 private:
  StepResult apply(Cell target) override;
  char marker(Cell cell) const override;
};

/// Continuing: start bottom-left; 0.5 at top-right sends the agent back to the
/// start; 1.0 at a goal that jumps to a fresh random cell once captured.
class TwoColorsEnv final : public GridEnvironment {
 public:
  static constexpr double kSuboptimumReward = 0.5;
  static constexpr double kOptimumReward = 1.0;

  explicit TwoColorsEnv(std::uint64_t seed = 0, EnvOptions options = {});

  EnvKind kind() const override { return EnvKind::kTwoColors; }
  int reset() override;
  int n_state_ids() const override { return size_ * size_ * size_ * size_; }
  int feature_dim() const override { return 2 * size_ * size_; }
  std::vector<int> features(int state_id) const override;
  int encode(const GridState& state) const override;
  GridState decode(int state_id) const override;

  Cell start() const { return {size_ - 1, 0}; }
  Cell suboptimum() const { return {0, size_ - 1}; }
  Cell goal() const { return *state_.goal; }

 private:
  StepResult apply(Cell target) override;
  char marker(Cell cell) const override;
  void relocate_goal();

  std::mt19937_64 rng_;
};

std::unique_ptr<GridEnvironment> make_environment(EnvKind kind, std::uint64_t seed,
                                                  EnvOptions options = {});

/// Exact model of the Diagonal grid. Goal cells become absorbing zero-reward
/// states and the reward is paid on entering them.
TabularMDP to_tabular(EnvKind kind, double gamma, EnvOptions options = {});

/// Flat-Dirichlet transitions, rewards uniform in [-1, 1], flat-Dirichlet
/// initial distribution. Deterministic in `seed`.
TabularMDP random_mdp(std::uint64_t seed, std::size_t n_states, std::size_t n_actions,
                      double gamma);

/// One transition per line: `t s a r s' done`.
void write_trajectory(std::ostream& os, std::span<const Transition> trajectory);

}  // namespace earl
