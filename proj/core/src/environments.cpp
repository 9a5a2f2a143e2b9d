#include "earl/environments.hpp"

#include <ostream>
#include <stdexcept>

#include "earl/random.hpp"

namespace earl {

const char* to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::kDiagonal: return "diagonal";
    case EnvKind::kTwoColors: return "twocolors";
  }
  return "?";
}

EnvKind parse_env_kind(const std::string& name) {
  if (name == "diagonal") return EnvKind::kDiagonal;
  if (name == "twocolors") return EnvKind::kTwoColors;
  throw std::invalid_argument("unknown environment kind: " + name);
}

GridEnvironment::GridEnvironment(int size, int max_steps)
    : size_(size), max_steps_(max_steps) {
  if (size < 2) throw std::invalid_argument("grid size must be at least 2");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be positive");
  state_.width = size;
  state_.height = size;
}

Cell GridEnvironment::move(Cell from, int action) const {
  Cell to = from;
  switch (static_cast<Action>(action)) {
    case Action::kUp: to.row -= 1; break;
    case Action::kDown: to.row += 1; break;
    case Action::kLeft: to.col -= 1; break;
    case Action::kRight: to.col += 1; break;
  }
  if (to.row < 0 || to.row >= size_ || to.col < 0 || to.col >= size_) return from;
  return to;
}

StepResult GridEnvironment::step(int action) {
  if (action < 0 || action >= kNumActions) throw std::out_of_range("invalid action id");
  if (finished_) throw std::logic_error("step called on a finished episode; call reset()");
  StepResult result = apply(move(state_.agent, action));
  ++steps_;
  if (!result.done && steps_ >= max_steps_) result.truncated = true;
  finished_ = result.done || result.truncated;
  result.observation = observe();
  return result;
}

std::string GridEnvironment::render() const {
  std::string out;
  for (int r = 0; r < size_; ++r) {
    for (int c = 0; c < size_; ++c) {
      const Cell cell{r, c};
      out += cell == state_.agent ? 'A' : marker(cell);
    }
    out += '\n';
  }
  return out;
}

DiagonalEnv::DiagonalEnv(std::uint64_t /*seed*/, EnvOptions options)
    : GridEnvironment(options.size, options.max_steps > 0 ? options.max_steps : 100) {
  reset();
}

int DiagonalEnv::reset() {
  state_.agent = start();
  state_.goal.reset();
  steps_ = 0;
  finished_ = false;
  return observe();
}

int DiagonalEnv::encode(const GridState& state) const {
  return state.agent.row * size_ + state.agent.col;
}

GridState DiagonalEnv::decode(int state_id) const {
  if (state_id < 0 || state_id >= n_state_ids()) throw std::out_of_range("state id");
  GridState s;
  s.width = s.height = size_;
  s.agent = {state_id / size_, state_id % size_};
  return s;
}

StepResult DiagonalEnv::apply(Cell target) {
  state_.agent = target;
  StepResult r;
  if (target == suboptimum()) {
    r.reward = kSuboptimumReward;
    r.done = true;
    r.capture = Capture::kSuboptimum;
  } else if (target == optimum()) {
    r.reward = kOptimumReward;
    r.done = true;
    r.capture = Capture::kOptimum;
  }
  return r;
}

char DiagonalEnv::marker(Cell cell) const {
  if (cell == suboptimum()) return 'S';
  if (cell == optimum()) return 'G';
  return '.';
}

TwoColorsEnv::TwoColorsEnv(std::uint64_t seed, EnvOptions options)
    : GridEnvironment(options.size, options.max_steps > 0 ? options.max_steps : 500),
      rng_(seed) {
  reset();
}

int TwoColorsEnv::reset() {
  state_.agent = start();
  steps_ = 0;
  finished_ = false;
  relocate_goal();
  return observe();
}

void TwoColorsEnv::relocate_goal() {
  // Eligible: not the agent, not the suboptimum, not the start cell.
  std::vector<Cell> eligible;
  eligible.reserve(static_cast<std::size_t>(size_ * size_));
  for (int r = 0; r < size_; ++r)
    for (int c = 0; c < size_; ++c) {
      const Cell cell{r, c};
      if (cell == state_.agent || cell == suboptimum() || cell == start()) continue;
      eligible.push_back(cell);
    }
  std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
  state_.goal = eligible[pick(rng_)];
}

std::vector<int> TwoColorsEnv::features(int state_id) const {
  const int cells = size_ * size_;
  return {state_id / cells, cells + state_id % cells};
}

int TwoColorsEnv::encode(const GridState& state) const {
  const int agent = state.agent.row * size_ + state.agent.col;
  const Cell g = state.goal.value_or(Cell{});
  return agent * size_ * size_ + g.row * size_ + g.col;
}

GridState TwoColorsEnv::decode(int state_id) const {
  if (state_id < 0 || state_id >= n_state_ids()) throw std::out_of_range("state id");
  const int cells = size_ * size_;
  GridState s;
  s.width = s.height = size_;
  s.agent = {(state_id / cells) / size_, (state_id / cells) % size_};
  s.goal = Cell{(state_id % cells) / size_, (state_id % cells) % size_};
  return s;
}

StepResult TwoColorsEnv::apply(Cell target) {
  StepResult r;
  state_.agent = target;
  if (target == suboptimum()) {
    r.reward = kSuboptimumReward;
    r.capture = Capture::kSuboptimum;
    state_.agent = start();
  } else if (target == *state_.goal) {
    r.reward = kOptimumReward;
    r.capture = Capture::kOptimum;
    relocate_goal();
  }
  return r;
}

char TwoColorsEnv::marker(Cell cell) const {
  if (cell == suboptimum()) return 'S';
  if (state_.goal && cell == *state_.goal) return 'G';
  return '.';
}

std::unique_ptr<GridEnvironment> make_environment(EnvKind kind, std::uint64_t seed,
                                                  EnvOptions options) {
  switch (kind) {
    case EnvKind::kDiagonal: return std::make_unique<DiagonalEnv>(seed, options);
    case EnvKind::kTwoColors: return std::make_unique<TwoColorsEnv>(seed, options);
  }
  throw std::invalid_argument("unknown environment kind");
}

TabularMDP to_tabular(EnvKind kind, double gamma, EnvOptions options) {
  if (kind != EnvKind::kDiagonal)
    throw std::invalid_argument("to_tabular supports the Diagonal grid only");
  DiagonalEnv env(0, options);
  const int n = env.n_state_ids();
  Eigen::MatrixXd transition = Eigen::MatrixXd::Zero(n * kNumActions, n);
  Eigen::MatrixXd reward = Eigen::MatrixXd::Zero(n, kNumActions);
  for (int s = 0; s < n; ++s) {
    const Cell from = env.decode(s).agent;
    const bool absorbing = from == env.suboptimum() || from == env.optimum();
    for (int a = 0; a < kNumActions; ++a) {
      if (absorbing) {
        transition(s * kNumActions + a, s) = 1.0;
        continue;
      }
      const Cell to = env.move(from, a);
      GridState next;
      next.agent = to;
      transition(s * kNumActions + a, env.encode(next)) = 1.0;
      if (to == env.suboptimum()) reward(s, a) = DiagonalEnv::kSuboptimumReward;
      if (to == env.optimum()) reward(s, a) = DiagonalEnv::kOptimumReward;
    }
  }
  Eigen::VectorXd initial = Eigen::VectorXd::Zero(n);
  GridState start;
  start.agent = env.start();
  initial(env.encode(start)) = 1.0;
  return TabularMDP(std::move(transition), std::move(reward), gamma, std::move(initial));
}

TabularMDP random_mdp(std::uint64_t seed, std::size_t n_states, std::size_t n_actions,
                      double gamma) {
  if (n_states < 1 || n_actions < 1) throw std::invalid_argument("random_mdp: empty MDP");
  Rng rng = make_rng(seed, 0x4D4450);
  const auto S = static_cast<Eigen::Index>(n_states);
  const auto A = static_cast<Eigen::Index>(n_actions);
  Eigen::MatrixXd transition = random_stochastic_rows(S * A, S, rng);
  Eigen::MatrixXd reward = random_uniform(S, A, -1.0, 1.0, rng);
  Eigen::VectorXd initial = random_stochastic_rows(1, S, rng).transpose();
  return TabularMDP(std::move(transition), std::move(reward), gamma, std::move(initial));
}

void write_trajectory(std::ostream& os, std::span<const Transition> trajectory) {
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    const Transition& x = trajectory[t];
    os << t << ' ' << x.state << ' ' << x.action << ' ' << x.reward << ' ' << x.next_state
       << ' ' << (x.done ? 1 : 0) << '\n';
  }
}

}  // namespace earl
