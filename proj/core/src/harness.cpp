#include "earl/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "earl/gae.hpp"
#include "earl/operators.hpp"
#include "earl/random.hpp"
#include "earl/shaping.hpp"

namespace earl {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

// ---------------------------------------------------------------------------
// Corpus

CorpusInstance corpus_instance(std::uint64_t corpus_seed, std::size_t index,
                               std::size_t max_states, std::size_t max_actions) {
  Rng rng = make_rng(corpus_seed, 0xC0 + static_cast<std::uint64_t>(index));
  std::uniform_int_distribution<std::size_t> states(2, max_states);
  std::uniform_int_distribution<std::size_t> actions(2, max_actions);
  const std::size_t s = states(rng);
  const std::size_t a = actions(rng);
  const double gamma = kCorpusDiscounts[index % 3];
  const double alpha = kCorpusTemperatures[(index / 3) % 3];
  const std::uint64_t seed = rng();
  return {random_mdp(seed, s, a, gamma), alpha, seed};
}

std::pair<TabularPolicy, TabularPolicy> nearby_policy_pair(std::size_t n_states,
                                                           std::size_t n_actions,
                                                           double max_kl, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd logits(n_states, n_actions);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits(i) = normal(rng);
  Eigen::MatrixXd noise(n_states, n_actions);
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = normal(rng);
  TabularPolicy old_policy = TabularPolicy::from_logits(logits);
  std::uniform_real_distribution<double> scale_dist(0.05, 0.6);
  double scale = scale_dist(rng);
  for (;;) {
    TabularPolicy new_policy = TabularPolicy::from_logits(logits + scale * noise);
    if (kl_divergence_rows(old_policy, new_policy).maxCoeff() <= max_kl)
      return {std::move(old_policy), std::move(new_policy)};
    scale *= 0.5;
  }
}

// ---------------------------------------------------------------------------
// Audits

std::size_t AuditOutcome::asserted_violations() const {
  std::size_t n = 0;
  for (const AuditTally& t : tallies)
    if (t.asserted) n += t.violations;
  return n;
}

void AuditOutcome::write_text(std::ostream& os) const {
  for (const AuditTally& t : tallies) {
    os << std::left << std::setw(28) << t.name << std::right << std::setw(7) << t.checked
       << " checked " << std::setw(6) << t.violations << " violated"
       << (t.asserted ? "" : "  (diagnostic)") << '\n';
  }
  os << (exit_code == kExitOk ? "all asserted audits passed" : "asserted audit violations")
     << '\n';
}

namespace {

struct AuditSink {
  std::map<std::string, std::vector<BoundReport>> reports;
  std::vector<std::string> order;
  std::set<std::string> diagnostic;

  void add(const std::string& name, BoundReport r, bool asserted = true) {
    if (!reports.count(name)) order.push_back(name);
    if (!asserted) diagnostic.insert(name);
    reports[name].push_back(std::move(r));
  }
};

}  // namespace

AuditOutcome run_audits(const AuditOptions& options) {
  AuditSink sink;
  const double gain = options.inject_fault ? 1.5 : 1.0;
  const std::size_t n = options.trials;
  for (const char* name : {"contraction", "conjugacy", "optimal_error_bound",
                           "policy_invariance_limit", "soft_policy_iteration", "perf_difference",
                           "surrogate_bound", "surrogate_squared", "soft_objective",
                           "absorbing_shaping", "potential_shaping", "gae_incompatibility"}) {
    sink.order.push_back(name);
    sink.reports[name];
  }
  sink.diagnostic.insert("surrogate_squared");

  for (std::size_t i = 0; i < n; ++i) {
    const CorpusInstance inst = corpus_instance(options.seed, i);
    const TabularMDP& mdp = inst.mdp;
    const std::size_t S = mdp.n_states(), A = mdp.n_actions();
    Rng rng = make_rng(inst.seed, 1);

    for (BoundReport& r : contraction_audit(mdp, inst.alpha, 2, inst.seed, gain))
      sink.add("contraction", std::move(r));
    const double bound_alpha = std::array<double, 3>{0.01, 0.1, 1.0}[i % 3];
    sink.add("optimal_error_bound", optimal_error_bound_audit(mdp, bound_alpha, inst.seed));

    if (i < std::min<std::size_t>(n, 100)) {
      const TabularPolicy policy = random_softmax_policy(S, A, 1.0, rng);
      const ConjugacyAudit c = conjugacy_audit(mdp, policy, inst.alpha, inst.seed);
      sink.add("conjugacy", c.single_step);
      sink.add("conjugacy", c.fixed_point);
      const SoftObjectiveAudit so = soft_objective_audit(mdp, policy, 0.2, inst.seed);
      sink.add("soft_objective", so.consistency);
      sink.add("soft_objective", so.inconsistency);
      const AbsorbingAudit ab = absorbing_audit(mdp, policy, 0.5, 60);
      sink.add("absorbing_shaping", ab.truncation);
      sink.add("absorbing_shaping", ab.first_step);
      Eigen::VectorXd phi = random_uniform(static_cast<Eigen::Index>(S), 1, -5.0, 5.0, rng);
      const PotentialShapingAudit ps = potential_shaping_audit(mdp, PotentialFunction(phi));
      sink.add("potential_shaping",
               BoundReport::check("potential_shaping.argmax_identical", Relation::kEqual,
                                  ps.identical ? 1.0 : 0.0, 1.0, 0.0, inst.seed));
      sink.add("policy_invariance_limit", optimal_error_bound_audit(mdp, 1e-6, inst.seed));
    }
    if (i < std::min<std::size_t>(n, 50)) {
      const SoftPolicyIterationAudit spi =
          soft_policy_iteration_audit(mdp, inst.alpha > 0.0 ? inst.alpha : 0.1, 30, inst.seed);
      for (const BoundReport& r : spi.monotonicity) sink.add("soft_policy_iteration", r);
      sink.add("soft_policy_iteration", spi.convergence);
    }
    if (i < std::min<std::size_t>(n, 200)) {
      const TabularPolicy p_old = random_softmax_policy(S, A, 1.5, rng);
      const TabularPolicy p_new = random_softmax_policy(S, A, 1.5, rng);
      const PerfDiffAudit pd = perf_diff_audit(mdp, p_old, p_new, 0.2, inst.seed);
      sink.add("perf_difference", pd.classical);
      sink.add("perf_difference", pd.augmented);
    }
    {
      auto [p_old, p_new] = nearby_policy_pair(S, A, 0.05, rng);
      const SurrogateAudit sa = surrogate_bound_audit(mdp, p_old, p_new, 0.0, inst.seed);
      if (!sa.excluded) {
        sink.add("surrogate_bound", sa.linear);
        sink.add("surrogate_squared", sa.squared, false);
      }
    }
  }

  if (n > 0) {
    const TabularMDP demo = random_mdp(options.seed + 7, 4, 3, 0.9);
    Rng rng = make_rng(options.seed + 7, 2);
    const TabularPolicy policy = random_softmax_policy(4, 3, 1.0, rng);
    const std::vector<Transition> traj = sample_trajectory(demo, policy, 6, 0.5, rng);
    const IncompatibilityReport rep =
        incompatibility_demo(demo, policy, traj, GaeConfig{0.9, 0.5, 0.5});
    sink.add("gae_incompatibility",
             BoundReport::check("gae.bootstrap_residual", Relation::kAtMost,
                                rep.bootstrap_residual, 1e-12, 0.0, options.seed));
    sink.add("gae_incompatibility",
             BoundReport::check("gae.soft_residual_positive", Relation::kAtLeast,
                                rep.soft_residual, 1e-9, 0.0, options.seed));
  }

  AuditOutcome out;
  if (options.output_dir) fs::create_directories(*options.output_dir);
  for (const std::string& name : sink.order) {
    const auto& reports = sink.reports[name];
    AuditTally t;
    t.name = name;
    t.checked = reports.size();
    t.violations = count_violations(reports);
    t.asserted = !sink.diagnostic.count(name);
    out.tallies.push_back(t);
    if (options.output_dir) {
      std::ofstream f(*options.output_dir / (name + ".csv"));
      write_bound_reports(f, reports);
    }
  }
  out.exit_code = out.asserted_violations() == 0 ? kExitOk : kExitViolation;
  if (options.output_dir) {
    std::ofstream f(*options.output_dir / "summary.txt");
    out.write_text(f);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

const char* to_string(LearnerKind kind) { return kind == LearnerKind::kPpo ? "ppo" : "sac"; }

LearnerKind parse_learner_kind(const std::string& name) {
  if (name == "ppo") return LearnerKind::kPpo;
  if (name == "sac") return LearnerKind::kSac;
  throw std::invalid_argument("unknown learner: " + name);
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("no seeds given");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (name.empty() || name.find('/') != std::string::npos)
    throw ConfigError("experiment name must be a plain non-empty file name");
  try {
    if (learner == LearnerKind::kPpo) ppo.validate();
    else sac.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    const auto dash = item.find('-');
    try {
      if (dash != std::string::npos && dash > 0) {
        const auto lo = std::stoull(item.substr(0, dash));
        const auto hi = std::stoull(item.substr(dash + 1));
        if (hi < lo) throw ConfigError("bad seed range: " + item);
        for (auto s = lo; s <= hi; ++s) out.push_back(s);
      } else {
        std::size_t used = 0;
        out.push_back(std::stoull(item, &used));
        if (used != item.size()) throw ConfigError("bad seed: " + item);
      }
    } catch (const std::logic_error&) {
      throw ConfigError("bad seed: " + item);
    }
  }
  if (out.empty()) throw ConfigError("empty seed list");
  return out;
}

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"experiment", {"name", "env", "learner", "seeds", "output", "plot", "jobs"}},
      {"env", {"size", "max_steps"}},
      {"schedule", {"kind", "alpha0", "decay"}},
      {"ppo",
       {"clip_ratio", "epochs", "minibatch_size", "policy_lr", "value_lr", "max_grad_norm",
        "gamma", "lambda", "rollout_steps", "iterations", "model", "hidden", "shape_rewards",
        "augment_advantages"}},
      {"sac",
       {"capacity", "batch_size", "q_lr", "value_lr", "policy_lr", "tau", "gamma", "hidden",
        "model", "entropy_samples", "warmup_steps", "steps_per_iteration", "iterations",
        "alpha_decay_interval", "max_grad_norm"}},
  };
  return keys;
}

void check_keys(const pt::ptree& tree) {
  const auto& known = known_keys();
  for (const auto& [section, body] : tree) {
    if (section == "sweep") continue;
    const auto it = known.find(section);
    if (it == known.end()) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, value] : body)
      if (!it->second.count(key))
        throw ConfigError("unknown key '" + key + "' in [" + section + "]");
  }
}

template <typename T>
void read(const pt::ptree& tree, const std::string& path, T& field) {
  const auto node = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'));
  if (!node) return;
  std::string text = *node;
  text.erase(0, text.find_first_not_of(" \t"));
  text.erase(text.find_last_not_of(" \t") + 1);
  if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") field = true;
    else if (text == "false" || text == "0" || text == "no" || text == "off") field = false;
    else throw ConfigError(path + ": expected a boolean, got '" + text + "'");
  } else if constexpr (std::is_same_v<T, std::string>) {
    field = text;
  } else {
    std::istringstream is(text);
    T value{};
    is >> value;
    if (is.fail() || !is.eof()) throw ConfigError(path + ": cannot parse '" + text + "'");
    field = value;
  }
}

ExperimentConfig config_from_tree(const pt::ptree& tree) {
  check_keys(tree);
  ExperimentConfig c;
  try {
    read(tree, "experiment.name", c.name);
    std::string text;
    read(tree, "experiment.env", text);
    if (!text.empty()) c.env = parse_env_kind(text);
    text.clear();
    read(tree, "experiment.learner", text);
    if (!text.empty()) c.learner = parse_learner_kind(text);
    text.clear();
    read(tree, "experiment.seeds", text);
    if (!text.empty()) c.seeds = parse_seed_list(text);
    text.clear();
    read(tree, "experiment.output", text);
    if (!text.empty()) c.output_dir = text;
    read(tree, "experiment.plot", c.plot);
    read(tree, "experiment.jobs", c.jobs);

    read(tree, "env.size", c.env_options.size);
    read(tree, "env.max_steps", c.env_options.max_steps);

    std::string kind = "constant";
    double alpha0 = 0.0, decay = 1.0;
    read(tree, "schedule.kind", kind);
    read(tree, "schedule.alpha0", alpha0);
    read(tree, "schedule.decay", decay);
    c.schedule = TemperatureSchedule(parse_schedule_kind(kind), alpha0, decay);

    PpoConfig& p = c.ppo;
    read(tree, "ppo.clip_ratio", p.clip_ratio);
    read(tree, "ppo.epochs", p.epochs);
    read(tree, "ppo.minibatch_size", p.minibatch_size);
    read(tree, "ppo.policy_lr", p.policy_lr);
    read(tree, "ppo.value_lr", p.value_lr);
    read(tree, "ppo.max_grad_norm", p.max_grad_norm);
    read(tree, "ppo.gamma", p.gae.gamma);
    read(tree, "ppo.lambda", p.gae.lambda);
    read(tree, "ppo.rollout_steps", p.rollout_steps);
    read(tree, "ppo.iterations", p.iterations);
    text.clear();
    read(tree, "ppo.model", text);
    if (!text.empty()) p.model = parse_model_kind(text);
    read(tree, "ppo.hidden", p.hidden);
    read(tree, "ppo.shape_rewards", p.shape_rewards);
    read(tree, "ppo.augment_advantages", p.augment_advantages);
    p.env = c.env_options;

    SacConfig& s = c.sac;
    read(tree, "sac.capacity", s.capacity);
    read(tree, "sac.batch_size", s.batch_size);
    read(tree, "sac.q_lr", s.q_lr);
    read(tree, "sac.value_lr", s.value_lr);
    read(tree, "sac.policy_lr", s.policy_lr);
    read(tree, "sac.tau", s.tau);
    read(tree, "sac.gamma", s.gamma);
    read(tree, "sac.hidden", s.hidden);
    text.clear();
    read(tree, "sac.model", text);
    if (!text.empty()) s.model = parse_model_kind(text);
    read(tree, "sac.entropy_samples", s.entropy_samples);
    read(tree, "sac.warmup_steps", s.warmup_steps);
    read(tree, "sac.steps_per_iteration", s.steps_per_iteration);
    read(tree, "sac.iterations", s.iterations);
    read(tree, "sac.alpha_decay_interval", s.alpha_decay_interval);
    read(tree, "sac.max_grad_norm", s.max_grad_norm);
    s.env = c.env_options;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

pt::ptree read_tree(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  return tree;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::ifstream open_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return in;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  const pt::ptree tree = read_tree(in);
  if (tree.count("sweep")) throw ConfigError("[sweep] sections belong to sweep configs");
  return config_from_tree(tree);
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in = open_config(path);
  return parse_config(in);
}

std::vector<ExperimentConfig> parse_sweep(std::istream& in) {
  const pt::ptree tree = read_tree(in);
  pt::ptree base = tree;
  base.erase("sweep");
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  if (const auto sweep = tree.get_child_optional("sweep")) {
    for (const auto& [key, value] : *sweep) {
      const auto dot = key.find('.');
      if (dot == std::string::npos || dot == 0 || dot + 1 == key.size())
        throw ConfigError("sweep keys take the form section.key, got '" + key + "'");
      auto values = split_list(value.data());
      if (values.empty()) throw ConfigError("sweep axis '" + key + "' has no values");
      axes.emplace_back(key, std::move(values));
    }
  }
  std::vector<ExperimentConfig> out;
  std::vector<std::size_t> pos(axes.size(), 0);
  const ExperimentConfig root = config_from_tree(base);
  for (;;) {
    pt::ptree point = base;
    std::string suffix;
    for (std::size_t k = 0; k < axes.size(); ++k) {
      const auto& [key, values] = axes[k];
      point.put(pt::ptree::path_type(key, '.'), values[pos[k]]);
      suffix += "_" + key.substr(key.find('.') + 1) + "=" + values[pos[k]];
    }
    ExperimentConfig c = config_from_tree(point);
    c.name = root.name + suffix;
    out.push_back(std::move(c));
    std::size_t k = 0;
    for (; k < axes.size(); ++k) {
      if (++pos[k] < axes[k].second.size()) break;
      pos[k] = 0;
    }
    if (k == axes.size()) break;
  }
  return out;
}

std::vector<ExperimentConfig> load_sweep(const fs::path& path) {
  std::ifstream in = open_config(path);
  return parse_sweep(in);
}

// ---------------------------------------------------------------------------
// Records and aggregation

TrainingRecord run_single(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.learner == LearnerKind::kPpo) {
    PpoConfig p = config.ppo;
    p.env = config.env_options;
    return train(config.env, p, config.schedule, seed);
  }
  SacConfig s = config.sac;
  s.env = config.env_options;
  return sac_train(config.env, s, config.schedule, seed);
}

std::size_t Aggregate::metric_index(const std::string& name) const {
  const auto it = std::find(metrics.begin(), metrics.end(), name);
  if (it == metrics.end()) throw std::out_of_range("no such metric: " + name);
  return static_cast<std::size_t>(it - metrics.begin());
}

void Aggregate::write_csv(std::ostream& os) const {
  os << "iteration";
  for (const std::string& m : metrics) os << ',' << m << "_mean," << m << "_se";
  os << ",n_seeds\n" << std::setprecision(17);
  for (std::size_t r = 0; r < iteration.size(); ++r) {
    os << iteration[r];
    for (std::size_t m = 0; m < metrics.size(); ++m)
      os << ',' << mean[m][r] << ',' << std_error[m][r];
    os << ',' << n_seeds[r] << '\n';
  }
}

Aggregate aggregate_records(std::span<const TrainingRecord> records) {
  Aggregate agg;
  if (records.empty()) return agg;
  const auto columns = records.front().columns();
  agg.metrics.assign(columns.begin() + 1, columns.end());
  std::size_t rows = 0;
  for (const TrainingRecord& r : records) {
    if (r.columns() != columns) throw std::invalid_argument("records have different columns");
    rows = std::max(rows, r.rows.size());
  }
  std::vector<std::vector<double>> data;  // per record, per column
  agg.mean.assign(agg.metrics.size(), std::vector<double>(rows, 0.0));
  agg.std_error.assign(agg.metrics.size(), std::vector<double>(rows, 0.0));
  agg.n_seeds.assign(rows, 0);
  agg.iteration.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) agg.iteration[i] = static_cast<double>(i);
  for (std::size_t m = 0; m < agg.metrics.size(); ++m) {
    std::vector<std::vector<double>> cols;
    for (const TrainingRecord& r : records) cols.push_back(r.column(agg.metrics[m]));
    for (std::size_t i = 0; i < rows; ++i) {
      double sum = 0.0;
      int count = 0;
      for (const auto& c : cols)
        if (i < c.size()) sum += c[i], ++count;
      const double mu = sum / count;
      double ss = 0.0;
      for (const auto& c : cols)
        if (i < c.size()) ss += (c[i] - mu) * (c[i] - mu);
      agg.mean[m][i] = mu;
      agg.std_error[m][i] = count > 1 ? std::sqrt(ss / (count - 1)) / std::sqrt(count) : 0.0;
      agg.n_seeds[i] = count;
    }
  }
  return agg;
}

std::vector<double> CsvTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::out_of_range("no such column: " + name);
  const auto k = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(k));
  return out;
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) return t;
  t.columns = split_list(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != t.columns.size())
      throw std::runtime_error("csv row width does not match header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_csv(in);
}

TrainingRecord record_from_csv(const CsvTable& table) {
  const auto& base = TrainingRecord::base_columns();
  if (table.columns.size() < base.size() ||
      !std::equal(base.begin(), base.end(), table.columns.begin()))
    throw std::runtime_error("csv is not a training record");
  TrainingRecord rec;
  rec.extra_columns.assign(table.columns.begin() + static_cast<std::ptrdiff_t>(base.size()),
                           table.columns.end());
  for (const auto& r : table.rows) {
    IterationMetrics m;
    m.iteration = static_cast<int>(r[0]);
    m.raw_return_mean = r[1];
    m.raw_return_std = r[2];
    m.entropy_mean = r[3];
    m.alpha = r[4];
    m.policy_loss = r[5];
    m.value_loss = r[6];
    m.kl = r[7];
    m.extra.assign(r.begin() + static_cast<std::ptrdiff_t>(base.size()), r.end());
    rec.rows.push_back(std::move(m));
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Plotting

void write_svg_plot(std::ostream& os, std::span<const Curve> curves, const std::string& title,
                    const std::string& y_label) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  const double W = 720, H = 440, left = 70, right = 200, top = 40, bottom = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const Curve& c : curves)
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      x0 = std::min(x0, c.x[i]);
      x1 = std::max(x1, c.x[i]);
      y0 = std::min(y0, c.mean[i] - c.std_error[i]);
      y1 = std::max(y1, c.mean[i] + c.std_error[i]);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (W - left - right); };
  auto py = [&](double y) { return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom); };

  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 - right / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << title << "</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right
     << "\" y2=\"" << H - bottom << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
     << H - bottom << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = y0 + (y1 - y0) * k / 4.0, xv = x0 + (x1 - x0) * k / 4.0;
    os << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
       << std::setprecision(3) << yv << std::setprecision(2) << "</text>\n";
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - bottom + 16
       << "\" text-anchor=\"middle\">" << std::setprecision(0) << xv << std::setprecision(2)
       << "</text>\n";
  }
  os << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\">iteration</text>\n";
  os << "<text transform=\"translate(18," << (top + H - bottom) / 2
     << ") rotate(-90)\" text-anchor=\"middle\">" << y_label << "</text>\n";

  for (std::size_t k = 0; k < curves.size(); ++k) {
    const Curve& c = curves[k];
    const char* color = palette[k % std::size(palette)];
    if (c.x.empty()) continue;
    os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < c.x.size(); ++i)
      os << px(c.x[i]) << ',' << py(c.mean[i] + c.std_error[i]) << ' ';
    for (std::size_t i = c.x.size(); i-- > 0;)
      os << px(c.x[i]) << ',' << py(c.mean[i] - c.std_error[i]) << ' ';
    os << "\"/>\n<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.6\" points=\"";
    for (std::size_t i = 0; i < c.x.size(); ++i) os << px(c.x[i]) << ',' << py(c.mean[i]) << ' ';
    os << "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << W - right + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - right + 32
       << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"3\"/>\n";
    os << "<text x=\"" << W - right + 38 << "\" y=\"" << ly + 4 << "\">" << c.label
       << "</text>\n";
  }
  os << "</svg>\n";
}

namespace {

Curve curve_from(const std::string& label, const Aggregate& agg, const std::string& metric) {
  const std::size_t m = agg.metric_index(metric);
  return Curve{label, agg.iteration, agg.mean[m], agg.std_error[m]};
}

}  // namespace

// ---------------------------------------------------------------------------
// Experiments

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult res;
  res.name = config.name;
  res.seeds = config.seeds;
  res.directory = config.output_dir / config.name;
  fs::create_directories(res.directory);
  res.records.resize(config.seeds.size());
  std::vector<std::string> errors(config.seeds.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k; (k = next.fetch_add(1)) < config.seeds.size();) {
      const std::uint64_t seed = config.seeds[k];
      try {
        TrainingRecord rec = run_single(config, seed);
        std::ofstream f(res.directory / ("seed_" + std::to_string(seed) + ".csv"));
        rec.write_csv(f);
        res.records[k] = std::move(rec);
      } catch (const std::exception& e) {
        errors[k] = "seed " + std::to_string(seed) + ": " + e.what();
      }
    }
  };
  const int n_threads =
      std::min<int>(config.jobs, static_cast<int>(config.seeds.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<TrainingRecord> done;
  std::ofstream missing;
  for (std::size_t k = 0; k < config.seeds.size(); ++k) {
    if (res.records[k]) {
      done.push_back(*res.records[k]);
      continue;
    }
    res.errors.push_back(errors[k]);
    if (!missing.is_open()) missing.open(res.directory / "missing_seeds.txt");
    missing << errors[k] << '\n';
  }
  res.aggregate = aggregate_records(done);
  {
    std::ofstream f(res.directory / "aggregate.csv");
    res.aggregate.write_csv(f);
  }
  if (config.plot && !done.empty()) {
    std::ofstream f(res.directory / "aggregate.svg");
    const Curve c = curve_from(config.name, res.aggregate, "raw_return_mean");
    write_svg_plot(f, std::span<const Curve>(&c, 1), config.name, "raw return");
  }
  return res;
}

std::vector<ReportRow> report(const fs::path& root, std::ostream& out, double tail_fraction,
                              bool plot) {
  if (!fs::exists(root)) throw ConfigError("no such directory: " + root.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().filename() == "aggregate.csv")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<ReportRow> rows;
  std::vector<Curve> curves;
  for (const fs::path& file : files) {
    const CsvTable t = read_csv(file);
    if (t.rows.empty()) continue;
    const auto mean = t.column("raw_return_mean_mean");
    const auto se = t.column("raw_return_mean_se");
    const auto seeds = t.column("n_seeds");
    const std::size_t n = mean.size();
    const std::size_t tail =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(tail_fraction * n)));
    ReportRow r;
    r.name = fs::relative(file.parent_path(), root).string();
    if (r.name == ".") r.name = file.parent_path().filename().string();
    r.n_seeds = static_cast<int>(seeds.back());
    for (std::size_t i = n - tail; i < n; ++i) {
      r.final_mean += mean[i] / static_cast<double>(tail);
      r.final_se += se[i] / static_cast<double>(tail);
    }
    r.best_mean = *std::max_element(mean.begin(), mean.end());
    rows.push_back(r);
    curves.push_back(Curve{r.name, t.column("iteration"), mean, se});
  }

  out << std::left << std::setw(44) << "run" << std::right << std::setw(7) << "seeds"
      << std::setw(12) << "final" << std::setw(10) << "se" << std::setw(12) << "best" << '\n';
  out << std::fixed << std::setprecision(4);
  for (const ReportRow& r : rows)
    out << std::left << std::setw(44) << r.name << std::right << std::setw(7) << r.n_seeds
        << std::setw(12) << r.final_mean << std::setw(10) << r.final_se << std::setw(12)
        << r.best_mean << '\n';
  out << std::defaultfloat;

  std::ofstream csv(root / "summary.csv");
  csv << "run,n_seeds,final_mean,final_se,best_mean\n" << std::setprecision(17);
  for (const ReportRow& r : rows)
    csv << r.name << ',' << r.n_seeds << ',' << r.final_mean << ',' << r.final_se << ','
        << r.best_mean << '\n';
  if (plot && !curves.empty()) {
    std::ofstream svg(root / "comparison.svg");
    write_svg_plot(svg, curves, root.filename().string(), "raw return");
  }
  return rows;
}

}  // namespace earl
