#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "earl/environments.hpp"
#include "earl/mdp.hpp"
#include "earl/ppo.hpp"
#include "earl/record.hpp"
#include "earl/sac.hpp"
#include "earl/schedule.hpp"

namespace earl {

/// Process exit statuses shared by every subcommand.
enum ExitCode : int { kExitOk = 0, kExitViolation = 1, kExitConfigError = 2 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Audit corpus

/// One random tabular problem: up to 20 states, up to 5 actions, discount
/// cycling through {0.5, 0.9, 0.99} and temperature through {0, 0.1, 1}.
struct CorpusInstance {
  TabularMDP mdp;
  double alpha = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr double kCorpusDiscounts[] = {0.5, 0.9, 0.99};
inline constexpr double kCorpusTemperatures[] = {0.0, 0.1, 1.0};

CorpusInstance corpus_instance(std::uint64_t corpus_seed, std::size_t index,
                               std::size_t max_states = 20, std::size_t max_actions = 5);

/// Random softmax policy and a perturbation of it with max_s KL(old || new)
/// at most `max_kl`.
std::pair<TabularPolicy, TabularPolicy> nearby_policy_pair(std::size_t n_states,
                                                           std::size_t n_actions,
                                                           double max_kl, Rng& rng);

struct AuditOptions {
  std::uint64_t seed = 0;
  std::size_t trials = 1000;
  std::optional<std::filesystem::path> output_dir;
  /// Negative control: scales the audited operators so contraction breaks.
  bool inject_fault = false;
};

struct AuditTally {
  std::string name;
  std::size_t checked = 0;
  std::size_t violations = 0;
  bool asserted = true;  // diagnostic tallies never affect the exit status
};

struct AuditOutcome {
  std::vector<AuditTally> tallies;
  int exit_code = kExitOk;

  std::size_t asserted_violations() const;
  void write_text(std::ostream& os) const;
};

/// Runs every audit over the corpus and writes one record file per audit
/// when an output directory is given.
AuditOutcome run_audits(const AuditOptions& options);

// ---------------------------------------------------------------------------
// Experiments

enum class LearnerKind { kPpo, kSac };

const char* to_string(LearnerKind kind);
LearnerKind parse_learner_kind(const std::string& name);

struct ExperimentConfig {
  std::string name = "experiment";
  EnvKind env = EnvKind::kDiagonal;
  EnvOptions env_options;
  LearnerKind learner = LearnerKind::kPpo;
  PpoConfig ppo;
  SacConfig sac;
  TemperatureSchedule schedule;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::filesystem::path output_dir = "results";
  bool plot = true;
  int jobs = 1;

  void validate() const;
};

/// Flat INI with sections experiment, env, schedule, ppo, sac and sweep.
/// Unknown sections or keys raise ConfigError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Expands the [sweep] section (keys `section.key`, comma-separated values)
/// into the cartesian product of configs. Without a [sweep] section the
/// result holds the single base config.
std::vector<ExperimentConfig> parse_sweep(std::istream& in);
std::vector<ExperimentConfig> load_sweep(const std::filesystem::path& path);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);

TrainingRecord run_single(const ExperimentConfig& config, std::uint64_t seed);

/// Per-iteration mean and standard error of every metric across seeds.
struct Aggregate {
  std::vector<std::string> metrics;          // column names except iteration
  std::vector<double> iteration;
  std::vector<std::vector<double>> mean;     // [metric][row]
  std::vector<std::vector<double>> std_error;
  std::vector<int> n_seeds;

  std::size_t metric_index(const std::string& name) const;
  void write_csv(std::ostream& os) const;
};

Aggregate aggregate_records(std::span<const TrainingRecord> records);

/// Generic numeric CSV with a header row.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::vector<double> column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);
/// Rebuilds a training record from a per-seed CSV.
TrainingRecord record_from_csv(const CsvTable& table);

struct ExperimentResult {
  std::string name;
  std::vector<std::uint64_t> seeds;
  std::vector<std::optional<TrainingRecord>> records;  // empty where a seed failed
  std::vector<std::string> errors;                     // one per failed seed
  std::filesystem::path directory;
  Aggregate aggregate;

  bool ok() const { return errors.empty(); }
};

/// Runs all seeds (in `jobs` threads), writes seed_<s>.csv, aggregate.csv and
/// optionally aggregate.svg under output_dir/name.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct Curve {
  std::string label;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> std_error;
};

void write_svg_plot(std::ostream& os, std::span<const Curve> curves, const std::string& title,
                    const std::string& y_label);

struct ReportRow {
  std::string name;
  int n_seeds = 0;
  double final_mean = 0.0;  // mean over the last tail of iterations
  double final_se = 0.0;
  double best_mean = 0.0;
};

/// Summarizes every aggregate.csv under `root`: prints a table, writes
/// summary.csv and (optionally) comparison.svg into `root`.
std::vector<ReportRow> report(const std::filesystem::path& root, std::ostream& out,
                              double tail_fraction = 0.1, bool plot = true);

}  // namespace earl
