// Command-line front end: audit, train, sweep, report.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "earl/harness.hpp"

namespace fs = std::filesystem;
using namespace earl;

namespace {

int print_runs(const std::vector<ExperimentResult>& results) {
  int status = kExitOk;
  for (const ExperimentResult& r : results) {
    std::cout << r.name << ": " << (r.seeds.size() - r.errors.size()) << "/" << r.seeds.size()
              << " seeds -> " << r.directory.string() << '\n';
    for (const std::string& e : r.errors) std::cerr << "  failed " << e << '\n';
    if (!r.ok()) status = kExitViolation;
  }
  return status;
}

void apply_overrides(ExperimentConfig& c, const std::string& seeds, const std::string& output,
                     int jobs) {
  if (!seeds.empty()) c.seeds = parse_seed_list(seeds);
  if (!output.empty()) c.output_dir = output;
  if (jobs > 0) c.jobs = jobs;
  c.validate();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-augmented reinforcement learning toolkit"};
  app.require_subcommand(1);

  AuditOptions audit_opts;
  std::string audit_out;
  auto* audit = app.add_subcommand("audit", "Check the operator and estimator properties on a random MDP corpus");
  audit->add_option("--seed", audit_opts.seed, "Corpus seed")->capture_default_str();
  audit->add_option("--trials", audit_opts.trials, "Number of random MDPs")->capture_default_str();
  audit->add_option("-o,--output", audit_out, "Directory for per-audit CSV records");
  audit->add_flag("--inject-fault", audit_opts.inject_fault,
                  "Corrupt the audited operators (negative control)")
      ->group("");

  std::string config_path, seeds, output;
  int jobs = 0;
  auto* train_cmd = app.add_subcommand("train", "Run one experiment config over its seeds");
  train_cmd->add_option("-c,--config", config_path, "INI config file")->required();
  train_cmd->add_option("-s,--seeds", seeds, "Seed list, e.g. 0,1,2 or 0-4");
  train_cmd->add_option("-o,--output", output, "Output directory");
  train_cmd->add_option("-j,--jobs", jobs, "Seeds to run concurrently");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run every grid point of a [sweep] config");
  sweep_cmd->add_option("-c,--config", config_path, "INI config file with a [sweep] section")
      ->required();
  sweep_cmd->add_option("-s,--seeds", seeds, "Seed list, e.g. 0,1,2 or 0-4");
  sweep_cmd->add_option("-o,--output", output, "Output directory");
  sweep_cmd->add_option("-j,--jobs", jobs, "Seeds to run concurrently");

  std::string report_dir;
  double tail = 0.1;
  bool no_plot = false;
  auto* report_cmd = app.add_subcommand("report", "Summarize aggregate CSVs under a directory");
  report_cmd->add_option("input", report_dir, "Results directory")->required();
  report_cmd->add_option("--tail", tail, "Fraction of final iterations averaged")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  report_cmd->add_flag("--no-plot", no_plot, "Skip comparison.svg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (*audit) {
      if (!audit_out.empty()) audit_opts.output_dir = fs::path(audit_out);
      const AuditOutcome outcome = run_audits(audit_opts);
      outcome.write_text(std::cout);
      return outcome.exit_code;
    }
    if (*train_cmd) {
      ExperimentConfig c = load_config(config_path);
      apply_overrides(c, seeds, output, jobs);
      return print_runs({run_experiment(c)});
    }
    if (*sweep_cmd) {
      std::vector<ExperimentConfig> grid = load_sweep(config_path);
      std::vector<ExperimentResult> results;
      fs::path root;
      for (ExperimentConfig& c : grid) {
        apply_overrides(c, seeds, output, jobs);
        root = c.output_dir;
        results.push_back(run_experiment(c));
      }
      const int status = print_runs(results);
      report(root, std::cout);
      return status;
    }
    if (*report_cmd) {
      report(report_dir, std::cout, tail, !no_plot);
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitViolation;
  }
  return kExitOk;
}
