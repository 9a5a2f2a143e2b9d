#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace earl {

/// One row of training metrics. Returns are always on raw environment rewards.
struct IterationMetrics {
  int iteration = 0;
  double raw_return_mean = 0.0;
  double raw_return_std = 0.0;
  double entropy_mean = 0.0;
  double alpha = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double kl = 0.0;
  std::vector<double> extra;  // aligned with TrainingRecord::extra_columns
};

struct TrainingRecord {
  std::vector<std::string> extra_columns;
  std::vector<IterationMetrics> rows;

  static const std::vector<std::string>& base_columns();
  std::vector<std::string> columns() const;
  /// Column `name` across all rows; throws std::out_of_range for unknown names.
  std::vector<double> column(const std::string& name) const;

  void write_csv(std::ostream& os) const;
};

/// Thrown when a loss or metric goes non-finite; `what()` carries a dump of
/// the offending batch statistics.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace earl
