#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>

namespace earl {

/// Which way an audited inequality points.
enum class Relation { kAtMost, kAtLeast, kEqual };

/// Outcome of checking one inequality or identity on one instance.
///
/// `slack` is signed so that a negative value always means the claim is
/// breached: rhs - lhs for kAtMost, lhs - rhs for kAtLeast and -|lhs - rhs|
/// for kEqual. The report is violated when slack < -tolerance.
struct BoundReport {
  std::string label;
  std::uint64_t seed = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  double tolerance = 0.0;
  Relation relation = Relation::kAtMost;
  bool violated = false;

  static BoundReport check(std::string label, Relation relation, double lhs, double rhs,
                           double tolerance, std::uint64_t seed = 0);
};

const char* to_string(Relation relation);

/// CSV with header `seed,lhs,rhs,slack,violated,label`, one record per report.
void write_bound_reports(std::ostream& os, std::span<const BoundReport> reports);

std::size_t count_violations(std::span<const BoundReport> reports);

}  // namespace earl
