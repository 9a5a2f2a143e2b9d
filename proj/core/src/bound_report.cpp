#include "earl/bound_report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace earl {

BoundReport BoundReport::check(std::string label, Relation relation, double lhs, double rhs,
                               double tolerance, std::uint64_t seed) {
  BoundReport r;
  r.label = std::move(label);
  r.seed = seed;
  r.lhs = lhs;
  r.rhs = rhs;
  r.tolerance = tolerance;
  r.relation = relation;
  switch (relation) {
    case Relation::kAtMost: r.slack = rhs - lhs; break;
    case Relation::kAtLeast: r.slack = lhs - rhs; break;
    case Relation::kEqual: r.slack = -std::abs(lhs - rhs); break;
  }
  // NaN never passes.
  r.violated = !(r.slack >= -tolerance);
  return r;
}

const char* to_string(Relation relation) {
  switch (relation) {
    case Relation::kAtMost: return "<=";
    case Relation::kAtLeast: return ">=";
    case Relation::kEqual: return "==";
  }
  return "?";
}

void write_bound_reports(std::ostream& os, std::span<const BoundReport> reports) {
  os << "seed,lhs,rhs,slack,violated,label\n";
  os << std::setprecision(17);
  for (const auto& r : reports) {
    os << r.seed << ',' << r.lhs << ',' << r.rhs << ',' << r.slack << ','
       << (r.violated ? 1 : 0) << ',' << r.label << '\n';
  }
}

std::size_t count_violations(std::span<const BoundReport> reports) {
  return static_cast<std::size_t>(
      std::count_if(reports.begin(), reports.end(), [](const auto& r) { return r.violated; }));
}

}  // namespace earl
