#include "earl/record.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace earl {

const std::vector<std::string>& TrainingRecord::base_columns() {
  static const std::vector<std::string> names = {
      "iteration", "raw_return_mean", "raw_return_std", "entropy_mean",
      "alpha",     "policy_loss",     "value_loss",     "kl"};
  return names;
}

std::vector<std::string> TrainingRecord::columns() const {
  std::vector<std::string> out = base_columns();
  out.insert(out.end(), extra_columns.begin(), extra_columns.end());
  return out;
}

std::vector<double> TrainingRecord::column(const std::string& name) const {
  const auto& base = base_columns();
  const auto b = std::find(base.begin(), base.end(), name);
  const auto e = std::find(extra_columns.begin(), extra_columns.end(), name);
  if (b == base.end() && e == extra_columns.end())
    throw std::out_of_range("no such column: " + name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const IterationMetrics& r : rows) {
    if (e != extra_columns.end()) {
      out.push_back(r.extra.at(static_cast<std::size_t>(e - extra_columns.begin())));
      continue;
    }
    switch (b - base.begin()) {
      case 0: out.push_back(r.iteration); break;
      case 1: out.push_back(r.raw_return_mean); break;
      case 2: out.push_back(r.raw_return_std); break;
      case 3: out.push_back(r.entropy_mean); break;
      case 4: out.push_back(r.alpha); break;
      case 5: out.push_back(r.policy_loss); break;
      case 6: out.push_back(r.value_loss); break;
      default: out.push_back(r.kl); break;
    }
  }
  return out;
}

void TrainingRecord::write_csv(std::ostream& os) const {
  const auto names = columns();
  for (std::size_t i = 0; i < names.size(); ++i) os << (i ? "," : "") << names[i];
  os << '\n';
  os << std::setprecision(17);
  for (const IterationMetrics& r : rows) {
    os << r.iteration << ',' << r.raw_return_mean << ',' << r.raw_return_std << ','
       << r.entropy_mean << ',' << r.alpha << ',' << r.policy_loss << ',' << r.value_loss
       << ',' << r.kl;
    for (double x : r.extra) os << ',' << x;
    os << '\n';
  }
}

}  // namespace earl
