#include "earl/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace earl {

const char* to_string(ScheduleKind kind) {
  return kind == ScheduleKind::kConstant ? "constant" : "exponential";
}

ScheduleKind parse_schedule_kind(const std::string& name) {
  if (name == "constant") return ScheduleKind::kConstant;
  if (name == "exponential" || name == "decay") return ScheduleKind::kExponential;
  throw std::invalid_argument("unknown schedule kind: " + name);
}

TemperatureSchedule::TemperatureSchedule(ScheduleKind kind, double alpha0, double decay)
    : kind_(kind), alpha0_(alpha0), decay_(decay), value_(alpha0) {
  if (!(alpha0 >= 0.0) || !std::isfinite(alpha0))
    throw std::invalid_argument("temperature must be finite and non-negative");
  if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("decay rate must be in (0, 1]");
}

double TemperatureSchedule::at(std::int64_t k) const {
  if (kind_ == ScheduleKind::kConstant || decay_ == 1.0) return alpha0_;
  return alpha0_ * std::pow(decay_, static_cast<double>(k));
}

double TemperatureSchedule::step() {
  const double out = kind_ == ScheduleKind::kConstant ? alpha0_ : value_;
  ++k_;
  if (kind_ == ScheduleKind::kExponential) value_ *= decay_;
  return out;
}

std::int64_t TemperatureSchedule::steps_until_bound(double gamma, double entropy_bound,
                                                    double eps) const {
  const double scale = gamma / (1.0 - gamma) * entropy_bound;
  if (scale * alpha0_ < eps) return 0;
  if (kind_ == ScheduleKind::kConstant || decay_ == 1.0) return -1;
  // alpha0 sigma^k scale < eps  <=>  k > log(eps / (alpha0 scale)) / log sigma
  auto k = static_cast<std::int64_t>(std::floor(std::log(eps / (alpha0_ * scale)) / std::log(decay_)));
  while (scale * at(k) >= eps) ++k;
  while (k > 0 && scale * at(k - 1) < eps) --k;
  return k;
}

}  // namespace earl
