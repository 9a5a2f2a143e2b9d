#pragma once

#include <cstdint>
#include <string>

namespace earl {

enum class ScheduleKind { kConstant, kExponential };

const char* to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(const std::string& name);

/// Entropy temperature alpha_k: constant alpha0, or alpha0 * sigma^k.
class TemperatureSchedule {
 public:
  TemperatureSchedule() = default;
  TemperatureSchedule(ScheduleKind kind, double alpha0, double decay = 1.0);

  static TemperatureSchedule constant(double alpha) { return {ScheduleKind::kConstant, alpha}; }
  static TemperatureSchedule exponential(double alpha0, double decay) {
    return {ScheduleKind::kExponential, alpha0, decay};
  }

  ScheduleKind kind() const { return kind_; }
  double alpha0() const { return alpha0_; }
  double decay() const { return decay_; }
  std::int64_t step_count() const { return k_; }

  /// alpha_k for an arbitrary k, without touching the counter.
  double at(std::int64_t k) const;
  double current() const { return at(k_); }
  void reset() { k_ = 0; value_ = alpha0_; }

  /// Returns the current alpha, then advances k. The exponential kind keeps a
  /// running product so consecutive values differ by exactly one factor sigma.
  double step();

  /// Smallest k with gamma / (1 - gamma) * alpha_k * entropy_bound < eps, or -1
  /// when no such k exists (constant schedule with alpha0 too large).
  std::int64_t steps_until_bound(double gamma, double entropy_bound, double eps) const;

 private:
  ScheduleKind kind_ = ScheduleKind::kConstant;
  double alpha0_ = 0.0;
  double decay_ = 1.0;
  std::int64_t k_ = 0;
  double value_ = 0.0;
};

inline double schedule_step(TemperatureSchedule& schedule) { return schedule.step(); }

}  // namespace earl
