#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace scl {

/// Learning-rate multiplier eta(x) on normalized compute x in [0, 1].
class Schedule {
 public:
  struct Constant {};
  struct LinearDecay {};
  struct Cosine {};
  /// eta(x) = 1 - amp * (1 - cos(k pi x))
  struct Oscillatory {
    double k = 3.0;
    double amp = 0.5;
  };
  /// Linear ramp 0 -> 1 over [0, fraction], then the inner schedule rescaled
  /// onto [fraction, 1].
  struct Warmup {
    double fraction = 0.01;
    std::shared_ptr<const Schedule> inner;
  };
  struct Table {
    std::vector<double> x;
    std::vector<double> eta;
  };
  using Kind = std::variant<Constant, LinearDecay, Cosine, Oscillatory, Warmup, Table>;

  static Schedule constant() { return Schedule(Constant{}); }
  static Schedule linear_decay() { return Schedule(LinearDecay{}); }
  static Schedule cosine() { return Schedule(Cosine{}); }
  static Schedule oscillatory(double k, double amp);
  static Schedule warmup(double fraction, Schedule inner);
  static Schedule table(std::vector<double> x, std::vector<double> eta);

  /// Throws an argument error for x outside [0, 1].
  double eta(double x) const;

  /// Integral of eta from 0 to x, exact for the built-in kinds.
  double integral(double x) const;

  /// Canonical spec string; parse_schedule(id()) reproduces the schedule.
  std::string id() const;

  const Kind& kind() const noexcept { return kind_; }

 private:
  explicit Schedule(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

/// Parses `constant`, `linear`, `cosine`, `osc:k=3,amp=0.5`,
/// `warmup:0.01+linear`, `table:@file.csv` or inline `table:0:1,1:0`.
Schedule parse_schedule(std::string_view spec);

double eta_at(const Schedule& schedule, double x);
double delta_eta(const Schedule& target, const Schedule& reference, double x);

/// y with integral_0^y eta_ref = integral_0^x eta_target, clamped to the
/// mapped end point. Throws a degenerate error when the reference never
/// accumulates flow time.
double match_flow_time(const Schedule& target, const Schedule& reference, double x);

/// Normalized flow time tau_hat(x) = integral_0^x eta / integral_0^1 eta.
double normalized_flow_time(const Schedule& schedule, double x);

}  // namespace scl
