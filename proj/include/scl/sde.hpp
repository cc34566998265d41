#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "scl/core.hpp"
#include "scl/schedules.hpp"

namespace scl {

/// floor(p) = scale * p^-exponent; exponent 0 gives a size-independent floor.
struct FloorRule {
  double scale = 0.0;
  double exponent = 0.0;

  double operator()(double model_size) const;
};

/// Diagonal noisy quadratic: curvatures lam_i = lam0 i^-spectrum_exponent,
/// initial second moments m_i(0) = init_scale i^init_exponent, and gradient
/// noise covariance noise_coupling * L * H / batch.
struct QuadSpec {
  std::size_t modes = 256;
  double spectrum_exponent = 1.2;
  double lam0 = 1.0;
  double init_scale = 1.0;
  double init_exponent = -1.0;
  double noise_coupling = 2.0;
  double batch = 1.0;
  double eta0 = 0.2;
  FloorRule floor{};

  void validate() const;
  std::vector<double> eigenvalues() const;
  std::vector<double> initial_moments() const;
  double trace_h() const;
};

/// Parses `quad:d=256,spec_exp=1.2,lam0=1,m0=i^-1,sigc=2,B=1,eta0=0.2,floor=p^-0.5`.
/// `m0` accepts `c*i^e`, `i^e` or a constant; `floor` accepts `c*p^-e`,
/// `p^-e` or a constant. Omitted keys keep their defaults.
QuadSpec parse_quad(std::string_view spec);
std::string quad_id(const QuadSpec& spec);

/// Which steps a run records. stride 0 records log-spaced steps (count
/// `log_points`, always including step 0 and the final step); otherwise every
/// `stride`-th step plus the final step.
struct RecordPlan {
  std::int64_t stride = 1;
  std::size_t log_points = 256;

  std::vector<std::int64_t> steps(std::int64_t total) const;
};

struct RunKey {
  std::uint64_t global_seed = 0;
  double model_size = 1.0;
  std::int64_t seed = 0;
};

struct RunSetup {
  std::int64_t steps = 1000;
  double floor = 0.0;
  double tokens_per_step = 1.0;
  RecordPlan record{};
};

struct SimOutput {
  LossCurve curve;                 ///< carries lr and trsigma columns
  std::vector<double> flow_time;   ///< sum of eta0 * eta over completed steps
};

/// One SGD trajectory. Throws an argument error when eta0 * lam_max >= 2 or
/// steps < 100, and a divergence error naming the step on overflow.
SimOutput simulate_sgd(const QuadSpec& spec, const Schedule& schedule, const RunSetup& setup,
                       const RunKey& key);

/// Exact expected loss of simulate_sgd under the same discretization.
SimOutput moment_recursion(const QuadSpec& spec, const Schedule& schedule, const RunSetup& setup,
                           double model_size = 1.0);

struct ExcessPrediction {
  std::vector<double> uncorrected;  ///< eta Tr Sigma / 4
  std::vector<double> corrected;    ///< eta sum_i Sigma_ii (1 - exp(-2 lam_i tau)) / 4
};

/// Noise-induced excess on the samples of an expected run; `eta` is the
/// absolute learning rate and `tau` the flow time at each sample.
ExcessPrediction predicted_excess(const QuadSpec& spec, const SimOutput& expected);

struct CapacityPlan {
  QuadSpec spec;
  std::vector<double> sizes;
  /// Mode count per size; defaults to spec.modes for every size.
  std::function<std::size_t(double)> modes_for;
  double gamma = 1.0;
  /// t*(p) = kappa p^gamma tokens; steps = round(t* / batch).
  double kappa = 1.0;
  std::int64_t seeds = 1;
  std::uint64_t global_seed = 0;
  RecordPlan record{};
  unsigned threads = 1;
};

/// One run per (size, seed) with horizons stamped; independent of `threads`.
Ladder capacity_ladder(const CapacityPlan& plan, const Schedule& schedule);

/// Seed-free counterpart: one moment_recursion curve per size.
Ladder expected_capacity_ladder(const CapacityPlan& plan, const Schedule& schedule);

}  // namespace scl
