#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "scl/core.hpp"
#include "scl/schedules.hpp"

namespace scl {

/// n log-spaced points on [x_min, 1]; the last point is exactly 1.
std::vector<double> default_x_grid(std::size_t n = 64, double x_min = 0.01);

struct NormalizedCurve {
  double p;
  std::int64_t seed;
  std::vector<double> ell;
};

/// (L(x t*) - Lhat) / (L(t*) - Lhat) per curve, with Lhat = offset or L0.
std::vector<NormalizedCurve> normalize(const Ladder& ladder, double L0,
                                       std::optional<double> offset,
                                       std::span<const double> x_grid);

/// Bessel-corrected std over all curves divided by the mean, per x.
std::vector<double> collapse_deviation(std::span<const NormalizedCurve> curves);

struct NoiseFloor {
  std::vector<double> sizes;
  std::vector<std::vector<double>> sigma;  ///< [size][x]

  /// Mean over sizes at every x.
  std::vector<double> mean() const;
  std::vector<double> min() const;
};

NoiseFloor noise_floor(const Ladder& ladder, double L0, std::span<const double> x_grid);

/// Between-size term (spread of seed means) and within-size term (mean of
/// seed variances). Both carry the 1/(N - 1) normalization of the pooled
/// sample variance, so they sum to it exactly.
struct VarianceDecomposition {
  std::vector<double> between;
  std::vector<double> within;
  std::vector<double> total;
};

VarianceDecomposition variance_decomposition(std::span<const NormalizedCurve> curves);

/// Per-size relative seed spread of ell, [size][x].
std::vector<std::vector<double>> per_model_deviation(std::span<const NormalizedCurve> curves);

enum class SigmaAggregate { mean, min };

/// 1 - x_j where j starts the trailing run of interior points (x < 1) with
/// Delta < aggregate sigma; 0 when the last interior point fails.
double supercollapse_extent(std::span<const double> x_grid, std::span<const double> delta,
                            const NoiseFloor& sigma, SigmaAggregate aggregate = SigmaAggregate::mean);

struct DeltaScalingFit {
  double C;
  double residual;   ///< sqrt(SS_res / sum y^2)
  double r_squared;
  std::size_t points;
};

/// Least squares of Delta^2 against C eta(x) (1 - tau_hat(x)) on [x_lo, x_hi].
DeltaScalingFit delta_scaling_fit(std::span<const double> x_grid, std::span<const double> delta,
                                  const Schedule& schedule, double x_lo = 0.5, double x_hi = 0.98);

struct CollapseOptions {
  double L0 = 0.0;
  std::optional<double> offset;
  std::vector<double> x_grid = default_x_grid();
  SigmaAggregate aggregate = SigmaAggregate::mean;
  /// When set, the Delta^2 scaling fit runs under this schedule.
  std::optional<Schedule> schedule;
  double fit_lo = 0.5;
  double fit_hi = 0.98;
  double quality_lo = 0.1;
  double quality_hi = 0.9;
};

struct CollapseReport {
  std::vector<double> x;
  std::vector<double> mean_ell;
  std::vector<double> delta;
  VarianceDecomposition decomposition;
  std::optional<NoiseFloor> sigma;                     ///< needs >= 2 seeds per size
  std::vector<double> sizes;
  std::vector<std::vector<double>> per_model_delta;    ///< empty without seeds
  std::optional<double> supercollapse;
  std::optional<DeltaScalingFit> scaling;
  double quality;                                      ///< mean Delta on the quality window
};

CollapseReport analyze_collapse(const Ladder& ladder, const CollapseOptions& options);

/// Mean of delta over grid points inside [lo, hi].
double window_mean(std::span<const double> x_grid, std::span<const double> delta, double lo,
                   double hi);

struct GammaScan {
  std::vector<double> gammas;
  std::vector<double> quality;  ///< NaN where the horizons are not covered
  double best_gamma;
  double best_quality;
  bool identifiable;            ///< false for a single-size ladder
};

struct GammaScanOptions {
  double kappa = 1.0;  ///< token units, held fixed across the scan
  double L0 = 0.0;
  std::vector<double> x_grid = default_x_grid();
  double lo = 0.1;
  double hi = 0.9;
};

/// Renormalizes a fixed ladder under t*(p) = kappa p^gamma for each gamma.
GammaScan gamma_scan(const Ladder& ladder, std::span<const double> gammas,
                     const GammaScanOptions& options);

/// Regenerates the ladder for each gamma; the generator stamps horizons.
GammaScan gamma_scan(const std::function<Ladder(double)>& generate, std::span<const double> gammas,
                     const GammaScanOptions& options);

}  // namespace scl
