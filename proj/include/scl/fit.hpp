#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "scl/core.hpp"

namespace scl {

struct FrontierPoint {
  double c;
  double loss;
  double p;  ///< argmin model size
};

struct ParetoFrontier {
  std::vector<FrontierPoint> points;  ///< c strictly increasing, loss non-increasing
};

/// Lower envelope of the seed-mean curves over log-spaced compute. The grid
/// spans the union of the models' compute ranges; at each c only models whose
/// curve covers c compete. Ladders with disjoint ranges therefore still yield
/// a frontier. Ties go to the smaller model.
ParetoFrontier pareto_frontier(const Ladder& ladder, std::size_t n_grid = 256);

/// c*(p) = kappa p^(1 + gamma) in FLOPs; t*(p) = c*(p) / (F p).
struct HorizonFit {
  double kappa;
  double gamma;
  double flops_per_token = 6.0;
  std::vector<double> sizes;      ///< sizes entering the regression
  std::vector<double> c_star;     ///< geometric-mean argmin compute per size
  std::vector<double> residuals;  ///< log c* minus the fitted line

  double token_kappa() const { return kappa / flops_per_token; }
  double t_star(double model_size) const;
  /// t*(p) = (p / p0)^gamma
  double p0() const;
};

HorizonFit fit_horizon(const ParetoFrontier& frontier, bool drop_extremes,
                       double flops_per_token = 6.0);

/// Horizon rule in token units, t*(p) = kappa p^gamma.
HorizonFit horizon_from_tokens(double kappa_tokens, double gamma, double flops_per_token = 6.0);

struct ScalingLawFit {
  double L0;
  double a;
  double b;
  double residual;  ///< sum of squared log residuals

  double operator()(double c) const;
};

ScalingLawFit fit_scaling_law(std::span<const double> c, std::span<const double> loss);
/// Fits the frontier, skipping the smallest and largest argmin segments
/// when at least 4 sizes appear.
ScalingLawFit fit_scaling_law(const ParetoFrontier& frontier);

struct CoverageWarning {
  double p;
  double deficit;  ///< t*(p) minus the curve's final tokens
  std::int64_t seed;
};

struct StampedLadder {
  Ladder ladder;
  std::vector<CoverageWarning> warnings;
};

StampedLadder apply_horizons(const Ladder& ladder, const HorizonFit& fit);

}  // namespace scl
