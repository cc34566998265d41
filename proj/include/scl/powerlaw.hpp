#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "scl/core.hpp"

namespace scl {

/// L = L0 + a_t t^-mu + a_p p^-nu
struct SimpleLaw {
  double L0 = 0.0;
  double mu = 0.5;
  double nu = 0.5;
  double a_t = 1.0;
  double a_p = 1.0;

  void validate() const;
};

/// L = L0 + sum_i a_i t^-mu_i p^-nu_i
struct GeneralLaw {
  struct Term {
    double a;
    double mu;
    double nu;
  };
  double L0 = 0.0;
  std::vector<Term> terms;

  void validate() const;
};

using Law = std::variant<SimpleLaw, GeneralLaw>;

/// Parses `simple:L0=0,mu=0.5,nu=0.5[,at=1,ap=1]` or
/// `general:L0=0;a,mu,nu;a,mu,nu;...`.
Law parse_law(std::string_view spec);

double law_loss(const SimpleLaw& law, double t, double p);
double law_loss(const GeneralLaw& law, double t, double p);
double law_loss(const Law& law, double t, double p);

struct OptimalHorizon {
  double gamma;  ///< t*(p) = kappa p^gamma
  double kappa;
  double r;      ///< t-term / p-term balance at t*, equal to nu / mu
};

OptimalHorizon optimal_horizon(const SimpleLaw& law);

/// (r x^-mu + 1) / (r + 1)
double analytic_normalized_curve(const SimpleLaw& law, double x);

/// Compute exponent of the reducible Pareto frontier, mu nu / (mu + nu).
double frontier_exponent(const SimpleLaw& law);

struct NoiseOptions {
  double sigma = 0.0;          ///< multiplicative log-normal scale; 0 disables
  std::int64_t seeds = 1;
  std::uint64_t global_seed = 0;
};

struct LadderGrid {
  std::vector<double> sizes;
  double gamma = 1.0;
  double kappa = 1.0;
  std::size_t samples_per_curve = 190;
  /// Token range covered is [t*/10^decades, extend * t*].
  double decades = 3.0;
  double extend = 1.0;
};

/// Exact (optionally noisy) loss curves with horizons t*(p) = kappa p^gamma
/// stamped on the ladder. The token grid is log-spaced in x = t / t*, so all
/// sizes are sampled at identical normalized compute values.
Ladder generate_ladder(const Law& law, const LadderGrid& grid, const NoiseOptions& noise = {});

struct CollapseErrorReport {
  std::vector<double> sizes;
  std::vector<double> deviation;   ///< max_x |ell(x, p) - limit(x)|
  std::vector<double> limit_curve; ///< on the supplied x grid
  double fitted_slope;             ///< d log deviation / d log p; NaN when exact
  double epsilon;                  ///< beta_{k+1} - beta_1; infinity when k = m
  std::size_t tie_count;           ///< k
  bool exact;                      ///< k = m and every deviation below 1e-13
};

/// Finite-size collapse error of a general law under t*(p) = kappa p^gamma.
CollapseErrorReport asymptotic_collapse_error(const GeneralLaw& law, double gamma, double kappa,
                                              std::span<const double> sizes,
                                              std::span<const double> x_grid);

}  // namespace scl
