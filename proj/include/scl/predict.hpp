#pragma once

#include <span>
#include <string>
#include <vector>

#include "scl/core.hpp"
#include "scl/schedules.hpp"

namespace scl {

struct NoiseProfile {
  std::vector<double> x;
  std::vector<double> sizes;
  std::vector<std::vector<double>> h;  ///< [size][x], seed-mean Tr Sigma over seed-mean (L - L0)
  std::vector<double> mean_h;
  double max_rel_spread;               ///< max over x of (max - min) / mean across sizes
  std::string schedule_id;
};

NoiseProfile estimate_h(const Ladder& ladder, double L0, std::span<const double> x_grid);

/// L + alpha * delta_eta * Tr Sigma' pointwise.
std::vector<double> predict_additive(std::span<const double> reference_loss,
                                     std::span<const double> target_trsigma,
                                     std::span<const double> delta_eta, double alpha);

/// ref(y(x)) / (1 - alpha h(x) delta_eta_hat(x)) with y from flow-time
/// matching and delta_eta_hat(x) = eta_target(x) - eta_reference(y(x)).
/// `reference_x` / `reference_reducible` sample the reference curve.
std::vector<double> predict_multiplicative(std::span<const double> reference_x,
                                           std::span<const double> reference_reducible,
                                           std::span<const double> x, std::span<const double> h,
                                           double alpha, const Schedule& target,
                                           const Schedule& reference);

/// One reference/target comparison on the target's sample grid.
struct AlignedPair {
  std::string label;
  std::vector<double> tau;
  std::vector<double> x;
  std::vector<double> reference_loss;  ///< reference at matching flow time
  std::vector<double> target_loss;
  std::vector<double> target_trsigma;
  std::vector<double> delta_eta;
};

/// Aligns a target curve to a reference curve at matching flow time, using
/// the reference's clock. Both runs share the horizon `t_star`; the target
/// needs a trsigma column.
AlignedPair align_pair(const LossCurve& reference, const Schedule& reference_schedule,
                       const LossCurve& target, const Schedule& target_schedule, double t_star,
                       std::string label = {});

struct PairError {
  std::string label;
  double alpha;           ///< best fit for this pair alone; NaN when degenerate
  double max_rel_error;   ///< under the pooled alpha
  bool degenerate;
};

struct AlphaFit {
  double alpha;
  std::vector<PairError> pairs;
  double spread;          ///< max |alpha_pair - alpha| / alpha over non-degenerate pairs
  double reference_alpha_transformer = 0.21;
  double reference_alpha_mlp = 0.26;
};

AlphaFit fit_alpha(std::span<const AlignedPair> pairs);

}  // namespace scl
