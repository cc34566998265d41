#include "scl/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "scl/error.hpp"
#include "scl/numfmt.hpp"

namespace scl {

namespace {

struct Line {
  double slope;
  double intercept;
  double sse;
};

Line least_squares(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (intercept + slope * x[i]);
    sse += r * r;
  }
  return {slope, intercept, sse};
}

/// Smallest positive sampled token count; curves may start at t = 0.
std::size_t first_positive(const LossCurve& c) {
  std::size_t i = 0;
  while (i < c.size() && !(c.tokens()[i] > 0.0)) ++i;
  return i;
}

}  // namespace

ParetoFrontier pareto_frontier(const Ladder& ladder, std::size_t n_grid) {
  if (n_grid < 1) fail(ErrorKind::argument, "frontier grid needs at least one point");
  const Ladder means = seed_mean(ladder);
  struct Model {
    const LossCurve* curve;
    double c_lo, c_hi;
  };
  std::vector<Model> models;
  for (const auto& c : means.curves()) {
    const std::size_t i = first_positive(c);
    if (i + 1 >= c.size()) continue;
    models.push_back({&c, means.compute(c.tokens()[i], c.model_size()),
                      means.compute(c.last_tokens(), c.model_size())});
  }
  // curves() of a seed-mean ladder is sorted by size, so ties keep the smaller model.
  std::sort(models.begin(), models.end(),
            [](const Model& a, const Model& b) { return a.curve->model_size() < b.curve->model_size(); });
  if (models.empty()) fail(ErrorKind::range, "no curve spans a positive compute range");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& m : models) {
    lo = std::min(lo, m.c_lo);
    hi = std::max(hi, m.c_hi);
  }
  if (!(hi > lo)) fail(ErrorKind::range, "empty compute range");

  std::vector<double> grid(n_grid);
  if (n_grid == 1) {
    grid[0] = std::sqrt(lo * hi);
  } else {
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t k = 0; k < n_grid; ++k) {
      grid[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(n_grid - 1));
    }
    grid.front() = lo;
    grid.back() = hi;
  }

  ParetoFrontier out;
  double running = std::numeric_limits<double>::infinity();
  for (double c : grid) {
    double best = std::numeric_limits<double>::infinity(), best_p = 0.0;
    for (const auto& m : models) {
      if (c < m.c_lo || c > m.c_hi) continue;
      const double t = std::clamp(c / (means.flops_per_token() * m.curve->model_size()),
                                  m.curve->tokens()[first_positive(*m.curve)],
                                  m.curve->last_tokens());
      const double loss = interp_loss(*m.curve, t);
      if (loss < best) {
        best = loss;
        best_p = m.curve->model_size();
      }
    }
    if (!std::isfinite(best) || best > running) continue;
    running = best;
    out.points.push_back({c, best, best_p});
  }
  if (out.points.empty()) fail(ErrorKind::range, "frontier is empty");
  return out;
}

double HorizonFit::t_star(double model_size) const {
  return token_kappa() * std::pow(model_size, gamma);
}

double HorizonFit::p0() const { return std::pow(token_kappa(), -1.0 / gamma); }

HorizonFit fit_horizon(const ParetoFrontier& frontier, bool drop_extremes,
                       double flops_per_token) {
  std::map<double, std::pair<double, std::size_t>> segments;
  for (const auto& pt : frontier.points) {
    auto& s = segments[pt.p];
    s.first += std::log(pt.c);
    ++s.second;
  }
  const std::size_t need = drop_extremes ? 5 : 3;
  if (segments.size() < need) {
    fail(ErrorKind::insufficient_data,
         fmt::format("horizon fit needs >= {} distinct argmin model sizes, frontier has {}", need,
                     segments.size()));
  }
  std::vector<double> lp, lc;
  HorizonFit fit{};
  fit.flops_per_token = flops_per_token;
  std::size_t index = 0;
  for (const auto& [p, s] : segments) {
    const bool extreme = index == 0 || index + 1 == segments.size();
    ++index;
    if (drop_extremes && extreme) continue;
    const double log_c = s.first / static_cast<double>(s.second);
    fit.sizes.push_back(p);
    fit.c_star.push_back(std::exp(log_c));
    lp.push_back(std::log(p));
    lc.push_back(log_c);
  }
  const Line line = least_squares(lp, lc);
  fit.gamma = line.slope - 1.0;
  fit.kappa = std::exp(line.intercept);
  for (std::size_t i = 0; i < lp.size(); ++i) {
    fit.residuals.push_back(lc[i] - (line.intercept + line.slope * lp[i]));
  }
  if (!(fit.gamma > 0.0) || !std::isfinite(fit.kappa)) {
    fail(ErrorKind::fit_failure,
         fmt::format("horizon fit gave non-positive gamma {}", format_double(fit.gamma)));
  }
  return fit;
}

HorizonFit horizon_from_tokens(double kappa_tokens, double gamma, double flops_per_token) {
  if (!(kappa_tokens > 0.0) || !(gamma > 0.0) || !(flops_per_token > 0.0)) {
    fail(ErrorKind::argument, "horizon rule needs kappa, gamma, flops factor > 0");
  }
  HorizonFit fit{};
  fit.kappa = kappa_tokens * flops_per_token;
  fit.gamma = gamma;
  fit.flops_per_token = flops_per_token;
  return fit;
}

double ScalingLawFit::operator()(double c) const { return L0 + a * std::pow(c, -b); }

ScalingLawFit fit_scaling_law(std::span<const double> c, std::span<const double> loss) {
  if (c.size() != loss.size()) fail(ErrorKind::argument, "compute and loss lengths differ");
  if (c.size() < 4) fail(ErrorKind::insufficient_data, "scaling-law fit needs >= 4 points");
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!(c[i] > 0.0) || !(loss[i] > 0.0) || !std::isfinite(c[i]) || !std::isfinite(loss[i])) {
      fail(ErrorKind::validation, "scaling-law points need positive finite c and L");
    }
    if (i > 0 && !(c[i] > c[i - 1])) fail(ErrorKind::validation, "c must be strictly increasing");
  }
  const double l_max = *std::max_element(loss.begin(), loss.end());
  const double l_min = *std::min_element(loss.begin(), loss.end());
  if (!(l_max - l_min > 1e-12 * l_max)) {
    fail(ErrorKind::fit_failure, "flat loss values leave the scaling law undetermined");
  }
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (!(loss[i] < loss[i - 1])) fail(ErrorKind::validation, "L must be strictly decreasing");
  }

  std::vector<double> lx(c.size()), ly(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) lx[i] = std::log(c[i]);
  auto line_at = [&](double L0) {
    for (std::size_t i = 0; i < c.size(); ++i) ly[i] = std::log(loss[i] - L0);
    return least_squares(lx, ly);
  };
  auto objective = [&](double L0) { return line_at(L0).sse; };

  const double upper = (1.0 - 1e-6) * l_min;
  constexpr std::size_t seeds = 64;
  std::vector<double> grid(seeds), value(seeds);
  for (std::size_t k = 0; k < seeds; ++k) {
    grid[k] = upper * static_cast<double>(k) / static_cast<double>(seeds - 1);
    value[k] = objective(grid[k]);
  }
  const auto best = static_cast<std::size_t>(std::min_element(value.begin(), value.end()) - value.begin());
  double lo = grid[best == 0 ? 0 : best - 1];
  double hi = grid[std::min(best + 1, seeds - 1)];
  double best_x = grid[best], best_f = value[best];

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = objective(x1), f2 = objective(x2);
  const double tol = 1e-8 * std::max(upper, std::numeric_limits<double>::min());
  while (hi - lo > tol) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = objective(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = objective(x2);
    }
  }
  for (double x : {x1, x2, 0.5 * (lo + hi)}) {
    const double f = objective(x);
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
  }
  const Line line = line_at(best_x);
  ScalingLawFit fit{best_x, std::exp(line.intercept), -line.slope, line.sse};
  if (!(fit.b > 0.0) || !std::isfinite(fit.a)) {
    fail(ErrorKind::fit_failure, "scaling-law fit gave a non-decaying power law");
  }
  return fit;
}

ScalingLawFit fit_scaling_law(const ParetoFrontier& frontier) {
  // The smallest and largest argmin segments are cut off by the compute
  // range rather than by a competing model, so they are not envelope points.
  double p_lo = std::numeric_limits<double>::infinity(), p_hi = 0.0;
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < frontier.points.size(); ++i) {
    const double p = frontier.points[i].p;
    if (i == 0 || p != frontier.points[i - 1].p) ++distinct;
    p_lo = std::min(p_lo, p);
    p_hi = std::max(p_hi, p);
  }
  const bool trim_ends = distinct >= 4;
  std::vector<double> c, l;
  for (const auto& pt : frontier.points) {
    if (trim_ends && (pt.p == p_lo || pt.p == p_hi)) continue;
    // Plateaus of the running minimum carry no slope information.
    if (!l.empty() && !(pt.loss < l.back())) continue;
    c.push_back(pt.c);
    l.push_back(pt.loss);
  }
  return fit_scaling_law(c, l);
}

StampedLadder apply_horizons(const Ladder& ladder, const HorizonFit& fit) {
  std::map<double, double> horizons;
  for (double p : ladder.sizes()) horizons[p] = fit.t_star(p);
  StampedLadder out{ladder.with_horizons(horizons), {}};
  for (const auto& c : ladder.curves()) {
    const double t = horizons[c.model_size()];
    if (c.last_tokens() < t) out.warnings.push_back({c.model_size(), t - c.last_tokens(), c.seed()});
  }
  return out;
}

}  // namespace scl
