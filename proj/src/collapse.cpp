#include "scl/collapse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "scl/error.hpp"
#include "scl/numfmt.hpp"

namespace scl {

namespace {

std::string label(double p, std::int64_t seed) {
  return fmt::format("(p={}, seed={})", format_double(p), seed);
}

void check_coverage(const LossCurve& c, double t_star, double x_min) {
  const double lo = x_min * t_star;
  if (lo < c.first_tokens() || t_star > c.last_tokens()) {
    fail(ErrorKind::range,
         fmt::format("curve {} covers tokens [{}, {}] but normalization needs [{}, {}]",
                     label(c.model_size(), c.seed()), format_double(c.first_tokens()),
                     format_double(c.last_tokens()), format_double(lo), format_double(t_star)));
  }
}

bool covers(const LossCurve& c, double t_star, double x_min) {
  return x_min * t_star >= c.first_tokens() && t_star <= c.last_tokens();
}

double x_min_of(std::span<const double> x_grid) {
  if (x_grid.empty()) fail(ErrorKind::argument, "empty x grid");
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    if (!(x_grid[i] > 0.0 && x_grid[i] <= 1.0)) fail(ErrorKind::argument, "x grid must lie in (0, 1]");
    if (i > 0 && !(x_grid[i] > x_grid[i - 1])) {
      fail(ErrorKind::argument, "x grid must be strictly increasing");
    }
  }
  return x_grid.front();
}

/// Curves grouped by size in ascending order.
std::map<double, std::vector<const NormalizedCurve*>> by_size(std::span<const NormalizedCurve> curves) {
  std::map<double, std::vector<const NormalizedCurve*>> groups;
  for (const auto& c : curves) groups[c.p].push_back(&c);
  return groups;
}

double relative_spread(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0)) / mean;
}

double quality_of(const Ladder& ladder, const GammaScanOptions& o) {
  const auto curves = normalize(ladder, o.L0, std::nullopt, o.x_grid);
  // A lone curve has no spread to measure; the scan is flat and flagged.
  if (curves.size() < 2) return 0.0;
  return window_mean(o.x_grid, collapse_deviation(curves), o.lo, o.hi);
}

GammaScan finish_scan(std::span<const double> gammas, std::vector<double> quality, bool identifiable) {
  GammaScan scan;
  scan.gammas.assign(gammas.begin(), gammas.end());
  scan.quality = std::move(quality);
  scan.identifiable = identifiable;
  scan.best_gamma = std::numeric_limits<double>::quiet_NaN();
  scan.best_quality = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scan.gammas.size(); ++i) {
    if (std::isfinite(scan.quality[i]) && scan.quality[i] < scan.best_quality) {
      scan.best_quality = scan.quality[i];
      scan.best_gamma = scan.gammas[i];
    }
  }
  if (!std::isfinite(scan.best_quality)) {
    fail(ErrorKind::coverage, "no gamma on the grid has horizons covered by every curve");
  }
  return scan;
}

}  // namespace

std::vector<double> default_x_grid(std::size_t n, double x_min) {
  if (n < 2) fail(ErrorKind::argument, "x grid needs at least 2 points");
  if (!(x_min > 0.0 && x_min < 1.0)) fail(ErrorKind::argument, "x grid minimum must lie in (0, 1)");
  std::vector<double> x(n);
  const double lo = std::log10(x_min);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::pow(10.0, lo * (1.0 - static_cast<double>(i) / static_cast<double>(n - 1)));
  }
  x.front() = x_min;
  x.back() = 1.0;
  return x;
}

std::vector<NormalizedCurve> normalize(const Ladder& ladder, double L0,
                                       std::optional<double> offset,
                                       std::span<const double> x_grid) {
  const double x_min = x_min_of(x_grid);
  const double lhat = offset.value_or(L0);
  std::vector<NormalizedCurve> out;
  out.reserve(ladder.curves().size());
  for (const auto& c : ladder.curves()) {
    const double t_star = ladder.horizon(c.model_size());
    check_coverage(c, t_star, x_min);
    const double den = interp_loss(c, t_star) - lhat;
    if (!(den > 0.0)) {
      fail(ErrorKind::degenerate, fmt::format("curve {} has final loss at or below the offset {}",
                                              label(c.model_size(), c.seed()), format_double(lhat)));
    }
    NormalizedCurve n{c.model_size(), c.seed(), std::vector<double>(x_grid.size())};
    for (std::size_t j = 0; j < x_grid.size(); ++j) {
      n.ell[j] = x_grid[j] == 1.0 ? 1.0 : (interp_loss(c, x_grid[j] * t_star) - lhat) / den;
    }
    out.push_back(std::move(n));
  }
  return out;
}

std::vector<double> collapse_deviation(std::span<const NormalizedCurve> curves) {
  if (curves.size() < 2) {
    fail(ErrorKind::insufficient_data, "collapse deviation needs at least 2 curves");
  }
  const std::size_t nx = curves.front().ell.size();
  std::vector<double> delta(nx), column(curves.size());
  for (std::size_t j = 0; j < nx; ++j) {
    for (std::size_t i = 0; i < curves.size(); ++i) column[i] = curves[i].ell[j];
    delta[j] = relative_spread(column);
  }
  return delta;
}

std::vector<double> NoiseFloor::mean() const {
  std::vector<double> out(sigma.front().size(), 0.0);
  for (const auto& row : sigma) {
    for (std::size_t j = 0; j < row.size(); ++j) out[j] += row[j];
  }
  for (auto& v : out) v /= static_cast<double>(sigma.size());
  return out;
}

std::vector<double> NoiseFloor::min() const {
  std::vector<double> out = sigma.front();
  for (const auto& row : sigma) {
    for (std::size_t j = 0; j < row.size(); ++j) out[j] = std::min(out[j], row[j]);
  }
  return out;
}

NoiseFloor noise_floor(const Ladder& ladder, double L0, std::span<const double> x_grid) {
  const double x_min = x_min_of(x_grid);
  NoiseFloor nf;
  for (double p : ladder.sizes()) {
    const auto group = ladder.curves_for(p);
    if (group.size() < 2) {
      fail(ErrorKind::insufficient_data,
           fmt::format("noise floor needs >= 2 seeds, p={} has {}", format_double(p), group.size()));
    }
    const double t_star = ladder.horizon(p);
    for (const LossCurve* c : group) check_coverage(*c, t_star, x_min);
    std::vector<double> row(x_grid.size()), values(group.size());
    for (std::size_t j = 0; j < x_grid.size(); ++j) {
      for (std::size_t s = 0; s < group.size(); ++s) {
        values[s] = interp_loss(*group[s], x_grid[j] * t_star) - L0;
      }
      row[j] = relative_spread(values);
    }
    nf.sizes.push_back(p);
    nf.sigma.push_back(std::move(row));
  }
  return nf;
}

VarianceDecomposition variance_decomposition(std::span<const NormalizedCurve> curves) {
  const auto groups = by_size(curves);
  if (groups.size() < 2) fail(ErrorKind::insufficient_data, "decomposition needs >= 2 sizes");
  for (const auto& [p, g] : groups) {
    if (g.size() < 2) {
      fail(ErrorKind::insufficient_data,
           fmt::format("decomposition needs >= 2 seeds, p={} has {}", format_double(p), g.size()));
    }
  }
  const std::size_t nx = curves.front().ell.size();
  const double n = static_cast<double>(curves.size());
  VarianceDecomposition d{std::vector<double>(nx), std::vector<double>(nx), std::vector<double>(nx)};
  for (std::size_t j = 0; j < nx; ++j) {
    double grand = 0.0;
    for (const auto& c : curves) grand += c.ell[j];
    grand /= n;
    double between = 0.0, within = 0.0, total = 0.0;
    for (const auto& [p, g] : groups) {
      double m = 0.0;
      for (const auto* c : g) m += c->ell[j];
      m /= static_cast<double>(g.size());
      between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
      for (const auto* c : g) {
        within += (c->ell[j] - m) * (c->ell[j] - m);
        total += (c->ell[j] - grand) * (c->ell[j] - grand);
      }
    }
    d.between[j] = between / (n - 1.0);
    d.within[j] = within / (n - 1.0);
    d.total[j] = total / (n - 1.0);
  }
  return d;
}

std::vector<std::vector<double>> per_model_deviation(std::span<const NormalizedCurve> curves) {
  std::vector<std::vector<double>> out;
  for (const auto& [p, g] : by_size(curves)) {
    if (g.size() < 2) {
      fail(ErrorKind::insufficient_data,
           fmt::format("per-model deviation needs >= 2 seeds, p={} has {}", format_double(p), g.size()));
    }
    std::vector<double> row(g.front()->ell.size()), values(g.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
      for (std::size_t s = 0; s < g.size(); ++s) values[s] = g[s]->ell[j];
      row[j] = relative_spread(values);
    }
    out.push_back(std::move(row));
  }
  return out;
}

double supercollapse_extent(std::span<const double> x_grid, std::span<const double> delta,
                            const NoiseFloor& sigma, SigmaAggregate aggregate) {
  if (delta.size() != x_grid.size() || sigma.sigma.empty() ||
      sigma.sigma.front().size() != x_grid.size()) {
    fail(ErrorKind::argument, "supercollapse inputs must share the x grid");
  }
  const auto floor = aggregate == SigmaAggregate::mean ? sigma.mean() : sigma.min();
  std::size_t end = x_grid.size();
  while (end > 0 && x_grid[end - 1] >= 1.0) --end;
  std::size_t j = end;
  while (j > 0 && delta[j - 1] < floor[j - 1]) --j;
  if (j == end) return 0.0;
  return 1.0 - x_grid[j];
}

DeltaScalingFit delta_scaling_fit(std::span<const double> x_grid, std::span<const double> delta,
                                  const Schedule& schedule, double x_lo, double x_hi) {
  if (delta.size() != x_grid.size()) fail(ErrorKind::argument, "delta and x grid lengths differ");
  std::vector<double> y, pred;
  for (std::size_t j = 0; j < x_grid.size(); ++j) {
    const double x = x_grid[j];
    if (x < x_lo || x > x_hi) continue;
    y.push_back(delta[j] * delta[j]);
    pred.push_back(schedule.eta(x) * (1.0 - normalized_flow_time(schedule, x)));
  }
  if (y.size() < 2) fail(ErrorKind::insufficient_data, "delta scaling fit needs >= 2 window points");
  double spp = 0.0, spy = 0.0, syy = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    spp += pred[i] * pred[i];
    spy += pred[i] * y[i];
    syy += y[i] * y[i];
    sy += y[i];
  }
  if (!(spp > 0.0)) fail(ErrorKind::degenerate, "eta (1 - tau_hat) vanishes on the fit window");
  DeltaScalingFit fit{};
  fit.C = spy / spp;
  fit.points = y.size();
  const double mean = sy / static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - fit.C * pred[i];
    ss_res += r * r;
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  fit.residual = syy > 0.0 ? std::sqrt(ss_res / syy) : 0.0;
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

double window_mean(std::span<const double> x_grid, std::span<const double> delta, double lo,
                   double hi) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t j = 0; j < x_grid.size(); ++j) {
    if (x_grid[j] < lo || x_grid[j] > hi) continue;
    acc += delta[j];
    ++n;
  }
  if (n == 0) fail(ErrorKind::argument, "quality window contains no grid points");
  return acc / static_cast<double>(n);
}

CollapseReport analyze_collapse(const Ladder& ladder, const CollapseOptions& o) {
  const auto curves = normalize(ladder, o.L0, o.offset, o.x_grid);
  CollapseReport r;
  r.x = o.x_grid;
  r.sizes = ladder.sizes();
  r.delta = collapse_deviation(curves);
  r.mean_ell.assign(r.x.size(), 0.0);
  for (const auto& c : curves) {
    for (std::size_t j = 0; j < r.x.size(); ++j) r.mean_ell[j] += c.ell[j];
  }
  for (auto& v : r.mean_ell) v /= static_cast<double>(curves.size());
  const bool seeded = ladder.min_seeds_per_size() >= 2;
  if (seeded && r.sizes.size() >= 2) r.decomposition = variance_decomposition(curves);
  if (seeded) {
    r.sigma = noise_floor(ladder, o.L0, o.x_grid);
    r.per_model_delta = per_model_deviation(curves);
    r.supercollapse = supercollapse_extent(r.x, r.delta, *r.sigma, o.aggregate);
  }
  if (o.schedule) r.scaling = delta_scaling_fit(r.x, r.delta, *o.schedule, o.fit_lo, o.fit_hi);
  r.quality = window_mean(r.x, r.delta, o.quality_lo, o.quality_hi);
  return r;
}

GammaScan gamma_scan(const Ladder& ladder, std::span<const double> gammas,
                     const GammaScanOptions& o) {
  if (gammas.empty()) fail(ErrorKind::argument, "gamma grid is empty");
  const double x_min = x_min_of(o.x_grid);
  std::vector<double> quality;
  for (double g : gammas) {
    std::map<double, double> horizons;
    bool ok = g > 0.0;
    for (double p : ladder.sizes()) horizons[p] = o.kappa * std::pow(p, g);
    for (const auto& c : ladder.curves()) ok = ok && covers(c, horizons[c.model_size()], x_min);
    quality.push_back(ok ? quality_of(ladder.with_horizons(horizons), o)
                         : std::numeric_limits<double>::quiet_NaN());
  }
  return finish_scan(gammas, std::move(quality), ladder.sizes().size() >= 2);
}

GammaScan gamma_scan(const std::function<Ladder(double)>& generate, std::span<const double> gammas,
                     const GammaScanOptions& o) {
  if (gammas.empty()) fail(ErrorKind::argument, "gamma grid is empty");
  const double x_min = x_min_of(o.x_grid);
  std::vector<double> quality;
  bool identifiable = true;
  for (double g : gammas) {
    const Ladder ladder = generate(g);
    identifiable = identifiable && ladder.sizes().size() >= 2;
    bool ok = ladder.has_horizons();
    for (const auto& c : ladder.curves()) {
      ok = ok && covers(c, ladder.horizon(c.model_size()), x_min);
    }
    quality.push_back(ok ? quality_of(ladder, o) : std::numeric_limits<double>::quiet_NaN());
  }
  return finish_scan(gammas, std::move(quality), identifiable);
}

}  // namespace scl
