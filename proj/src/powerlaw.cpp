#include "scl/powerlaw.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "scl/error.hpp"
#include "scl/numfmt.hpp"
#include "scl/rng.hpp"
#include "spec_parse.hpp"

namespace scl {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    fail(ErrorKind::argument, fmt::format("{} must be positive, got {}", name, format_double(v)));
  }
}

/// Least-squares slope of y on x.
double ols_slope(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

void SimpleLaw::validate() const {
  if (!(L0 >= 0.0) || !std::isfinite(L0)) fail(ErrorKind::argument, "L0 must be >= 0");
  require_positive(mu, "mu");
  require_positive(nu, "nu");
  require_positive(a_t, "a_t");
  require_positive(a_p, "a_p");
}

void GeneralLaw::validate() const {
  if (!(L0 >= 0.0) || !std::isfinite(L0)) fail(ErrorKind::argument, "L0 must be >= 0");
  if (terms.empty()) fail(ErrorKind::argument, "general law needs at least one term");
  for (const auto& t : terms) {
    require_positive(t.a, "term multiplier a");
    if (!(t.mu >= 0.0 && t.nu >= 0.0) || !(t.mu + t.nu > 0.0)) {
      fail(ErrorKind::argument, "term exponents need mu, nu >= 0 and mu + nu > 0");
    }
  }
}

Law parse_law(std::string_view spec) {
  spec = trim(spec);
  const auto colon = spec.find(':');
  const auto head = trim(spec.substr(0, colon));
  const auto body = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  if (head == "simple") {
    SimpleLaw law;
    for (const auto& [key, value] : detail::key_values(body, "simple law")) {
      const double v = parse_double(value, "simple law");
      if (key == "L0") {
        law.L0 = v;
      } else if (key == "mu") {
        law.mu = v;
      } else if (key == "nu") {
        law.nu = v;
      } else if (key == "at" || key == "a_t") {
        law.a_t = v;
      } else if (key == "ap" || key == "a_p") {
        law.a_p = v;
      } else {
        fail(ErrorKind::parse, "simple law: unknown key '" + std::string(key) + "'");
      }
    }
    law.validate();
    return law;
  }
  if (head == "general") {
    GeneralLaw law;
    const auto parts = detail::split(body, ';');
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const auto part = parts[i];
      if (i == 0 && part.find('=') != std::string_view::npos) {
        const auto kv = detail::key_values(part, "general law");
        if (kv.size() != 1 || kv[0].first != "L0") {
          fail(ErrorKind::parse, "general law: expected L0=<value>, got '" + std::string(part) + "'");
        }
        law.L0 = parse_double(kv[0].second, "general law");
        continue;
      }
      const auto fields = detail::split(part, ',');
      if (fields.size() != 3) {
        fail(ErrorKind::parse, "general law: expected a,mu,nu, got '" + std::string(part) + "'");
      }
      law.terms.push_back({parse_double(fields[0], "general law"),
                           parse_double(fields[1], "general law"),
                           parse_double(fields[2], "general law")});
    }
    law.validate();
    return law;
  }
  fail(ErrorKind::parse, "unknown law kind '" + std::string(head) + "'; use simple: or general:");
}

double law_loss(const SimpleLaw& law, double t, double p) {
  require_positive(t, "t");
  require_positive(p, "p");
  return law.L0 + law.a_t * std::pow(t, -law.mu) + law.a_p * std::pow(p, -law.nu);
}

double law_loss(const GeneralLaw& law, double t, double p) {
  require_positive(t, "t");
  require_positive(p, "p");
  double acc = 0.0;
  for (const auto& term : law.terms) acc += term.a * std::pow(t, -term.mu) * std::pow(p, -term.nu);
  return law.L0 + acc;
}

double law_loss(const Law& law, double t, double p) {
  return std::visit([&](const auto& l) { return law_loss(l, t, p); }, law);
}

OptimalHorizon optimal_horizon(const SimpleLaw& law) {
  law.validate();
  const double r = law.nu / law.mu;
  return {r, std::pow(r * law.a_p / law.a_t, -1.0 / law.mu), r};
}

double analytic_normalized_curve(const SimpleLaw& law, double x) {
  if (!(x > 0.0)) fail(ErrorKind::argument, "normalized compute must be positive");
  const double r = law.nu / law.mu;
  return (r * std::pow(x, -law.mu) + 1.0) / (r + 1.0);
}

double frontier_exponent(const SimpleLaw& law) { return law.mu * law.nu / (law.mu + law.nu); }

Ladder generate_ladder(const Law& law, const LadderGrid& grid, const NoiseOptions& noise) {
  std::visit([](const auto& l) { l.validate(); }, law);
  if (grid.sizes.empty()) fail(ErrorKind::argument, "ladder grid has no sizes");
  for (double p : grid.sizes) require_positive(p, "model size");
  require_positive(grid.gamma, "gamma");
  require_positive(grid.kappa, "kappa");
  require_positive(grid.decades, "decades");
  if (!(grid.extend >= 1.0)) fail(ErrorKind::argument, "extend must be >= 1");
  if (grid.samples_per_curve < 16) fail(ErrorKind::argument, "samples_per_curve must be >= 16");
  if (!(noise.sigma >= 0.0)) fail(ErrorKind::argument, "noise sigma must be >= 0");
  if (noise.seeds < 1) fail(ErrorKind::argument, "seeds must be >= 1");

  const std::size_t n = grid.samples_per_curve;
  const double log_lo = -grid.decades;
  const double log_hi = std::log10(grid.extend);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::pow(10.0, log_lo + (log_hi - log_lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  x.back() = grid.extend;

  std::vector<LossCurve> curves;
  std::map<double, double> horizons;
  for (double p : grid.sizes) {
    const double t_star = grid.kappa * std::pow(p, grid.gamma);
    horizons[p] = t_star;
    std::vector<std::int64_t> steps(n);
    std::vector<double> tokens(n), exact(n);
    for (std::size_t i = 0; i < n; ++i) {
      steps[i] = static_cast<std::int64_t>(i);
      tokens[i] = x[i] * t_star;
      exact[i] = law_loss(law, tokens[i], p);
    }
    if (grid.extend == 1.0) {
      tokens.back() = t_star;
      exact.back() = law_loss(law, t_star, p);
    }
    for (std::int64_t s = 0; s < noise.seeds; ++s) {
      std::vector<double> loss = exact;
      if (noise.sigma > 0.0) {
        NormalStream normal({noise.global_seed, size_key(p), static_cast<std::uint64_t>(s)});
        for (auto& v : loss) v *= std::exp(noise.sigma * normal.next());
      }
      curves.emplace_back(p, s, steps, tokens, std::move(loss));
    }
  }
  return Ladder(std::move(curves), "constant", 6.0, std::move(horizons));
}

CollapseErrorReport asymptotic_collapse_error(const GeneralLaw& law, double gamma, double kappa,
                                              std::span<const double> sizes,
                                              std::span<const double> x_grid) {
  law.validate();
  require_positive(gamma, "gamma");
  require_positive(kappa, "kappa");
  if (sizes.empty() || x_grid.empty()) fail(ErrorKind::argument, "empty size or x grid");

  const std::size_t m = law.terms.size();
  std::vector<double> beta(m);
  for (std::size_t i = 0; i < m; ++i) beta[i] = law.terms[i].mu * gamma + law.terms[i].nu;
  const double beta_min = *std::min_element(beta.begin(), beta.end());
  constexpr double tie_tol = 1e-9;
  std::size_t k = 0;
  double beta_next = std::numeric_limits<double>::infinity();
  for (double b : beta) {
    if (std::abs(b - beta_min) <= tie_tol) {
      ++k;
    } else {
      beta_next = std::min(beta_next, b);
    }
  }

  CollapseErrorReport report;
  report.sizes.assign(sizes.begin(), sizes.end());
  report.tie_count = k;
  report.epsilon = k == m ? std::numeric_limits<double>::infinity() : beta_next - beta_min;

  report.limit_curve.resize(x_grid.size());
  for (std::size_t j = 0; j < x_grid.size(); ++j) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (std::abs(beta[i] - beta_min) > tie_tol) continue;
      const double b = law.terms[i].a * std::pow(kappa, -law.terms[i].mu);
      num += b * std::pow(x_grid[j], -law.terms[i].mu);
      den += b;
    }
    report.limit_curve[j] = num / den;
  }

  for (double p : sizes) {
    require_positive(p, "model size");
    const double t_star = kappa * std::pow(p, gamma);
    const double final_reducible = law_loss(law, t_star, p) - law.L0;
    double worst = 0.0;
    for (std::size_t j = 0; j < x_grid.size(); ++j) {
      const double ell = (law_loss(law, x_grid[j] * t_star, p) - law.L0) / final_reducible;
      worst = std::max(worst, std::abs(ell - report.limit_curve[j]));
    }
    report.deviation.push_back(worst);
  }

  report.exact = k == m && std::all_of(report.deviation.begin(), report.deviation.end(),
                                       [](double d) { return d < 1e-13; });
  report.fitted_slope = std::numeric_limits<double>::quiet_NaN();
  if (!report.exact) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (report.deviation[i] > 0.0) {
        lx.push_back(std::log(sizes[i]));
        ly.push_back(std::log(report.deviation[i]));
      }
    }
    if (lx.size() >= 2) report.fitted_slope = ols_slope(lx, ly);
  }
  return report;
}

}  // namespace scl
