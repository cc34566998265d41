#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "scl/collapse.hpp"
#include "scl/powerlaw.hpp"

using scl::ErrorKind;
using scl::GeneralLaw;
using scl::SimpleLaw;
using testing::kind_of;

namespace {

/// Reducible loss minimized over p at fixed compute c = t p by golden section
/// in log p; independent of the closed-form horizon.
struct NumericOpt {
  double p;
  double t;
  double reducible;
};

NumericOpt minimize_at_compute(const SimpleLaw& law, double c) {
  auto f = [&](double lp) {
    const double p = std::exp(lp);
    return scl::law_loss(law, c / p, p) - law.L0;
  };
  double a = std::log(c) - 60.0, b = std::log(c) + 0.0;
  a = std::max(a, -60.0);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < 300; ++i) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  const double p = std::exp(0.5 * (a + b));
  return {p, c / p, f(0.5 * (a + b))};
}

}  // namespace

TEST_CASE("law parser accepts both forms and rejects malformed ones") {
  const auto s = std::get<SimpleLaw>(scl::parse_law("simple:L0=0.1,mu=0.4,nu=0.6,at=2,ap=3"));
  CHECK(s.L0 == 0.1);
  CHECK(s.mu == 0.4);
  CHECK(s.nu == 0.6);
  CHECK(s.a_t == 2.0);
  CHECK(s.a_p == 3.0);
  const auto g = std::get<GeneralLaw>(scl::parse_law("general:L0=0.2;1,0.5,0.5;2,0.3,0.7"));
  CHECK(g.L0 == 0.2);
  REQUIRE(g.terms.size() == 2);
  CHECK(g.terms[1].a == 2.0);
  CHECK(g.terms[1].nu == 0.7);
  CHECK(kind_of([] { scl::parse_law("power:mu=1"); }) == ErrorKind::parse);
  CHECK(kind_of([] { scl::parse_law("simple:mu=x"); }) == ErrorKind::parse);
  CHECK(kind_of([] { scl::parse_law("simple:zeta=1"); }) == ErrorKind::parse);
  CHECK(kind_of([] { scl::parse_law("simple:mu=-1"); }) == ErrorKind::argument);
  CHECK(kind_of([] { scl::parse_law("general:L0=0;1,0.5"); }) == ErrorKind::parse);
  CHECK(kind_of([] { scl::parse_law("general:L0=0"); }) == ErrorKind::argument);
}

TEST_CASE("closed-form horizon agrees with numerical compute-optimal allocation") {
  for (const SimpleLaw law : {SimpleLaw{0.0, 0.5, 0.5, 1.0, 1.0}, SimpleLaw{0.3, 0.3, 0.7, 2.0, 0.5},
                              SimpleLaw{0.0, 1.2, 0.4, 0.7, 3.0}}) {
    const auto h = scl::optimal_horizon(law);
    CHECK(h.gamma == doctest::Approx(law.nu / law.mu));
    for (double c : {1e4, 1e6, 1e8}) {
      const auto opt = minimize_at_compute(law, c);
      CHECK(opt.t == doctest::Approx(h.kappa * std::pow(opt.p, h.gamma)).epsilon(1e-5));
      // Term balance at the optimum.
      const double tt = law.a_t * std::pow(opt.t, -law.mu);
      const double pt = law.a_p * std::pow(opt.p, -law.nu);
      CHECK(tt / pt == doctest::Approx(h.r).epsilon(1e-5));
    }
  }
}

TEST_CASE("frontier exponent matches the numerical slope of optimal loss") {
  const SimpleLaw law{0.0, 0.35, 0.8, 1.5, 0.9};
  const double c1 = 1e5, c2 = 1e7;
  const double slope = std::log(minimize_at_compute(law, c2).reducible /
                                minimize_at_compute(law, c1).reducible) /
                       std::log(c2 / c1);
  CHECK(-slope == doctest::Approx(scl::frontier_exponent(law)).epsilon(1e-6));
}

TEST_CASE("analytic normalized curve is 1 at x = 1 and decreasing") {
  const SimpleLaw law{0.0, 0.5, 1.5, 1.0, 1.0};
  CHECK(scl::analytic_normalized_curve(law, 1.0) == doctest::Approx(1.0));
  double prev = INFINITY;
  for (double x = 0.01; x <= 1.0; x *= 1.3) {
    const double v = scl::analytic_normalized_curve(law, x);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(kind_of([&] { scl::analytic_normalized_curve(law, 0.0); }) == ErrorKind::argument);
}

TEST_CASE("generated ladder collapses exactly under the optimal horizon") {
  const SimpleLaw law{0.2, 0.4, 0.6, 1.3, 0.8};
  const auto h = scl::optimal_horizon(law);
  scl::LadderGrid grid;
  grid.sizes = {10, 40, 160, 640};
  grid.gamma = h.gamma;
  grid.kappa = h.kappa;
  const auto ladder = scl::generate_ladder(law, grid);
  CHECK(ladder.has_horizons());
  // The default grid lands on sample knots (1/63 decade spacing); other
  // grids interpolate between knots.
  for (const auto& [xs, tol] : {std::pair{scl::default_x_grid(), 1e-10},
                                std::pair{scl::default_x_grid(40, 0.01), 1e-4}}) {
    const auto curves = scl::normalize(ladder, law.L0, std::nullopt, xs);
    for (const auto& c : curves) {
      for (std::size_t j = 0; j < xs.size(); ++j) {
        CHECK(c.ell[j] == doctest::Approx(scl::analytic_normalized_curve(law, xs[j])).epsilon(tol));
      }
    }
  }
}

TEST_CASE("noisy ladder is reproducible and seed-dependent") {
  scl::LadderGrid grid;
  grid.sizes = {8, 16};
  scl::NoiseOptions noise{0.05, 3, 7};
  const auto law = scl::parse_law("simple:L0=0,mu=0.5,nu=0.5");
  const auto a = scl::generate_ladder(law, grid, noise);
  const auto b = scl::generate_ladder(law, grid, noise);
  REQUIRE(a.curves().size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(std::ranges::equal(a.curves()[i].loss(), b.curves()[i].loss()));
  CHECK_FALSE(std::ranges::equal(a.curves()[0].loss(), a.curves()[1].loss()));
  noise.global_seed = 8;
  const auto c = scl::generate_ladder(law, grid, noise);
  CHECK_FALSE(std::ranges::equal(a.curves()[0].loss(), c.curves()[0].loss()));
  grid.samples_per_curve = 4;
  CHECK(kind_of([&] { scl::generate_ladder(law, grid); }) == ErrorKind::argument);
}

TEST_CASE("finite-size collapse error decays with the tie gap") {
  // beta_i = mu_i gamma + nu_i with gamma = 1: 1.0, 1.0, 1.3.
  GeneralLaw law{0.0, {{1.0, 0.5, 0.5}, {0.7, 0.3, 0.7}, {0.9, 0.6, 0.7}}};
  std::vector<double> sizes{1e3, 3e3, 1e4, 3e4, 1e5, 3e5, 1e6};
  const auto xs = scl::default_x_grid(32, 0.05);
  const auto r = scl::asymptotic_collapse_error(law, 1.0, 1.0, sizes, xs);
  CHECK(r.tie_count == 2);
  CHECK(r.epsilon == doctest::Approx(0.3));
  CHECK_FALSE(r.exact);
  CHECK(r.fitted_slope == doctest::Approx(-0.3).epsilon(0.1));
  for (std::size_t i = 1; i < r.deviation.size(); ++i) CHECK(r.deviation[i] < r.deviation[i - 1]);

  GeneralLaw tied{0.0, {{1.0, 0.5, 0.5}, {0.7, 0.3, 0.7}}};
  const auto e = scl::asymptotic_collapse_error(tied, 1.0, 1.0, sizes, xs);
  CHECK(e.exact);
  CHECK(std::isinf(e.epsilon));
  CHECK(std::isnan(e.fitted_slope));
}
