#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "scl/collapse.hpp"
#include "scl/powerlaw.hpp"

using scl::ErrorKind;
using scl::NormalizedCurve;
using testing::kind_of;

namespace {

scl::Ladder exact_ladder(double gamma, std::vector<double> sizes = {16, 32, 64, 128, 256, 512, 1024}) {
  scl::LadderGrid grid;
  grid.sizes = std::move(sizes);
  grid.gamma = gamma;
  return scl::generate_ladder(scl::parse_law("simple:L0=0,mu=0.5,nu=0.5"), grid);
}

/// Two-pass Bessel variance; independent of the library's accumulation.
double sample_var(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_CASE("default grid is log spaced and ends exactly at 1") {
  const auto x = scl::default_x_grid(5, 0.01);
  CHECK(x.front() == 0.01);
  CHECK(x.back() == 1.0);
  for (std::size_t i = 1; i < x.size(); ++i) CHECK(x[i] / x[i - 1] == doctest::Approx(std::sqrt(10.0)));
  CHECK(kind_of([] { scl::default_x_grid(1); }) == ErrorKind::argument);
  CHECK(kind_of([] { scl::default_x_grid(8, 1.5); }) == ErrorKind::argument);
}

TEST_CASE("collapse deviation is the relative sample spread") {
  std::vector<NormalizedCurve> curves{{1, 0, {1.0, 2.0}}, {2, 0, {3.0, 2.0}}};
  const auto d = scl::collapse_deviation(curves);
  CHECK(d[0] == doctest::Approx(std::sqrt(2.0) / 2.0));
  CHECK(d[1] == 0.0);
  CHECK(kind_of([&] { scl::collapse_deviation(std::span(curves).first(1)); }) ==
        ErrorKind::insufficient_data);
}

TEST_CASE("variance decomposition sums to the pooled variance") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g;
  std::vector<NormalizedCurve> curves;
  const std::vector<double> sizes{1, 2, 4};
  const std::vector<int> seeds{3, 5, 2};
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    for (int s = 0; s < seeds[k]; ++s) {
      curves.push_back({sizes[k], s, {1.0 + 0.1 * g(rng) + 0.05 * k, 2.0 + g(rng), 0.5 * g(rng) + 3}});
    }
  }
  const auto d = scl::variance_decomposition(curves);
  for (std::size_t j = 0; j < 3; ++j) {
    std::vector<double> column;
    for (const auto& c : curves) column.push_back(c.ell[j]);
    CHECK(d.total[j] == doctest::Approx(sample_var(column)).epsilon(1e-12));
    CHECK(d.between[j] + d.within[j] == doctest::Approx(d.total[j]).epsilon(1e-12));
    CHECK(d.between[j] >= 0.0);
  }
  // Identical seeds within each size leave only the between term.
  std::vector<NormalizedCurve> clean{{1, 0, {1.0}}, {1, 1, {1.0}}, {2, 0, {3.0}}, {2, 1, {3.0}}};
  const auto c = scl::variance_decomposition(clean);
  CHECK(c.within[0] == 0.0);
  CHECK(c.between[0] == doctest::Approx(4.0 / 3.0));
  std::vector<NormalizedCurve> lonely{{1, 0, {1.0}}, {2, 0, {3.0}}, {2, 1, {3.0}}};
  CHECK(kind_of([&] { scl::variance_decomposition(lonely); }) == ErrorKind::insufficient_data);
}

TEST_CASE("supercollapse extent reads the trailing run below the floor") {
  const std::vector<double> x{0.2, 0.4, 0.6, 0.8, 1.0};
  scl::NoiseFloor nf{{1.0, 2.0}, {{1, 1, 1, 1, 1}, {3, 3, 3, 3, 3}}};
  // mean floor 2, min floor 1
  CHECK(scl::supercollapse_extent(x, std::vector<double>{3, 3, 1.5, 1.5, 9}, nf) == doctest::Approx(0.4));
  CHECK(scl::supercollapse_extent(x, std::vector<double>{1.5, 3, 1.5, 1.5, 0}, nf) == doctest::Approx(0.4));
  CHECK(scl::supercollapse_extent(x, std::vector<double>{1, 1, 1, 1, 0}, nf) == doctest::Approx(0.8));
  CHECK(scl::supercollapse_extent(x, std::vector<double>{1, 1, 1, 5, 0}, nf) == 0.0);
  CHECK(scl::supercollapse_extent(x, std::vector<double>{3, 3, 1.5, 1.5, 0}, nf, scl::SigmaAggregate::min) == 0.0);
  CHECK(kind_of([&] { scl::supercollapse_extent(x, std::vector<double>{1, 1}, nf); }) == ErrorKind::argument);
}

TEST_CASE("delta scaling fit recovers an exact proportionality") {
  const auto x = scl::default_x_grid(64);
  for (const auto& sched : {scl::Schedule::linear_decay(), scl::Schedule::cosine(),
                            scl::Schedule::oscillatory(3.0, 0.5)}) {
    std::vector<double> delta;
    for (double v : x) delta.push_back(std::sqrt(0.03 * sched.eta(v) * (1.0 - sched.integral(v) / sched.integral(1.0))));
    const auto fit = scl::delta_scaling_fit(x, delta, sched);
    CHECK(fit.C == doctest::Approx(0.03).epsilon(1e-10));
    CHECK(fit.r_squared == doctest::Approx(1.0));
    CHECK(fit.residual < 1e-10);
    std::size_t n = 0;
    for (double v : x) n += v >= 0.5 && v <= 0.98;
    CHECK(fit.points == n);
  }
  const auto x3 = std::vector<double>{0.1, 0.2, 0.3};
  CHECK(kind_of([&] { scl::delta_scaling_fit(x3, std::vector<double>{1, 1, 1}, scl::Schedule::linear_decay()); }) ==
        ErrorKind::insufficient_data);
}

TEST_CASE("normalized curves equal one at the horizon and scale out multipliers") {
  const auto ladder = exact_ladder(1.0, {16, 64});
  const auto x = scl::default_x_grid();
  const auto a = scl::normalize(ladder, 0.0, std::nullopt, x);
  std::vector<scl::LossCurve> scaled;
  for (const auto& c : ladder.curves()) {
    std::vector<double> l(c.loss().begin(), c.loss().end());
    for (auto& v : l) v = 0.25 + 4.0 * v;
    scaled.push_back(c.with_loss(l));
  }
  const scl::Ladder shifted(scaled, ladder.schedule_id(), 6.0, ladder.horizons());
  const auto b = scl::normalize(shifted, 0.25, std::nullopt, x);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].ell.back() == 1.0);
    for (std::size_t j = 0; j < x.size(); ++j) CHECK(b[i].ell[j] == doctest::Approx(a[i].ell[j]).epsilon(1e-12));
  }
  CHECK(kind_of([&] { scl::normalize(ladder, 10.0, std::nullopt, x); }) == ErrorKind::degenerate);
  CHECK(kind_of([&] { scl::normalize(ladder, 0.0, std::nullopt, scl::default_x_grid(8, 1e-4)); }) == ErrorKind::range);
  CHECK(kind_of([&] { scl::normalize(ladder.with_horizons({}), 0.0, std::nullopt, x); }) == ErrorKind::state);
  const std::vector<double> bad{0.5, 0.2};
  CHECK(kind_of([&] { scl::normalize(ladder, 0.0, std::nullopt, bad); }) == ErrorKind::argument);
}

TEST_CASE("collapse report on a noisy exact ladder") {
  scl::LadderGrid grid;
  grid.sizes = {16, 64, 256};
  const auto ladder = scl::generate_ladder(scl::parse_law("simple:L0=0,mu=0.5,nu=0.5"), grid,
                                           {0.01, 6, 3});
  scl::CollapseOptions o;
  o.schedule = scl::Schedule::constant();
  const auto r = scl::analyze_collapse(ladder, o);
  REQUIRE(r.sigma.has_value());
  CHECK(r.sizes.size() == 3);
  CHECK(r.per_model_delta.size() == 3);
  CHECK(r.supercollapse.has_value());
  CHECK(r.scaling.has_value());
  CHECK(r.delta.back() == 0.0);
  CHECK(r.mean_ell.back() == 1.0);
  CHECK(r.quality == doctest::Approx(scl::window_mean(r.x, r.delta, 0.1, 0.9)));
  // Pure multiplicative noise: Delta tracks the seed noise, which sits near
  // sqrt(2) * 1% once the final-point noise enters the ratio.
  for (std::size_t j = 0; j + 1 < r.x.size(); ++j) CHECK(r.delta[j] < 0.04);

  const auto single = scl::generate_ladder(scl::parse_law("simple:L0=0,mu=0.5,nu=0.5"), grid);
  const auto s = scl::analyze_collapse(single, {});
  CHECK_FALSE(s.sigma.has_value());
  CHECK_FALSE(s.supercollapse.has_value());
  CHECK(s.per_model_delta.empty());
  CHECK(kind_of([&] { scl::noise_floor(single, 0.0, scl::default_x_grid()); }) == ErrorKind::insufficient_data);
}

TEST_CASE("gamma scan singles out the optimal exponent") {
  const auto ladder = exact_ladder(1.0);
  std::vector<double> gammas;
  for (int k = 0; k <= 8; ++k) gammas.push_back(0.8 + 0.05 * k);
  scl::GammaScanOptions o;
  o.kappa = 1.0;
  const auto regen = scl::gamma_scan(
      [&](double g) { return exact_ladder(g); }, gammas, o);
  CHECK(regen.best_gamma == doctest::Approx(1.0));
  CHECK(regen.identifiable);
  CHECK(regen.best_quality < 1e-12);
  for (std::size_t i = 1; i < gammas.size(); ++i) {
    if (gammas[i] <= 1.0) CHECK(regen.quality[i] <= regen.quality[i - 1]);
    else CHECK(regen.quality[i] >= regen.quality[i - 1]);
  }
  // A fixed ladder only covers gammas whose horizons stay within the data.
  const auto fixed = scl::gamma_scan(ladder, gammas, o);
  CHECK(fixed.best_gamma == doctest::Approx(1.0));
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (gammas[i] > 1.0 + 1e-12) CHECK(std::isnan(fixed.quality[i]));
  }
  const std::vector<double> far{1.5, 2.0};
  CHECK(kind_of([&] { scl::gamma_scan(ladder, far, o); }) == ErrorKind::coverage);
  const auto lone = scl::gamma_scan([&](double g) { return exact_ladder(g, {64}); }, gammas, o);
  CHECK_FALSE(lone.identifiable);
  CHECK(lone.best_quality == 0.0);
  CHECK(kind_of([&] { scl::gamma_scan(ladder, std::vector<double>{}, o); }) == ErrorKind::argument);
}
