#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "scl/core.hpp"
#include "scl/error.hpp"

using scl::ErrorKind;
using scl::Ladder;
using scl::LossCurve;
using testing::kind_of;
using testing::make_curve;

TEST_CASE("loss curve rejects malformed columns") {
  auto build = [](std::vector<double> tokens, std::vector<double> loss) {
    std::vector<std::int64_t> steps(tokens.size());
    for (std::size_t i = 0; i < steps.size(); ++i) steps[i] = static_cast<std::int64_t>(i);
    return LossCurve(1.0, 0, steps, tokens, loss);
  };
  CHECK(kind_of([&] { build({1, 2, 2}, {1, 1, 1}); }) == ErrorKind::validation);
  CHECK(kind_of([&] { build({1, 2, 3}, {1, -1, 1}); }) == ErrorKind::validation);
  CHECK(kind_of([&] { build({1, 2, 3}, {1, NAN, 1}); }) == ErrorKind::validation);
  CHECK(kind_of([&] { build({1}, {1}); }) == ErrorKind::validation);
  CHECK(kind_of([&] { LossCurve(0.0, 0, {0, 1}, {1, 2}, {1, 1}); }) == ErrorKind::validation);
  CHECK(kind_of([&] { LossCurve(1.0, 0, {0, 1}, {1, 2}, {1, 1}, {0.5, 1.5}); }) ==
        ErrorKind::validation);
  CHECK(kind_of([&] { LossCurve(1.0, 0, {0, 1}, {1, 2}, {1, 1}, {}, {1.0}); }) ==
        ErrorKind::validation);
  CHECK_NOTHROW(build({0, 1, 2}, {3, 2, 1}));
}

TEST_CASE("ladder validates horizons and reports sizes in order") {
  auto a = make_curve(4.0, 0, 10, [](double t) { return 1.0 / t; });
  auto b = make_curve(2.0, 1, 10, [](double t) { return 2.0 / t; });
  auto c = make_curve(2.0, 0, 10, [](double t) { return 3.0 / t; });
  Ladder ladder({a, b, c});
  CHECK(ladder.sizes() == std::vector<double>{2.0, 4.0});
  CHECK(ladder.min_seeds_per_size() == 1);
  const auto group = ladder.curves_for(2.0);
  REQUIRE(group.size() == 2);
  CHECK(group[0]->seed() == 0);
  CHECK_FALSE(ladder.has_horizons());
  CHECK(kind_of([&] { ladder.horizon(2.0); }) == ErrorKind::state);
  CHECK(kind_of([&] { Ladder({a}, "constant", -1.0); }) == ErrorKind::validation);
  CHECK(kind_of([&] { Ladder({a}, "constant", 6.0, {{4.0, 0.0}}); }) == ErrorKind::validation);
  CHECK(kind_of([] { Ladder(std::vector<LossCurve>{}); }) == ErrorKind::validation);
  const auto stamped = ladder.with_horizons({{2.0, 5.0}, {4.0, 8.0}});
  CHECK(stamped.has_horizons());
  CHECK(stamped.horizon(4.0) == 8.0);
  CHECK(stamped.compute(10.0, 4.0) == doctest::Approx(240.0));
}

TEST_CASE("log-log interpolation is exact on power laws and hits knots") {
  std::vector<double> t{1, 10, 100, 1000};
  std::vector<double> y;
  for (double v : t) y.push_back(3.0 * std::pow(v, -0.7));
  for (double q : {1.0, 2.5, 10.0, 37.0, 999.0}) {
    CHECK(scl::interp_log_log(t, y, q) == doctest::Approx(3.0 * std::pow(q, -0.7)).epsilon(1e-12));
  }
  CHECK(scl::interp_log_log(t, y, 100.0) == y[2]);
  CHECK(kind_of([&] { scl::interp_log_log(t, y, 0.5); }) == ErrorKind::range);
  CHECK(kind_of([&] { scl::interp_log_log(t, y, 1001.0); }) == ErrorKind::range);
  std::vector<double> t0{0, 2};
  std::vector<double> y0{1, 3};
  CHECK(scl::interp_log_log(t0, y0, 1.0) == doctest::Approx(std::sqrt(3.0)));
  std::vector<double> z{0, 4};
  CHECK(scl::interp_log_log(t0, z, 1.0) == doctest::Approx(2.0));
}

TEST_CASE("ema series seeds with the first value and converges to a constant") {
  std::vector<double> v{4, 0, 0, 0};
  const auto out = scl::ema_series(v, 0.5);
  CHECK(out == std::vector<double>{4, 2, 1, 0.5});
  std::vector<double> flat(50, 2.0);
  for (double s : scl::ema_series(flat, 0.9)) CHECK(s == doctest::Approx(2.0));
}

TEST_CASE("step-aware ema halves a jump after one half-life") {
  // 101 samples spanning 100 steps; half-life 10% = 10 steps.
  std::vector<std::int64_t> steps;
  std::vector<double> tokens, loss;
  for (int i = 0; i <= 100; ++i) {
    steps.push_back(i);
    tokens.push_back(i + 1.0);
    loss.push_back(i == 0 ? 1.0 : 0.0);
  }
  LossCurve c(1.0, 0, steps, tokens, loss);
  const auto s = scl::ema_smooth(c, 0.1);
  CHECK(s.loss()[10] == doctest::Approx(0.5).epsilon(1e-12));
  // Coarser sampling of the same steps decays identically.
  LossCurve coarse(1.0, 0, {0, 10, 20}, {1, 11, 21}, {1, 0, 0});
  auto cs = scl::ema_smooth(coarse, 0.5);  // span 20 steps, half-life 10
  CHECK(cs.loss()[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(kind_of([&] { scl::ema_smooth(c, 0.0); }) == ErrorKind::argument);
}

TEST_CASE("flow time matches the schedule integral") {
  std::vector<std::int64_t> steps;
  std::vector<double> tokens, loss;
  for (int i = 0; i <= 400; ++i) {
    steps.push_back(i);
    tokens.push_back(i * 0.25);
    loss.push_back(1.0);
  }
  LossCurve c(1.0, 0, steps, tokens, loss);
  const double ts = 100.0;
  const auto cosine = scl::Schedule::cosine();
  const auto flow = scl::flow_time(c, cosine, ts);
  for (std::size_t i = 0; i < c.size(); i += 40) {
    const double x = c.tokens()[i] / ts;
    CHECK(flow.tau[i] == doctest::Approx(ts * cosine.integral(x)).epsilon(1e-5));
  }
  CHECK(flow.tau_hat.back() == 1.0);
  const auto constant = scl::flow_time(c, scl::Schedule::constant(), ts);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(constant.tau[i] == doctest::Approx(c.tokens()[i]));
  }
  CHECK(kind_of([&] { scl::flow_time(c, cosine, std::nullopt); }) == ErrorKind::state);
  // Past the horizon the final multiplier of zero adds nothing.
  const auto half = scl::flow_time(c, scl::Schedule::linear_decay(), 50.0);
  CHECK(half.tau.back() == doctest::Approx(25.0).epsilon(1e-6));
}

TEST_CASE("seed mean averages aligned grids and resamples mismatched ones") {
  auto a = make_curve(1.0, 0, 20, [](double t) { return 2.0 / t; });
  auto b = make_curve(1.0, 1, 20, [](double t) { return 4.0 / t; });
  const auto m = scl::seed_mean(Ladder({a, b}));
  REQUIRE(m.curves().size() == 1);
  for (std::size_t i = 0; i < 20; ++i) CHECK(m.curves()[0].loss()[i] == doctest::Approx(3.0 / (i + 1.0)));

  LossCurve shifted(1.0, 1, {0, 1, 2}, {1.5, 3, 30}, {4 / 1.5, 4 / 3.0, 4 / 30.0});
  const auto r = scl::seed_mean(Ladder({a, shifted}));
  const auto& curve = r.curves()[0];
  CHECK(curve.first_tokens() == 2.0);
  CHECK(curve.last_tokens() == 20.0);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    CHECK(curve.loss()[i] == doctest::Approx(3.0 / curve.tokens()[i]).epsilon(1e-12));
  }
}

TEST_CASE("csv and json round trips preserve every column") {
  LossCurve a(2.0, 0, {0, 5, 10}, {0, 10, 20}, {3.0, 2.0, 1.0}, {1.0, 0.5, 0.0},
              {0.3, 0.2, 0.1});
  LossCurve b(4.0, 3, {0, 5, 10}, {0, 10, 20}, {2.5, 1.5, 0.75}, {1.0, 0.5, 0.0},
              {0.25, 0.125, 1.0 / 3.0});
  Ladder ladder({a, b}, "cosine", 6.0, {{2.0, 20.0}, {4.0, 20.0}});
  const auto dir = testing::scratch_dir("roundtrip");
  for (const char* name : {"l.csv", "l.json"}) {
    const auto path = dir / name;
    scl::save_ladder(ladder, path);
    const auto back = scl::load_ladder(path);
    CHECK(back.schedule_id() == "cosine");
    CHECK(back.horizons() == ladder.horizons());
    REQUIRE(back.curves().size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& x = ladder.curves()[k];
      const auto& y = back.curves()[k];
      CHECK(x.model_size() == y.model_size());
      CHECK(x.seed() == y.seed());
      CHECK(std::ranges::equal(x.loss(), y.loss()));
      CHECK(std::ranges::equal(x.tokens(), y.tokens()));
      CHECK(std::ranges::equal(x.steps(), y.steps()));
      CHECK(std::ranges::equal(x.lr(), y.lr()));
      CHECK(std::ranges::equal(x.trsigma(), y.trsigma()));
    }
  }
  CHECK(kind_of([&] { scl::load_ladder(dir / "l.txt"); }) == ErrorKind::argument);
  CHECK(kind_of([&] { scl::load_ladder(dir / "missing.csv"); }) == ErrorKind::io);
}

TEST_CASE("csv reader names the offending line") {
  std::istringstream bad_header("x,y\n1,2\n");
  CHECK(kind_of([&] { scl::read_ladder_csv(bad_header, "f.csv"); }) == ErrorKind::parse);
  std::istringstream short_row("p,seed,step,tokens,loss\n1,0,0,1,2\n1,0,1,2\n");
  try {
    scl::read_ladder_csv(short_row, "f.csv");
    FAIL("expected a parse error");
  } catch (const scl::Error& e) {
    CHECK(e.kind() == ErrorKind::parse);
    CHECK(std::string(e.what()).find("f.csv:3") != std::string::npos);
  }
  std::istringstream dup("p,seed,step,tokens,loss\n1,0,0,1,2\n1,0,1,1,1\n");
  CHECK(kind_of([&] { scl::read_ladder_csv(dup, "f.csv"); }) == ErrorKind::validation);
  std::istringstream partial("p,seed,step,tokens,loss,trsigma\n1,0,0,1,2,0.5\n1,0,1,2,1,0.25\n");
  const auto l = scl::read_ladder_csv(partial);
  CHECK(l.curves()[0].has_trsigma());
  CHECK_FALSE(l.curves()[0].has_lr());
}
