#include "scl/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "scl/error.hpp"
#include "scl/numfmt.hpp"
#include "scl/parallel.hpp"
#include "scl/rng.hpp"
#include "spec_parse.hpp"

namespace scl {

namespace {

constexpr double overflow_limit = 1e300;

struct Trajectory {
  std::vector<std::int64_t> steps;
  std::vector<double> tokens, loss, lr, trsigma, flow;
};

void check_setup(const QuadSpec& spec, const RunSetup& setup) {
  spec.validate();
  if (setup.steps < 100) fail(ErrorKind::argument, "a run needs at least 100 steps");
  if (!(setup.floor >= 0.0) || !std::isfinite(setup.floor)) {
    fail(ErrorKind::argument, "floor must be >= 0");
  }
  if (!(setup.tokens_per_step > 0.0)) fail(ErrorKind::argument, "tokens_per_step must be positive");
  if (!(spec.eta0 * spec.lam0 < 2.0)) {
    fail(ErrorKind::argument, fmt::format("unstable: eta0 * lam_max = {} must be < 2",
                                          format_double(spec.eta0 * spec.lam0)));
  }
}

/// Drives a per-step update and records the planned samples. `advance`
/// applies one step at learning rate eta and returns the new loss.
template <class Advance>
Trajectory run_recorded(const QuadSpec& spec, const Schedule& schedule, const RunSetup& setup,
                        double initial_loss, Advance&& advance) {
  const auto plan = setup.record.steps(setup.steps);
  const double trace = spec.trace_h();
  const double total = static_cast<double>(setup.steps);
  Trajectory out;
  out.steps.reserve(plan.size());
  std::size_t next = 0;
  double loss = initial_loss;
  double tau = 0.0;
  for (std::int64_t t = 0;; ++t) {
    const double multiplier = schedule.eta(static_cast<double>(t) / total);
    if (next < plan.size() && plan[next] == t) {
      out.steps.push_back(t);
      out.tokens.push_back(static_cast<double>(t) * setup.tokens_per_step);
      out.loss.push_back(loss);
      out.lr.push_back(multiplier);
      out.trsigma.push_back(spec.noise_coupling * loss * trace / spec.batch);
      out.flow.push_back(tau);
      ++next;
    }
    if (t == setup.steps) break;
    const double eta = spec.eta0 * multiplier;
    loss = advance(eta, loss);
    tau += eta;
    if (!std::isfinite(loss) || loss > overflow_limit) {
      fail(ErrorKind::divergence, fmt::format("loss diverged at step {}", t + 1));
    }
  }
  return out;
}

SimOutput to_output(Trajectory&& tr, double model_size, std::int64_t seed) {
  LossCurve curve(model_size, seed, std::move(tr.steps), std::move(tr.tokens), std::move(tr.loss),
                  std::move(tr.lr), std::move(tr.trsigma));
  return {std::move(curve), std::move(tr.flow)};
}

std::string power_text(double scale, const char* var, double exponent) {
  if (exponent == 0.0) return format_double(scale);
  return fmt::format("{}*{}^{}", format_double(scale), var, format_double(exponent));
}

}  // namespace

double FloorRule::operator()(double model_size) const {
  if (exponent == 0.0) return scale;
  return scale * std::pow(model_size, -exponent);
}

void QuadSpec::validate() const {
  if (modes < 1) fail(ErrorKind::argument, "quad: d must be >= 1");
  if (!(spectrum_exponent >= 0.0)) fail(ErrorKind::argument, "quad: spec_exp must be >= 0");
  if (!(lam0 > 0.0) || !std::isfinite(lam0)) fail(ErrorKind::argument, "quad: lam0 must be positive");
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) {
    fail(ErrorKind::argument, "quad: m0 scale must be >= 0");
  }
  if (!std::isfinite(init_exponent)) fail(ErrorKind::argument, "quad: m0 exponent must be finite");
  if (!(noise_coupling >= 0.0)) fail(ErrorKind::argument, "quad: sigc must be >= 0");
  if (!(batch > 0.0)) fail(ErrorKind::argument, "quad: B must be positive");
  if (!(eta0 > 0.0)) fail(ErrorKind::argument, "quad: eta0 must be positive");
  if (!(floor.scale >= 0.0) || !std::isfinite(floor.exponent)) {
    fail(ErrorKind::argument, "quad: floor must be >= 0");
  }
}

std::vector<double> QuadSpec::eigenvalues() const {
  std::vector<double> lam(modes);
  for (std::size_t i = 0; i < modes; ++i) {
    lam[i] = lam0 * std::pow(static_cast<double>(i + 1), -spectrum_exponent);
  }
  return lam;
}

std::vector<double> QuadSpec::initial_moments() const {
  std::vector<double> m(modes);
  for (std::size_t i = 0; i < modes; ++i) {
    m[i] = init_scale * std::pow(static_cast<double>(i + 1), init_exponent);
  }
  return m;
}

double QuadSpec::trace_h() const {
  double acc = 0.0;
  for (double l : eigenvalues()) acc += l;
  return acc;
}

QuadSpec parse_quad(std::string_view spec) {
  spec = trim(spec);
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos || trim(spec.substr(0, colon)) != "quad") {
    fail(ErrorKind::parse, "quad spec must start with 'quad:'");
  }
  QuadSpec q;
  for (const auto& [key, value] : detail::key_values(spec.substr(colon + 1), "quad spec")) {
    if (key == "d") {
      const auto d = parse_int(value, "quad spec d");
      if (d < 1) fail(ErrorKind::parse, "quad spec: d must be >= 1");
      q.modes = static_cast<std::size_t>(d);
    } else if (key == "spec_exp") {
      q.spectrum_exponent = parse_double(value, "quad spec spec_exp");
    } else if (key == "lam0") {
      q.lam0 = parse_double(value, "quad spec lam0");
    } else if (key == "m0") {
      std::tie(q.init_scale, q.init_exponent) = detail::scaled_power(value, 'i', "quad spec m0");
    } else if (key == "sigc") {
      q.noise_coupling = parse_double(value, "quad spec sigc");
    } else if (key == "B") {
      q.batch = parse_double(value, "quad spec B");
    } else if (key == "eta0") {
      q.eta0 = parse_double(value, "quad spec eta0");
    } else if (key == "floor") {
      const auto [scale, e] = detail::scaled_power(value, 'p', "quad spec floor");
      q.floor = {scale, -e};
    } else {
      fail(ErrorKind::parse, "quad spec: unknown key '" + std::string(key) + "'");
    }
  }
  q.validate();
  return q;
}

std::string quad_id(const QuadSpec& q) {
  return fmt::format("quad:d={},spec_exp={},lam0={},m0={},sigc={},B={},eta0={},floor={}", q.modes,
                     format_double(q.spectrum_exponent), format_double(q.lam0),
                     power_text(q.init_scale, "i", q.init_exponent), format_double(q.noise_coupling),
                     format_double(q.batch), format_double(q.eta0),
                     power_text(q.floor.scale, "p", -q.floor.exponent));
}

std::vector<std::int64_t> RecordPlan::steps(std::int64_t total) const {
  std::vector<std::int64_t> out;
  if (stride > 0) {
    for (std::int64_t t = 0; t < total; t += stride) out.push_back(t);
    out.push_back(total);
    return out;
  }
  if (stride < 0) fail(ErrorKind::argument, "record stride must be >= 0");
  if (log_points < 2) fail(ErrorKind::argument, "log record plan needs >= 2 points");
  std::set<std::int64_t> s{0, total};
  const double top = std::log(static_cast<double>(total));
  for (std::size_t i = 0; i < log_points; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(log_points - 1);
    s.insert(std::clamp<std::int64_t>(std::llround(std::exp(u * top)), 1, total));
  }
  return {s.begin(), s.end()};
}

SimOutput simulate_sgd(const QuadSpec& spec, const Schedule& schedule, const RunSetup& setup,
                       const RunKey& key) {
  check_setup(spec, setup);
  const auto lam = spec.eigenvalues();
  const auto m0 = spec.initial_moments();
  const std::size_t d = lam.size();
  std::vector<double> w(d), noise_scale(d);
  double energy = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    w[i] = std::sqrt(m0[i]);
    noise_scale[i] = std::sqrt(lam[i]);
    energy += lam[i] * w[i] * w[i];
  }
  NormalStream normal({key.global_seed, size_key(key.model_size),
                       static_cast<std::uint64_t>(key.seed)});
  const double coupling = spec.noise_coupling / spec.batch;
  auto step = [&](double eta, double loss) {
    const double amp = coupling > 0.0 ? std::sqrt(coupling * loss) : 0.0;
    double e = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double zeta = amp > 0.0 ? amp * noise_scale[i] * normal.next() : 0.0;
      w[i] -= eta * (lam[i] * w[i] + zeta);
      e += lam[i] * w[i] * w[i];
    }
    return 0.5 * e + setup.floor;
  };
  auto tr = run_recorded(spec, schedule, setup, 0.5 * energy + setup.floor, step);
  return to_output(std::move(tr), key.model_size, key.seed);
}

SimOutput moment_recursion(const QuadSpec& spec, const Schedule& schedule, const RunSetup& setup,
                           double model_size) {
  check_setup(spec, setup);
  const auto lam = spec.eigenvalues();
  auto m = spec.initial_moments();
  double energy = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) energy += lam[i] * m[i];
  const double coupling = spec.noise_coupling / spec.batch;
  auto step = [&](double eta, double loss) {
    double e = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double contraction = 1.0 - eta * lam[i];
      m[i] = contraction * contraction * m[i] + eta * eta * coupling * loss * lam[i];
      e += lam[i] * m[i];
    }
    return 0.5 * e + setup.floor;
  };
  auto tr = run_recorded(spec, schedule, setup, 0.5 * energy + setup.floor, step);
  return to_output(std::move(tr), model_size, 0);
}

ExcessPrediction predicted_excess(const QuadSpec& spec, const SimOutput& expected) {
  const auto& c = expected.curve;
  if (!c.has_lr() || !c.has_trsigma() || expected.flow_time.size() != c.size()) {
    fail(ErrorKind::data, "excess prediction needs lr, trsigma and flow time on every sample");
  }
  const auto lam = spec.eigenvalues();
  const double trace = spec.trace_h();
  ExcessPrediction out;
  out.uncorrected.resize(c.size());
  out.corrected.resize(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double eta = spec.eta0 * c.lr()[k];
    const double tau = expected.flow_time[k];
    out.uncorrected[k] = 0.25 * eta * c.trsigma()[k];
    double filtered = 0.0;
    for (double l : lam) filtered += l * -std::expm1(-2.0 * l * tau);
    out.corrected[k] = 0.25 * eta * c.trsigma()[k] * filtered / trace;
  }
  return out;
}

namespace {

struct PlannedRun {
  double p;
  std::int64_t seed;
  QuadSpec spec;
  RunSetup setup;
};

std::vector<PlannedRun> plan_runs(const CapacityPlan& plan, std::int64_t seeds,
                                  std::map<double, double>& horizons) {
  if (plan.sizes.empty()) fail(ErrorKind::argument, "capacity ladder needs at least one size");
  if (!(plan.gamma > 0.0) || !(plan.kappa > 0.0)) {
    fail(ErrorKind::argument, "capacity ladder needs gamma, kappa > 0");
  }
  if (seeds < 1) fail(ErrorKind::argument, "capacity ladder needs seeds >= 1");
  std::vector<double> sizes = plan.sizes;
  std::sort(sizes.begin(), sizes.end());
  if (std::adjacent_find(sizes.begin(), sizes.end()) != sizes.end()) {
    fail(ErrorKind::argument, "capacity ladder sizes must be distinct");
  }
  std::vector<PlannedRun> runs;
  std::size_t prev_modes = 0;
  double prev_floor = std::numeric_limits<double>::infinity();
  for (double p : sizes) {
    if (!(p > 0.0)) fail(ErrorKind::argument, "model sizes must be positive");
    QuadSpec spec = plan.spec;
    if (plan.modes_for) spec.modes = plan.modes_for(p);
    const double floor = plan.spec.floor(p);
    if (spec.modes < prev_modes) fail(ErrorKind::argument, "mode count d(p) must be non-decreasing");
    if (floor > prev_floor) fail(ErrorKind::argument, "floor(p) must be non-increasing");
    prev_modes = spec.modes;
    prev_floor = floor;
    const double t_star = plan.kappa * std::pow(p, plan.gamma);
    RunSetup setup;
    setup.steps = std::llround(t_star / spec.batch);
    setup.floor = floor;
    setup.tokens_per_step = spec.batch;
    setup.record = plan.record;
    horizons[p] = static_cast<double>(setup.steps) * spec.batch;
    for (std::int64_t s = 0; s < seeds; ++s) runs.push_back({p, s, spec, setup});
  }
  return runs;
}

}  // namespace

Ladder capacity_ladder(const CapacityPlan& plan, const Schedule& schedule) {
  std::map<double, double> horizons;
  const auto runs = plan_runs(plan, plan.seeds, horizons);
  std::vector<std::optional<LossCurve>> slots(runs.size());
  parallel_for(runs.size(), plan.threads, [&](std::size_t i) {
    const auto& r = runs[i];
    slots[i] = simulate_sgd(r.spec, schedule, r.setup, {plan.global_seed, r.p, r.seed}).curve;
  });
  std::vector<LossCurve> curves;
  curves.reserve(slots.size());
  for (auto& s : slots) curves.push_back(std::move(*s));
  return Ladder(std::move(curves), schedule.id(), 6.0, std::move(horizons));
}

Ladder expected_capacity_ladder(const CapacityPlan& plan, const Schedule& schedule) {
  std::map<double, double> horizons;
  const auto runs = plan_runs(plan, 1, horizons);
  std::vector<std::optional<LossCurve>> slots(runs.size());
  parallel_for(runs.size(), plan.threads, [&](std::size_t i) {
    const auto& r = runs[i];
    slots[i] = moment_recursion(r.spec, schedule, r.setup, r.p).curve;
  });
  std::vector<LossCurve> curves;
  for (auto& s : slots) curves.push_back(std::move(*s));
  return Ladder(std::move(curves), schedule.id(), 6.0, std::move(horizons));
}

}  // namespace scl
