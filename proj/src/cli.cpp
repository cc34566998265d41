#include "scl/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "scl/collapse.hpp"
#include "scl/core.hpp"
#include "scl/error.hpp"
#include "scl/fit.hpp"
#include "scl/numfmt.hpp"
#include "scl/powerlaw.hpp"
#include "scl/predict.hpp"
#include "scl/reports.hpp"
#include "scl/schedules.hpp"
#include "scl/sde.hpp"
#include "spec_parse.hpp"

namespace fs = std::filesystem;

namespace scl {

namespace {

constexpr const char* out_dir_env = "SCALECOLLAPSE_OUT";

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse:
    case ErrorKind::argument:
    case ErrorKind::validation:
      return exit_usage;
    case ErrorKind::insufficient_data:
    case ErrorKind::fit_failure:
      return exit_insufficient;
    case ErrorKind::state:
      return exit_missing_horizons;
    case ErrorKind::data:
      return exit_missing_trsigma;
    case ErrorKind::coverage:
      return exit_coverage;
    default:
      return exit_failure;
  }
}

fs::path default_dir() {
  const char* env = std::getenv(out_dir_env);
  return env && *env ? fs::path(env) : fs::path(".");
}

fs::path resolve_out(const std::string& given, const std::string& fallback) {
  return given.empty() ? default_dir() / fallback : fs::path(given);
}

/// `a..b` doubles from a up to b; otherwise a comma list.
std::vector<double> parse_sizes(const std::string& text) {
  std::vector<double> sizes;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const double lo = parse_double(std::string_view(text).substr(0, dots), "--sizes");
    const double hi = parse_double(std::string_view(text).substr(dots + 2), "--sizes");
    if (!(lo > 0.0) || hi < lo) fail(ErrorKind::parse, "--sizes: expected a..b with 0 < a <= b");
    for (double p = lo; p <= hi * (1.0 + 1e-12); p *= 2.0) sizes.push_back(p);
    return sizes;
  }
  for (auto token : detail::split(text, ',')) sizes.push_back(parse_double(token, "--sizes"));
  if (sizes.empty()) fail(ErrorKind::parse, "--sizes is empty");
  return sizes;
}

/// `start:stop:step` inclusive, or a comma list.
std::vector<double> parse_grid(const std::string& text) {
  const auto parts = detail::split(text, ':');
  std::vector<double> grid;
  if (parts.size() == 3) {
    const double a = parse_double(parts[0], "--grid");
    const double b = parse_double(parts[1], "--grid");
    const double s = parse_double(parts[2], "--grid");
    if (!(s > 0.0) || b < a) fail(ErrorKind::parse, "--grid: expected start:stop:step with step > 0");
    const auto n = static_cast<long>(std::floor((b - a) / s + 1e-9));
    for (long k = 0; k <= n; ++k) grid.push_back(std::round((a + k * s) * 1e12) / 1e12);
    return grid;
  }
  for (auto token : detail::split(text, ',')) grid.push_back(parse_double(token, "--grid"));
  return grid;
}

std::optional<LadderFormat> parse_format(const std::string& text) {
  if (text.empty()) return std::nullopt;
  if (text == "csv") return LadderFormat::csv;
  if (text == "json") return LadderFormat::json;
  fail(ErrorKind::parse, "--format must be csv or json, got '" + text + "'");
}

fs::path with_format(fs::path path, std::optional<LadderFormat> format) {
  if (!format) return path;
  path.replace_extension(*format == LadderFormat::json ? ".json" : ".csv");
  return path;
}

struct Global {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string format;
};

struct SimulateArgs {
  std::string law, quad, schedule = "constant", sizes = "16..1024", out;
  std::optional<double> gamma, kappa;
  std::size_t samples = 190;
  double decades = 3.0, extend = 1.0, noise = 0.0;
  std::int64_t seeds = 1;
  std::int64_t stride = 1;
  std::size_t log_points = 0;
};

Ladder build_ladder(const SimulateArgs& a, const Global& g) {
  if (a.law.empty() == a.quad.empty()) {
    fail(ErrorKind::argument, "simulate needs exactly one of --law or --quad");
  }
  const auto sizes = parse_sizes(a.sizes);
  if (!a.law.empty()) {
    const Law law = parse_law(a.law);
    LadderGrid grid;
    grid.sizes = sizes;
    grid.samples_per_curve = a.samples;
    grid.decades = a.decades;
    grid.extend = a.extend;
    if (const auto* simple = std::get_if<SimpleLaw>(&law)) {
      const auto opt = optimal_horizon(*simple);
      grid.gamma = a.gamma.value_or(opt.gamma);
      grid.kappa = a.kappa.value_or(opt.kappa);
    } else {
      grid.gamma = a.gamma.value_or(1.0);
      grid.kappa = a.kappa.value_or(1.0);
    }
    return generate_ladder(law, grid, {a.noise, a.seeds, g.seed});
  }
  CapacityPlan plan;
  plan.spec = parse_quad(a.quad);
  plan.sizes = sizes;
  plan.gamma = a.gamma.value_or(1.0);
  plan.kappa = a.kappa.value_or(1.0);
  plan.seeds = a.seeds;
  plan.global_seed = g.seed;
  plan.threads = g.threads;
  plan.record.stride = a.log_points > 0 ? 0 : a.stride;
  if (a.log_points > 0) plan.record.log_points = a.log_points;
  return capacity_ladder(plan, parse_schedule(a.schedule));
}

void print_summary(std::ostream& out, const Ladder& ladder, const fs::path& path) {
  fmt::print(out, "wrote {}\n", path.string());
  fmt::print(out, "schedule {}  curves {}  seeds/size {}\n", ladder.schedule_id(),
             ladder.curves().size(), ladder.min_seeds_per_size());
  for (double p : ladder.sizes()) {
    const auto it = ladder.horizons().find(p);
    fmt::print(out, "  p={}  t*={}\n", format_double(p),
               it == ladder.horizons().end() ? std::string("-") : format_double(it->second));
  }
}

int cmd_simulate(const SimulateArgs& a, const Global& g, std::ostream& out) {
  const Ladder ladder = build_ladder(a, g);
  const auto format = parse_format(g.format);
  const fs::path path = with_format(resolve_out(a.out, "ladder.csv"), format);
  save_ladder(ladder, path, format);
  print_summary(out, ladder, path);
  return exit_ok;
}

struct FitArgs {
  std::string ladder, out, stamp;
  std::size_t grid = 256;
  bool drop_extremes = false;
};

int cmd_fit(const FitArgs& a, const Global& g, std::ostream& out, std::ostream& err) {
  const Ladder ladder = load_ladder(a.ladder);
  const auto frontier = pareto_frontier(ladder, a.grid);
  const auto horizon = fit_horizon(frontier, a.drop_extremes, ladder.flops_per_token());
  const auto law = fit_scaling_law(frontier);
  const auto stamped = apply_horizons(ladder, horizon);
  for (const auto& w : stamped.warnings) {
    fmt::print(err, "warning: curve (p={}, seed={}) ends {} tokens before t*(p)\n",
               format_double(w.p), w.seed, format_double(w.deficit));
  }
  const fs::path path = resolve_out(a.out, "fit.json");
  write_json(path, fit_report(frontier, horizon, law, stamped.warnings));
  if (!a.stamp.empty()) {
    const auto format = parse_format(g.format);
    save_ladder(stamped.ladder, with_format(a.stamp, format), format);
  }
  fmt::print(out, "wrote {}\n", path.string());
  fmt::print(out, "gamma {}  kappa {}  L0 {}  a {}  b {}\n", format_double(horizon.gamma),
             format_double(horizon.kappa), format_double(law.L0), format_double(law.a),
             format_double(law.b));
  return exit_ok;
}

struct CollapseArgs {
  std::string ladder, fit, out_dir, schedule, aggregate = "mean";
  std::optional<double> L0, offset;
  std::size_t points = 64;
  double x_min = 0.01;
};

int cmd_collapse(const CollapseArgs& a, std::ostream& out) {
  Ladder ladder = load_ladder(a.ladder);
  double L0 = 0.0;
  if (!a.fit.empty()) {
    const auto report = read_fit_report(a.fit);
    L0 = report.law.L0;
    // Horizons shipped with the ladder take precedence over fitted ones.
    if (!ladder.has_horizons()) ladder = apply_horizons(ladder, report.horizon).ladder;
  }
  if (a.L0) L0 = *a.L0;
  if (!ladder.has_horizons()) {
    fail(ErrorKind::state,
         "ladder has no horizons t*(p); run `fit` and pass --fit, or use a ladder with horizons");
  }
  CollapseOptions o;
  o.L0 = L0;
  o.offset = a.offset;
  o.x_grid = default_x_grid(a.points, a.x_min);
  if (a.aggregate == "min") {
    o.aggregate = SigmaAggregate::min;
  } else if (a.aggregate != "mean") {
    fail(ErrorKind::parse, "--aggregate must be mean or min");
  }
  if (!a.schedule.empty()) o.schedule = parse_schedule(a.schedule);
  const auto report = analyze_collapse(ladder, o);
  const fs::path dir = a.out_dir.empty() ? default_dir() : fs::path(a.out_dir);
  write_collapse_csv(dir / "collapse.csv", report);
  if (report.sigma) write_sigma_csv(dir / "sigma.csv", *report.sigma, report.x);
  Json j = to_json(report);
  j["L0"] = L0;
  j["schedule_id"] = ladder.schedule_id();
  write_json(dir / "report.json", j);
  fmt::print(out, "wrote {}\n", (dir / "report.json").string());
  fmt::print(out, "max delta {}  quality {}\n",
             format_double(*std::max_element(report.delta.begin(), report.delta.end())),
             format_double(report.quality));
  if (report.supercollapse) fmt::print(out, "supercollapse extent {}\n", format_double(*report.supercollapse));
  if (report.scaling) {
    fmt::print(out, "delta^2 fit C {}  R^2 {}\n", format_double(report.scaling->C),
               format_double(report.scaling->r_squared));
  }
  return exit_ok;
}

struct PredictArgs {
  std::string reference, out_dir;
  std::vector<std::string> targets;
  std::optional<double> alpha;
  double ema = 0.01;
};

int cmd_predict(const PredictArgs& a, std::ostream& out, std::ostream& err) {
  const Ladder ref_ladder = load_ladder(a.reference);
  const Schedule ref_schedule = parse_schedule(ref_ladder.schedule_id());
  const Ladder ref_mean = seed_mean(ref_ladder);
  std::vector<AlignedPair> pairs;
  std::vector<PredictionRow> rows;
  auto smooth = [&](const LossCurve& c) { return a.ema > 0.0 ? ema_smooth_all(c, a.ema) : c; };
  for (const auto& target_path : a.targets) {
    const Ladder tgt_ladder = load_ladder(target_path);
    for (const auto& c : tgt_ladder.curves()) {
      if (!c.has_trsigma()) {
        fail(ErrorKind::data, fmt::format("{}: curve (p={}, seed={}) has no trsigma column",
                                          target_path, format_double(c.model_size()), c.seed()));
      }
    }
    const Schedule tgt_schedule = parse_schedule(tgt_ladder.schedule_id());
    const Ladder tgt_mean = seed_mean(tgt_ladder);
    for (const auto& tc : tgt_mean.curves()) {
      const auto refs = ref_mean.curves_for(tc.model_size());
      if (refs.empty()) continue;
      const double t_star = tgt_mean.horizon(tc.model_size());
      const auto label = fmt::format("{}/p={}", tgt_ladder.schedule_id(), format_double(tc.model_size()));
      pairs.push_back(align_pair(smooth(*refs.front()), ref_schedule, smooth(tc), tgt_schedule,
                                 t_star, label));
      rows.push_back({tgt_ladder.schedule_id(), tc.model_size()});
    }
  }
  if (pairs.empty()) fail(ErrorKind::insufficient_data, "no target size matches a reference size");
  AlphaFit fit{};
  if (a.alpha) {
    fit.alpha = *a.alpha;
    fit.spread = 0.0;
    for (const auto& pr : pairs) {
      const auto pred = predict_additive(pr.reference_loss, pr.target_trsigma, pr.delta_eta, fit.alpha);
      double worst = 0.0;
      for (std::size_t k = 0; k < pred.size(); ++k) {
        worst = std::max(worst, std::abs(pred[k] - pr.target_loss[k]) / pr.target_loss[k]);
      }
      fit.pairs.push_back({pr.label, std::nan(""), worst, false});
    }
  } else {
    fit = fit_alpha(pairs);
  }
  for (const auto& p : fit.pairs) {
    if (p.degenerate) {
      fmt::print(err, "warning: pair {} has zero predictor energy and does not inform alpha\n", p.label);
    }
  }
  const fs::path dir = a.out_dir.empty() ? default_dir() : fs::path(a.out_dir);
  write_prediction_csv(dir / "prediction.csv", pairs, rows, fit.alpha);
  Json j = to_json(fit);
  j["fixed_alpha"] = a.alpha.has_value();
  j["ema_half_life_fraction"] = a.ema;
  j["max_rel_error"] = 0.0;
  for (const auto& p : fit.pairs) {
    j["max_rel_error"] = std::max(j["max_rel_error"].get<double>(), p.max_rel_error);
  }
  write_json(dir / "alpha.json", j);
  fmt::print(out, "wrote {}\n", (dir / "alpha.json").string());
  fmt::print(out, "alpha {}  spread {}  max rel error {}\n", format_double(fit.alpha),
             format_double(fit.spread), format_double(j["max_rel_error"].get<double>()));
  return exit_ok;
}

struct GammaArgs {
  std::string ladder, law, sizes = "16..1024", grid = "0.8:1.2:0.05", out;
  std::optional<double> kappa, L0;
  std::size_t samples = 190;
  std::size_t points = 64;
  double x_min = 0.01;
};

/// kappa of t*(p) = kappa p^gamma regressed from stamped horizons.
double kappa_from_horizons(const Ladder& ladder) {
  std::vector<double> lp, lt;
  for (const auto& [p, t] : ladder.horizons()) {
    lp.push_back(std::log(p));
    lt.push_back(std::log(t));
  }
  if (lp.size() == 1) return ladder.horizons().begin()->second;
  const double n = static_cast<double>(lp.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    mx += lp[i] / n;
    my += lt[i] / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    sxy += (lp[i] - mx) * (lt[i] - my);
    sxx += (lp[i] - mx) * (lp[i] - mx);
  }
  return std::exp(my - sxy / sxx * mx);
}

int cmd_gamma_scan(const GammaArgs& a, const Global& g, std::ostream& out, std::ostream& err) {
  if (a.ladder.empty() == a.law.empty()) {
    fail(ErrorKind::argument, "gamma-scan needs exactly one of --ladder or --law");
  }
  const auto gammas = parse_grid(a.grid);
  GammaScanOptions o;
  o.x_grid = default_x_grid(a.points, a.x_min);
  GammaScan scan;
  if (!a.ladder.empty()) {
    const Ladder ladder = load_ladder(a.ladder);
    o.kappa = a.kappa.value_or(ladder.horizons().empty() ? 1.0 : kappa_from_horizons(ladder));
    o.L0 = a.L0.value_or(0.0);
    scan = gamma_scan(ladder, gammas, o);
  } else {
    const Law law = parse_law(a.law);
    const auto sizes = parse_sizes(a.sizes);
    double kappa = 1.0;
    if (const auto* simple = std::get_if<SimpleLaw>(&law)) kappa = optimal_horizon(*simple).kappa;
    o.kappa = a.kappa.value_or(kappa);
    o.L0 = a.L0.value_or(std::visit([](const auto& l) { return l.L0; }, law));
    auto generate = [&](double gamma) {
      LadderGrid grid;
      grid.sizes = sizes;
      grid.gamma = gamma;
      grid.kappa = o.kappa;
      grid.samples_per_curve = a.samples;
      return generate_ladder(law, grid, {0.0, 1, g.seed});
    };
    scan = gamma_scan(std::function<Ladder(double)>(generate), gammas, o);
  }
  if (!scan.identifiable) {
    fmt::print(err, "warning: single-size ladder; collapse quality cannot identify gamma\n");
  }
  const fs::path path = resolve_out(a.out, "gamma_scan.csv");
  write_gamma_scan_csv(path, scan);
  fmt::print(out, "wrote {}\n", path.string());
  fmt::print(out, "best gamma {}  quality {}\n", format_double(scan.best_gamma),
             format_double(scan.best_quality));
  return exit_ok;
}

struct ReportArgs {
  SimulateArgs sim;
  std::vector<std::string> targets;
  std::string out_dir;
  std::size_t fit_grid = 256;
  double ema = 0.01;
  std::string grid = "0.8:1.2:0.05";
};

/// simulate, fit, collapse, gamma-scan and (with targets) predict into one directory.
int cmd_report(const ReportArgs& a, const Global& g, std::ostream& out, std::ostream& err) {
  const fs::path dir = a.out_dir.empty() ? default_dir() / "run" : fs::path(a.out_dir);
  const fs::path ladder_path = dir / "ladder.csv";
  SimulateArgs sim = a.sim;
  sim.out = ladder_path.string();
  Global csv = g;
  csv.format.clear();
  cmd_simulate(sim, csv, out);
  const Ladder ladder = load_ladder(ladder_path);

  Json summary;
  summary["ladder"] = "ladder.csv";
  try {
    FitArgs fa;
    fa.ladder = ladder_path.string();
    fa.out = (dir / "fit.json").string();
    fa.grid = a.fit_grid;
    cmd_fit(fa, csv, out, err);
    summary["fit"] = "fit.json";
  } catch (const Error& e) {
    // Ladders with planted horizons stay analyzable without a frontier fit.
    fmt::print(err, "warning: fit skipped ({}): {}\n", to_string(e.kind()), e.what());
    summary["fit"] = nullptr;
  }

  CollapseArgs ca;
  ca.ladder = ladder_path.string();
  ca.out_dir = (dir / "collapse").string();
  if (ladder.schedule_id() != "constant") ca.schedule = ladder.schedule_id();
  ca.L0 = 0.0;
  if (!sim.law.empty()) ca.L0 = std::visit([](const auto& l) { return l.L0; }, parse_law(sim.law));
  cmd_collapse(ca, out);
  summary["collapse"] = "collapse/report.json";

  if (ladder.sizes().size() >= 2) {
    GammaArgs ga;
    ga.ladder = ladder_path.string();
    ga.grid = a.grid;
    ga.L0 = ca.L0;
    ga.out = (dir / "gamma_scan.csv").string();
    try {
      cmd_gamma_scan(ga, g, out, err);
      summary["gamma_scan"] = "gamma_scan.csv";
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::coverage) throw;
      fmt::print(err, "warning: gamma scan skipped: {}\n", e.what());
      summary["gamma_scan"] = nullptr;
    }
  }

  if (!a.targets.empty()) {
    if (sim.quad.empty()) fail(ErrorKind::argument, "report --target needs a --quad ladder");
    PredictArgs pa;
    pa.reference = ladder_path.string();
    pa.out_dir = (dir / "predict").string();
    pa.ema = a.ema;
    for (std::size_t i = 0; i < a.targets.size(); ++i) {
      SimulateArgs ts = sim;
      ts.schedule = a.targets[i];
      ts.out = (dir / fmt::format("target_{}.csv", i)).string();
      cmd_simulate(ts, csv, out);
      pa.targets.push_back(ts.out);
    }
    cmd_predict(pa, out, err);
    summary["predict"] = "predict/alpha.json";
  }
  write_json(dir / "summary.json", summary);
  fmt::print(out, "wrote {}\n", (dir / "summary.json").string());
  return exit_ok;
}

void add_simulate_options(CLI::App* cmd, SimulateArgs& s) {
  cmd->add_option("--law", s.law, "exact law, e.g. simple:L0=0,mu=0.5,nu=0.5");
  cmd->add_option("--quad", s.quad, "noisy quadratic, e.g. quad:d=256,spec_exp=1.2,B=1");
  cmd->add_option("--schedule", s.schedule, "schedule for --quad runs")->capture_default_str();
  cmd->add_option("--sizes", s.sizes, "a..b (doubling) or a comma list")->capture_default_str();
  cmd->add_option("--gamma", s.gamma, "data exponent of t*(p) = kappa p^gamma");
  cmd->add_option("--kappa", s.kappa, "token multiplier of t*(p)");
  cmd->add_option("--samples", s.samples, "samples per exact-law curve")->capture_default_str();
  cmd->add_option("--decades", s.decades, "token decades below t*")->capture_default_str();
  cmd->add_option("--extend", s.extend, "last sample at extend * t*")->capture_default_str();
  cmd->add_option("--noise", s.noise, "log-normal noise scale for exact laws")->capture_default_str();
  cmd->add_option("--seeds", s.seeds, "seeds per size")->capture_default_str();
  cmd->add_option("--record-stride", s.stride, "record every k-th step (--quad)")->capture_default_str();
  cmd->add_option("--record-log", s.log_points, "record k log-spaced steps instead (--quad)");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Loss-curve scaling collapse toolkit"};
  app.name("scalecollapse");
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML config file; command-line flags win");
  Global g;
  app.add_option("--seed", g.seed, "global RNG seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads (results do not depend on it)")
      ->capture_default_str();
  app.add_option("--format", g.format, "ladder output format")->check(CLI::IsMember({"csv", "json"}));
  app.footer(fmt::format("Default output directory: ${} or the working directory.", out_dir_env));

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "generate a ladder from an exact law or the SGD model");
  add_simulate_options(simulate, sim);
  simulate->add_option("--out", sim.out, "ladder file (.csv or .json)");

  FitArgs fit;
  auto* fitc = app.add_subcommand("fit", "Pareto frontier, horizon fit and scaling-law fit");
  fitc->add_option("--ladder", fit.ladder, "input ladder")->required();
  fitc->add_option("--grid", fit.grid, "frontier grid points")->capture_default_str();
  fitc->add_flag("--drop-extremes", fit.drop_extremes, "exclude smallest and largest size");
  fitc->add_option("--out", fit.out, "fit report JSON");
  fitc->add_option("--stamp", fit.stamp, "also write the ladder with fitted horizons");

  CollapseArgs col;
  auto* collapse = app.add_subcommand("collapse", "normalized curves, deviation and noise floor");
  collapse->add_option("--ladder", col.ladder, "input ladder")->required();
  collapse->add_option("--fit", col.fit, "fit report supplying L0 and horizons");
  collapse->add_option("--L0", col.L0, "irreducible loss override");
  collapse->add_option("--offset", col.offset, "normalization offset (defaults to L0)");
  collapse->add_option("--schedule", col.schedule, "schedule for the delta^2 scaling fit");
  collapse->add_option("--points", col.points, "x grid points")->capture_default_str();
  collapse->add_option("--x-min", col.x_min, "smallest x")->capture_default_str();
  collapse->add_option("--aggregate", col.aggregate, "sigma aggregate over sizes: mean|min")
      ->capture_default_str();
  collapse->add_option("--out-dir", col.out_dir, "output directory");

  PredictArgs pred;
  auto* predict = app.add_subcommand("predict", "schedule-effect prediction and alpha fit");
  predict->add_option("--reference", pred.reference, "reference ladder with lr")->required();
  predict->add_option("--target", pred.targets, "target ladder with trsigma (repeatable)")->required();
  predict->add_option("--alpha", pred.alpha, "fixed alpha instead of fitting");
  predict->add_option("--ema", pred.ema, "EMA half-life fraction, 0 disables")->capture_default_str();
  predict->add_option("--out-dir", pred.out_dir, "output directory");

  GammaArgs gs;
  auto* scan = app.add_subcommand("gamma-scan", "collapse quality versus data exponent");
  scan->add_option("--ladder", gs.ladder, "fixed ladder to renormalize");
  scan->add_option("--law", gs.law, "exact law to regenerate per gamma");
  scan->add_option("--sizes", gs.sizes, "sizes for --law")->capture_default_str();
  scan->add_option("--grid", gs.grid, "start:stop:step or comma list")->capture_default_str();
  scan->add_option("--kappa", gs.kappa, "fixed token multiplier");
  scan->add_option("--L0", gs.L0, "normalization offset");
  scan->add_option("--samples", gs.samples, "samples per regenerated curve")->capture_default_str();
  scan->add_option("--points", gs.points, "x grid points")->capture_default_str();
  scan->add_option("--x-min", gs.x_min, "smallest x")->capture_default_str();
  scan->add_option("--out", gs.out, "gamma_scan.csv path");

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "simulate and analyze into one run directory");
  add_simulate_options(report, rep.sim);
  report->add_option("--target", rep.targets, "extra schedule(s) to simulate and predict");
  report->add_option("--out-dir", rep.out_dir, "run directory");
  report->add_option("--ema", rep.ema, "EMA half-life fraction for predict")->capture_default_str();
  report->add_option("--grid", rep.grid, "gamma grid")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*simulate) return cmd_simulate(sim, g, out);
    if (*fitc) return cmd_fit(fit, g, out, err);
    if (*collapse) return cmd_collapse(col, out);
    if (*predict) return cmd_predict(pred, out, err);
    if (*scan) return cmd_gamma_scan(gs, g, out, err);
    if (*report) return cmd_report(rep, g, out, err);
  } catch (const Error& e) {
    fmt::print(err, "error ({}): {}\n", to_string(e.kind()), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_failure;
  }
  return exit_usage;
}

}  // namespace scl
