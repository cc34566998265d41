#include "scl/reports.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "scl/error.hpp"
#include "scl/numfmt.hpp"

namespace scl {

namespace {

/// JSON has no NaN or infinity; both become null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json numbers(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char ch : text) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  return quoted + '"';
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

Json to_json(const ParetoFrontier& frontier) {
  Json a = Json::array();
  for (const auto& pt : frontier.points) a.push_back({{"c", pt.c}, {"L", pt.loss}, {"p", pt.p}});
  return a;
}

Json to_json(const HorizonFit& fit) {
  return {{"kappa", fit.kappa},
          {"gamma", fit.gamma},
          {"p0", number(fit.p0())},
          {"kappa_tokens", fit.token_kappa()},
          {"flops_per_token_factor", fit.flops_per_token},
          {"sizes", numbers(fit.sizes)},
          {"c_star", numbers(fit.c_star)},
          {"residuals", numbers(fit.residuals)}};
}

Json to_json(const ScalingLawFit& fit) {
  return {{"L0", fit.L0}, {"a", fit.a}, {"b", fit.b}, {"residual", fit.residual}};
}

Json to_json(const CollapseReport& r) {
  Json j;
  j["x"] = numbers(r.x);
  j["sizes"] = numbers(r.sizes);
  j["mean_ell"] = numbers(r.mean_ell);
  j["delta"] = numbers(r.delta);
  j["max_delta"] = number(*std::max_element(r.delta.begin(), r.delta.end()));
  j["decomposition"] = {{"vp_eo", numbers(r.decomposition.between)},
                        {"ep_vo", numbers(r.decomposition.within)},
                        {"total", numbers(r.decomposition.total)}};
  if (r.sigma) {
    Json rows = Json::array();
    for (const auto& row : r.sigma->sigma) rows.push_back(numbers(row));
    j["sigma"] = rows;
    j["sigma_mean"] = numbers(r.sigma->mean());
    Json per = Json::array();
    for (const auto& row : r.per_model_delta) per.push_back(numbers(row));
    j["per_model_delta"] = per;
  }
  j["supercollapse_extent"] = r.supercollapse ? number(*r.supercollapse) : Json(nullptr);
  if (r.scaling) {
    j["delta_scaling"] = {{"C", r.scaling->C},
                          {"residual", r.scaling->residual},
                          {"r_squared", r.scaling->r_squared},
                          {"points", r.scaling->points}};
  } else {
    j["delta_scaling"] = nullptr;
  }
  j["quality"] = number(r.quality);
  return j;
}

Json to_json(const GammaScan& scan) {
  return {{"gammas", numbers(scan.gammas)},
          {"quality", numbers(scan.quality)},
          {"best_gamma", number(scan.best_gamma)},
          {"best_quality", number(scan.best_quality)},
          {"identifiable", scan.identifiable}};
}

Json to_json(const AlphaFit& fit) {
  Json pairs = Json::array();
  for (const auto& p : fit.pairs) {
    pairs.push_back({{"label", p.label},
                     {"alpha", number(p.alpha)},
                     {"max_rel_error", number(p.max_rel_error)},
                     {"degenerate", p.degenerate}});
  }
  return {{"alpha", fit.alpha},
          {"spread", fit.spread},
          {"pairs", pairs},
          {"reference_alpha", {{"transformer", fit.reference_alpha_transformer},
                               {"mlp", fit.reference_alpha_mlp}}}};
}

Json to_json(const NoiseProfile& prof) {
  Json rows = Json::array();
  for (const auto& row : prof.h) rows.push_back(numbers(row));
  return {{"schedule_id", prof.schedule_id},
          {"x", numbers(prof.x)},
          {"sizes", numbers(prof.sizes)},
          {"h", rows},
          {"mean_h", numbers(prof.mean_h)},
          {"max_rel_spread", number(prof.max_rel_spread)}};
}

Json fit_report(const ParetoFrontier& frontier, const HorizonFit& horizon,
                const ScalingLawFit& law, std::span<const CoverageWarning> warnings) {
  Json w = Json::array();
  for (const auto& c : warnings) {
    w.push_back({{"p", c.p}, {"seed", c.seed}, {"deficit", c.deficit}});
  }
  return {{"frontier", to_json(frontier)},
          {"horizon", to_json(horizon)},
          {"law", to_json(law)},
          {"coverage_warnings", w}};
}

FitReportView read_fit_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open fit report '" + path.string() + "'");
  try {
    const Json j = Json::parse(in);
    const auto& h = j.at("horizon");
    const auto& l = j.at("law");
    FitReportView v{};
    v.horizon.kappa = h.at("kappa").get<double>();
    v.horizon.gamma = h.at("gamma").get<double>();
    v.horizon.flops_per_token = h.value("flops_per_token_factor", 6.0);
    v.law = {l.at("L0").get<double>(), l.at("a").get<double>(), l.at("b").get<double>(),
             l.value("residual", 0.0)};
    return v;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_collapse_csv(const std::filesystem::path& path, const CollapseReport& r) {
  auto out = open_out(path);
  out << "x,mean_ell,delta,vp_eo,ep_vo\n";
  const bool decomposed = !r.decomposition.between.empty();
  for (std::size_t j = 0; j < r.x.size(); ++j) {
    out << format_double(r.x[j]) << ',' << format_double(r.mean_ell[j]) << ','
        << format_double(r.delta[j]) << ','
        << (decomposed ? format_double(r.decomposition.between[j]) : "") << ','
        << (decomposed ? format_double(r.decomposition.within[j]) : "") << '\n';
  }
}

void write_sigma_csv(const std::filesystem::path& path, const NoiseFloor& sigma,
                     std::span<const double> x_grid) {
  auto out = open_out(path);
  out << "x,p,sigma\n";
  for (std::size_t j = 0; j < x_grid.size(); ++j) {
    for (std::size_t i = 0; i < sigma.sizes.size(); ++i) {
      out << format_double(x_grid[j]) << ',' << format_double(sigma.sizes[i]) << ','
          << format_double(sigma.sigma[i][j]) << '\n';
    }
  }
}

void write_gamma_scan_csv(const std::filesystem::path& path, const GammaScan& scan) {
  auto out = open_out(path);
  out << "gamma,quality\n";
  for (std::size_t i = 0; i < scan.gammas.size(); ++i) {
    out << format_double(scan.gammas[i]) << ','
        << (std::isfinite(scan.quality[i]) ? format_double(scan.quality[i]) : "nan") << '\n';
  }
}

void write_prediction_csv(const std::filesystem::path& path, std::span<const AlignedPair> pairs,
                          std::span<const PredictionRow> labels, double alpha) {
  auto out = open_out(path);
  out << "tau,x,L_ref,L_pred,L_obs,rel_err,target,p\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pr = pairs[i];
    const auto pred = predict_additive(pr.reference_loss, pr.target_trsigma, pr.delta_eta, alpha);
    for (std::size_t k = 0; k < pred.size(); ++k) {
      const double rel = (pred[k] - pr.target_loss[k]) / pr.target_loss[k];
      out << format_double(pr.tau[k]) << ',' << format_double(pr.x[k]) << ','
          << format_double(pr.reference_loss[k]) << ',' << format_double(pred[k]) << ','
          << format_double(pr.target_loss[k]) << ',' << format_double(rel) << ','
          << csv_field(labels[i].target) << ',' << format_double(labels[i].p) << '\n';
    }
  }
}

}  // namespace scl
