#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "scl/collapse.hpp"
#include "scl/fit.hpp"
#include "scl/predict.hpp"

namespace scl {

using Json = nlohmann::ordered_json;

Json to_json(const ParetoFrontier& frontier);
Json to_json(const HorizonFit& fit);
Json to_json(const ScalingLawFit& fit);
Json to_json(const CollapseReport& report);
Json to_json(const GammaScan& scan);
Json to_json(const AlphaFit& fit);
Json to_json(const NoiseProfile& profile);

/// {frontier:[{c,L,p}], horizon:{kappa,gamma,p0}, law:{L0,a,b,residual}}
Json fit_report(const ParetoFrontier& frontier, const HorizonFit& horizon,
                const ScalingLawFit& law, std::span<const CoverageWarning> warnings);

/// Reads the horizon and law blocks back from a fit report.
struct FitReportView {
  HorizonFit horizon;
  ScalingLawFit law;
};
FitReportView read_fit_report(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const Json& j);

/// collapse.csv: x,mean_ell,delta,vp_eo,ep_vo
void write_collapse_csv(const std::filesystem::path& path, const CollapseReport& report);
/// sigma.csv: x,p,sigma
void write_sigma_csv(const std::filesystem::path& path, const NoiseFloor& sigma,
                     std::span<const double> x_grid);
/// gamma_scan.csv: gamma,quality
void write_gamma_scan_csv(const std::filesystem::path& path, const GammaScan& scan);
/// prediction.csv: tau,x,L_ref,L_pred,L_obs,rel_err,target,p
struct PredictionRow {
  std::string target;
  double p;
};
void write_prediction_csv(const std::filesystem::path& path, std::span<const AlignedPair> pairs,
                          std::span<const PredictionRow> labels, double alpha);

}  // namespace scl
