#include "scl/predict.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "scl/error.hpp"
#include "scl/numfmt.hpp"

namespace scl {

namespace {

double linear_at(std::span<const double> xs, std::span<const double> ys, double x) {
  const auto it = std::lower_bound(xs.begin(), xs.end(), x);
  if (it == xs.end()) return ys.back();
  const auto hi = static_cast<std::size_t>(it - xs.begin());
  if (*it == x || hi == 0) return ys[hi];
  const double u = (x - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
  return ys[hi - 1] + u * (ys[hi] - ys[hi - 1]);
}

}  // namespace

NoiseProfile estimate_h(const Ladder& ladder, double L0, std::span<const double> x_grid) {
  for (const auto& c : ladder.curves()) {
    if (!c.has_trsigma()) {
      fail(ErrorKind::data, fmt::format("curve (p={}, seed={}) has no trsigma column",
                                        format_double(c.model_size()), c.seed()));
    }
  }
  NoiseProfile prof;
  prof.x.assign(x_grid.begin(), x_grid.end());
  prof.sizes = ladder.sizes();
  prof.schedule_id = ladder.schedule_id();
  for (double p : prof.sizes) {
    const double t_star = ladder.horizon(p);
    const auto group = ladder.curves_for(p);
    std::vector<double> row(x_grid.size());
    for (std::size_t j = 0; j < x_grid.size(); ++j) {
      const double t = x_grid[j] * t_star;
      double tr = 0.0, red = 0.0;
      for (const LossCurve* c : group) {
        tr += interp_log_log(c->tokens(), c->trsigma(), t);
        red += interp_loss(*c, t) - L0;
      }
      if (!(red > 0.0)) {
        fail(ErrorKind::degenerate, fmt::format("reducible loss of p={} is not positive at x={}",
                                                format_double(p), format_double(x_grid[j])));
      }
      row[j] = tr / red;
    }
    prof.h.push_back(std::move(row));
  }
  prof.mean_h.assign(x_grid.size(), 0.0);
  prof.max_rel_spread = 0.0;
  for (std::size_t j = 0; j < x_grid.size(); ++j) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, mean = 0.0;
    for (const auto& row : prof.h) {
      mean += row[j];
      lo = std::min(lo, row[j]);
      hi = std::max(hi, row[j]);
    }
    mean /= static_cast<double>(prof.h.size());
    prof.mean_h[j] = mean;
    if (mean > 0.0) prof.max_rel_spread = std::max(prof.max_rel_spread, (hi - lo) / mean);
  }
  return prof;
}

std::vector<double> predict_additive(std::span<const double> reference_loss,
                                     std::span<const double> target_trsigma,
                                     std::span<const double> delta_eta, double alpha) {
  if (reference_loss.size() != target_trsigma.size() || reference_loss.size() != delta_eta.size()) {
    fail(ErrorKind::alignment,
         fmt::format("additive prediction needs aligned series, got lengths {}, {}, {}",
                     reference_loss.size(), target_trsigma.size(), delta_eta.size()));
  }
  std::vector<double> out(reference_loss.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = reference_loss[i] + alpha * delta_eta[i] * target_trsigma[i];
  }
  return out;
}

std::vector<double> predict_multiplicative(std::span<const double> reference_x,
                                           std::span<const double> reference_reducible,
                                           std::span<const double> x, std::span<const double> h,
                                           double alpha, const Schedule& target,
                                           const Schedule& reference) {
  if (x.size() != h.size()) fail(ErrorKind::alignment, "h must be sampled on the target x grid");
  std::vector<double> out(x.size());
  std::vector<double> invalid;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double y = match_flow_time(target, reference, x[j]);
    const double de = target.eta(x[j]) - reference.eta(y);
    const double factor = 1.0 - alpha * h[j] * de;
    if (!(factor > 0.0)) {
      invalid.push_back(x[j]);
      continue;
    }
    out[j] = interp_log_log(reference_x, reference_reducible, y) / factor;
  }
  if (!invalid.empty()) {
    std::string list;
    for (double v : invalid) list += (list.empty() ? "" : ", ") + format_double(v);
    fail(ErrorKind::model_validity, "1 - alpha h delta_eta <= 0 at x = " + list);
  }
  return out;
}

AlignedPair align_pair(const LossCurve& reference, const Schedule& reference_schedule,
                       const LossCurve& target, const Schedule& target_schedule, double t_star,
                       std::string label) {
  if (!target.has_trsigma()) fail(ErrorKind::data, "target curve has no trsigma column");
  const auto ref_flow = flow_time(reference, reference_schedule, t_star);
  const auto tgt_flow = flow_time(target, target_schedule, t_star);
  AlignedPair pair;
  pair.label = std::move(label);
  for (std::size_t k = 0; k < target.size(); ++k) {
    const double tau = tgt_flow.tau[k];
    if (tau < ref_flow.tau.front() || tau > ref_flow.tau.back()) continue;
    const double x = std::min(1.0, target.tokens()[k] / t_star);
    const double ref_x = std::min(1.0, linear_at(ref_flow.tau, reference.tokens(), tau) / t_star);
    pair.tau.push_back(tau);
    pair.x.push_back(x);
    pair.reference_loss.push_back(interp_log_log(ref_flow.tau, reference.loss(), tau));
    pair.target_loss.push_back(target.loss()[k]);
    pair.target_trsigma.push_back(target.trsigma()[k]);
    pair.delta_eta.push_back(target_schedule.eta(x) - reference_schedule.eta(ref_x));
  }
  if (pair.tau.empty()) {
    fail(ErrorKind::alignment, "target and reference share no flow-time range");
  }
  return pair;
}

AlphaFit fit_alpha(std::span<const AlignedPair> pairs) {
  if (pairs.empty()) fail(ErrorKind::insufficient_data, "alpha fit needs at least one pair");
  struct Moments {
    double py = 0.0, pp = 0.0;
  };
  std::vector<Moments> moments(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pr = pairs[i];
    const std::size_t n = pr.tau.size();
    if (pr.reference_loss.size() != n || pr.target_loss.size() != n ||
        pr.target_trsigma.size() != n || pr.delta_eta.size() != n) {
      fail(ErrorKind::alignment, "pair '" + pr.label + "' has misaligned series");
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double predictor = pr.delta_eta[k] * pr.target_trsigma[k];
      moments[i].py += predictor * (pr.target_loss[k] - pr.reference_loss[k]);
      moments[i].pp += predictor * predictor;
    }
  }
  // Reduce in label order so the pooled value ignores pair order.
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pairs[a].label < pairs[b].label; });
  Moments total;
  for (std::size_t i : order) {
    total.py += moments[i].py;
    total.pp += moments[i].pp;
  }
  if (!(total.pp > 0.0)) fail(ErrorKind::degenerate, "delta_eta * Tr Sigma' vanishes on every pair");

  AlphaFit fit{};
  fit.alpha = total.py / total.pp;
  fit.spread = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pr = pairs[i];
    PairError e{pr.label, std::numeric_limits<double>::quiet_NaN(), 0.0, !(moments[i].pp > 0.0)};
    if (!e.degenerate) {
      e.alpha = moments[i].py / moments[i].pp;
      fit.spread = std::max(fit.spread, std::abs(e.alpha - fit.alpha) / std::abs(fit.alpha));
    }
    const auto pred = predict_additive(pr.reference_loss, pr.target_trsigma, pr.delta_eta, fit.alpha);
    for (std::size_t k = 0; k < pred.size(); ++k) {
      e.max_rel_error = std::max(e.max_rel_error, std::abs(pred[k] - pr.target_loss[k]) / pr.target_loss[k]);
    }
    fit.pairs.push_back(std::move(e));
  }
  return fit;
}

}  // namespace scl
