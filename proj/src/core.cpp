#include "scl/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "scl/error.hpp"
#include "scl/numfmt.hpp"

namespace scl {

namespace {

std::string curve_label(double p, std::int64_t seed) {
  return fmt::format("(p={}, seed={})", format_double(p), seed);
}

}  // namespace

LossCurve::LossCurve(double model_size, std::int64_t seed, std::vector<std::int64_t> steps,
                     std::vector<double> tokens, std::vector<double> loss, std::vector<double> lr,
                     std::vector<double> trsigma)
    : model_size_(model_size),
      seed_(seed),
      steps_(std::move(steps)),
      tokens_(std::move(tokens)),
      loss_(std::move(loss)),
      lr_(std::move(lr)),
      trsigma_(std::move(trsigma)) {
  const auto where = curve_label(model_size_, seed_);
  auto invalid = [&](const std::string& what) { fail(ErrorKind::validation, where + ": " + what); };
  if (!(model_size_ > 0.0) || !std::isfinite(model_size_)) invalid("model size must be positive");
  const std::size_t n = tokens_.size();
  if (n < 2) invalid("a curve needs at least 2 samples");
  if (steps_.size() != n || loss_.size() != n) invalid("column lengths differ");
  if (!lr_.empty() && lr_.size() != n) invalid("lr column length differs");
  if (!trsigma_.empty() && trsigma_.size() != n) invalid("trsigma column length differs");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(tokens_[i]) || tokens_[i] < 0.0) invalid("tokens must be finite and >= 0");
    if (i > 0 && !(tokens_[i] > tokens_[i - 1])) {
      invalid(fmt::format("tokens not strictly increasing at sample {}", i));
    }
    if (!std::isfinite(loss_[i]) || loss_[i] < 0.0) {
      invalid(fmt::format("loss must be finite and >= 0 at sample {}", i));
    }
    if (!lr_.empty() && !(lr_[i] >= 0.0 && lr_[i] <= 1.0)) {
      invalid(fmt::format("lr outside [0, 1] at sample {}", i));
    }
    if (!trsigma_.empty() && (!std::isfinite(trsigma_[i]) || trsigma_[i] < 0.0)) {
      invalid(fmt::format("trsigma must be finite and >= 0 at sample {}", i));
    }
  }
}

LossCurve LossCurve::with_loss(std::vector<double> loss) const {
  return LossCurve(model_size_, seed_, steps_, tokens_, std::move(loss), lr_, trsigma_);
}

LossCurve LossCurve::with_trsigma(std::vector<double> trsigma) const {
  return LossCurve(model_size_, seed_, steps_, tokens_, loss_, lr_, std::move(trsigma));
}

Ladder::Ladder(std::vector<LossCurve> curves, std::string schedule_id, double flops_per_token,
               std::map<double, double> horizons)
    : curves_(std::move(curves)),
      schedule_id_(std::move(schedule_id)),
      flops_per_token_(flops_per_token),
      horizons_(std::move(horizons)) {
  if (curves_.empty()) fail(ErrorKind::validation, "ladder has no curves");
  if (!(flops_per_token_ > 0.0) || !std::isfinite(flops_per_token_)) {
    fail(ErrorKind::validation, "flops_per_token_factor must be positive");
  }
  std::set<std::pair<double, std::int64_t>> seen;
  for (const auto& c : curves_) {
    if (!seen.emplace(c.model_size(), c.seed()).second) {
      fail(ErrorKind::validation,
           "duplicate curve " + curve_label(c.model_size(), c.seed()));
    }
  }
  for (const auto& [p, t] : horizons_) {
    if (!(t > 0.0) || !std::isfinite(t)) {
      fail(ErrorKind::validation, fmt::format("horizon for p={} must be positive", format_double(p)));
    }
  }
}

std::vector<double> Ladder::sizes() const {
  std::set<double> s;
  for (const auto& c : curves_) s.insert(c.model_size());
  return {s.begin(), s.end()};
}

std::vector<const LossCurve*> Ladder::curves_for(double model_size) const {
  std::vector<const LossCurve*> out;
  for (const auto& c : curves_) {
    if (c.model_size() == model_size) out.push_back(&c);
  }
  std::sort(out.begin(), out.end(),
            [](const LossCurve* a, const LossCurve* b) { return a->seed() < b->seed(); });
  return out;
}

std::size_t Ladder::min_seeds_per_size() const {
  std::map<double, std::size_t> count;
  for (const auto& c : curves_) ++count[c.model_size()];
  std::size_t lo = curves_.size();
  for (const auto& [p, n] : count) lo = std::min(lo, n);
  return lo;
}

bool Ladder::has_horizons() const {
  for (double p : sizes()) {
    if (!horizons_.contains(p)) return false;
  }
  return true;
}

double Ladder::horizon(double model_size) const {
  const auto it = horizons_.find(model_size);
  if (it == horizons_.end()) {
    fail(ErrorKind::state,
         fmt::format("no horizon t*(p) for p={}; fit horizons (`fit`) or supply them first",
                     format_double(model_size)));
  }
  return it->second;
}

Ladder Ladder::with_horizons(std::map<double, double> horizons) const {
  return Ladder(curves_, schedule_id_, flops_per_token_, std::move(horizons));
}

Ladder seed_mean(const Ladder& ladder) {
  std::vector<LossCurve> means;
  for (double p : ladder.sizes()) {
    const auto group = ladder.curves_for(p);
    const LossCurve& base = *group.front();
    double lo = base.first_tokens();
    double hi = base.last_tokens();
    bool same_grid = true;
    bool all_trsigma = true;
    for (const LossCurve* c : group) {
      lo = std::max(lo, c->first_tokens());
      hi = std::min(hi, c->last_tokens());
      same_grid = same_grid && std::ranges::equal(c->tokens(), base.tokens());
      all_trsigma = all_trsigma && c->has_trsigma();
    }
    std::vector<std::int64_t> steps;
    std::vector<double> tokens, lr;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < base.size(); ++i) {
      const double t = base.tokens()[i];
      if (t < lo || t > hi) continue;
      keep.push_back(i);
      steps.push_back(base.steps()[i]);
      tokens.push_back(t);
      if (base.has_lr()) lr.push_back(base.lr()[i]);
    }
    if (keep.size() < 2) {
      fail(ErrorKind::range,
           fmt::format("seeds of p={} share fewer than 2 samples", format_double(p)));
    }
    std::vector<double> loss(keep.size(), 0.0), trsigma;
    if (all_trsigma) trsigma.assign(keep.size(), 0.0);
    for (const LossCurve* c : group) {
      for (std::size_t k = 0; k < keep.size(); ++k) {
        if (same_grid) {
          loss[k] += c->loss()[keep[k]];
          if (all_trsigma) trsigma[k] += c->trsigma()[keep[k]];
        } else {
          loss[k] += interp_log_log(c->tokens(), c->loss(), tokens[k]);
          if (all_trsigma) trsigma[k] += interp_log_log(c->tokens(), c->trsigma(), tokens[k]);
        }
      }
    }
    const double n = static_cast<double>(group.size());
    for (auto& v : loss) v /= n;
    for (auto& v : trsigma) v /= n;
    means.emplace_back(p, 0, std::move(steps), std::move(tokens), std::move(loss), std::move(lr),
                       std::move(trsigma));
  }
  return Ladder(std::move(means), ladder.schedule_id(), ladder.flops_per_token(),
                ladder.horizons());
}

double interp_log_log(std::span<const double> tokens, std::span<const double> values, double t) {
  if (tokens.size() != values.size() || tokens.empty()) {
    fail(ErrorKind::argument, "interpolation columns differ in length");
  }
  if (!(t >= tokens.front() && t <= tokens.back())) {
    fail(ErrorKind::range, fmt::format("query t={} outside sampled range [{}, {}]",
                                       format_double(t), format_double(tokens.front()),
                                       format_double(tokens.back())));
  }
  const auto it = std::lower_bound(tokens.begin(), tokens.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - tokens.begin());
  if (*it == t) return values[hi];
  const std::size_t lo = hi - 1;
  const double t0 = tokens[lo], t1 = tokens[hi];
  const double y0 = values[lo], y1 = values[hi];
  const bool log_t = t0 > 0.0;
  const double u = log_t ? std::log(t / t0) / std::log(t1 / t0) : (t - t0) / (t1 - t0);
  if (y0 > 0.0 && y1 > 0.0) return y0 * std::exp(u * std::log(y1 / y0));
  return y0 + u * (y1 - y0);
}

double interp_loss(const LossCurve& curve, double t_query) {
  return interp_log_log(curve.tokens(), curve.loss(), t_query);
}

std::vector<double> ema_series(std::span<const double> values, double decay) {
  std::vector<double> out(values.begin(), values.end());
  for (std::size_t i = 1; i < out.size(); ++i) {
    out[i] = decay * out[i - 1] + (1.0 - decay) * values[i];
  }
  return out;
}

namespace {

std::vector<double> ema_by_steps(std::span<const double> values,
                                 std::span<const std::int64_t> steps, double half_life_fraction) {
  if (!(half_life_fraction > 0.0 && half_life_fraction < 1.0)) {
    fail(ErrorKind::argument, "EMA half-life fraction must lie in (0, 1)");
  }
  const double span = std::max<double>(1.0, static_cast<double>(steps.back() - steps.front()));
  const double log_decay = -std::log(2.0) / (half_life_fraction * span);
  std::vector<double> out(values.begin(), values.end());
  for (std::size_t i = 1; i < out.size(); ++i) {
    const double gap = std::max<double>(1.0, static_cast<double>(steps[i] - steps[i - 1]));
    const double d = std::exp(log_decay * gap);
    out[i] = d * out[i - 1] + (1.0 - d) * values[i];
  }
  return out;
}

}  // namespace

LossCurve ema_smooth(const LossCurve& curve, double half_life_fraction) {
  return curve.with_loss(ema_by_steps(curve.loss(), curve.steps(), half_life_fraction));
}

LossCurve ema_smooth_all(const LossCurve& curve, double half_life_fraction) {
  auto smoothed = ema_smooth(curve, half_life_fraction);
  if (!curve.has_trsigma()) return smoothed;
  return smoothed.with_trsigma(ema_by_steps(curve.trsigma(), curve.steps(), half_life_fraction));
}

FlowTimeSeries flow_time(const LossCurve& curve, const Schedule& schedule,
                         std::optional<double> t_star) {
  if (!t_star) {
    fail(ErrorKind::state,
         fmt::format("flow time for p={} needs a horizon t*(p); fit or supply horizons first",
                     format_double(curve.model_size())));
  }
  const double ts = *t_star;
  if (!(ts > 0.0)) fail(ErrorKind::argument, "horizon must be positive");
  // Past the horizon the schedule holds its final value.
  auto eta = [&](double t) { return schedule.eta(std::min(1.0, t / ts)); };
  FlowTimeSeries out;
  out.tau.resize(curve.size());
  double prev_t = 0.0, prev_eta = eta(0.0), acc = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double t = curve.tokens()[i];
    const double e = eta(t);
    acc += 0.5 * (prev_eta + e) * (t - prev_t);
    out.tau[i] = acc;
    prev_t = t;
    prev_eta = e;
  }
  const double total = out.tau.back();
  if (!(total > 0.0)) fail(ErrorKind::degenerate, "schedule accumulates no flow time");
  out.tau_hat.resize(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) out.tau_hat[i] = out.tau[i] / total;
  out.tau_hat.back() = 1.0;
  return out;
}

}  // namespace scl
