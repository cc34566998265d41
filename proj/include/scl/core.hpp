#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scl/schedules.hpp"

namespace scl {

/// One model's sampled trajectory L(t, p, seed).
///
/// Columns are stored separately; `lr` and `trsigma` are either empty or have
/// one entry per sample. Construction validates every invariant, so a
/// LossCurve that exists is well formed.
class LossCurve {
 public:
  LossCurve(double model_size, std::int64_t seed, std::vector<std::int64_t> steps,
            std::vector<double> tokens, std::vector<double> loss,
            std::vector<double> lr = {}, std::vector<double> trsigma = {});

  double model_size() const noexcept { return model_size_; }
  std::int64_t seed() const noexcept { return seed_; }
  std::size_t size() const noexcept { return tokens_.size(); }

  std::span<const std::int64_t> steps() const noexcept { return steps_; }
  std::span<const double> tokens() const noexcept { return tokens_; }
  std::span<const double> loss() const noexcept { return loss_; }
  std::span<const double> lr() const noexcept { return lr_; }
  std::span<const double> trsigma() const noexcept { return trsigma_; }

  bool has_lr() const noexcept { return !lr_.empty(); }
  bool has_trsigma() const noexcept { return !trsigma_.empty(); }

  double first_tokens() const noexcept { return tokens_.front(); }
  double last_tokens() const noexcept { return tokens_.back(); }

  /// Same coordinates and side columns with a replaced loss column.
  LossCurve with_loss(std::vector<double> loss) const;
  LossCurve with_trsigma(std::vector<double> trsigma) const;

 private:
  double model_size_;
  std::int64_t seed_;
  std::vector<std::int64_t> steps_;
  std::vector<double> tokens_;
  std::vector<double> loss_;
  std::vector<double> lr_;
  std::vector<double> trsigma_;
};

/// A set of curves over model sizes and seeds trained under one schedule.
///
/// Horizons t*(p) are optional until fitted or supplied. A single-size ladder
/// is representable; analyses that need several sizes check for themselves.
class Ladder {
 public:
  Ladder(std::vector<LossCurve> curves, std::string schedule_id = "constant",
         double flops_per_token = 6.0, std::map<double, double> horizons = {});

  std::span<const LossCurve> curves() const noexcept { return curves_; }
  const std::string& schedule_id() const noexcept { return schedule_id_; }
  double flops_per_token() const noexcept { return flops_per_token_; }

  /// Sorted distinct model sizes.
  std::vector<double> sizes() const;
  std::vector<const LossCurve*> curves_for(double model_size) const;
  std::size_t min_seeds_per_size() const;

  const std::map<double, double>& horizons() const noexcept { return horizons_; }
  bool has_horizons() const;
  /// Throws a state error when the size has no horizon.
  double horizon(double model_size) const;
  Ladder with_horizons(std::map<double, double> horizons) const;

  double compute(double tokens, double model_size) const {
    return flops_per_token_ * tokens * model_size;
  }

 private:
  std::vector<LossCurve> curves_;
  std::string schedule_id_;
  double flops_per_token_;
  std::map<double, double> horizons_;
};

/// Per-size expected curves: losses (and Tr Sigma when present) averaged over
/// seeds. Seeds with differing token grids are resampled onto the first
/// seed's grid restricted to the shared range.
Ladder seed_mean(const Ladder& ladder);

struct FlowTimeSeries {
  std::vector<double> tau;
  std::vector<double> tau_hat;
};

// ---- ingestion / serialization ----------------------------------------

enum class LadderFormat { csv, json };

LadderFormat format_from_path(const std::filesystem::path& path);

Ladder read_ladder_csv(std::istream& in, const std::string& source = "<stream>");
void write_ladder_csv(std::ostream& out, const Ladder& ladder);
Ladder read_ladder_json(std::istream& in, const std::string& source = "<stream>");
void write_ladder_json(std::ostream& out, const Ladder& ladder);

/// CSV files carry only the sample table; schedule id, FLOP factor and
/// horizons travel in an optional `<path>.meta.json` sidecar.
Ladder load_ladder(const std::filesystem::path& path,
                   std::optional<LadderFormat> format = std::nullopt);
void save_ladder(const Ladder& ladder, const std::filesystem::path& path,
                 std::optional<LadderFormat> format = std::nullopt);

// ---- curve operations --------------------------------------------------

/// Piecewise-linear interpolation in (log t, log y); linear in y when a
/// bracketing value is zero and linear in t when a bracketing t is zero.
/// Throws a range error outside [tokens.front(), tokens.back()].
double interp_log_log(std::span<const double> tokens, std::span<const double> values,
                      double t);

double interp_loss(const LossCurve& curve, double t_query);

/// Exponential moving average with a fixed per-sample decay, seeded with the
/// first raw value.
std::vector<double> ema_series(std::span<const double> values, double decay);

/// Smooths the loss column with half-life `half_life_fraction` of the steps
/// spanned by the curve. Samples spaced k steps apart decay by decay^k.
LossCurve ema_smooth(const LossCurve& curve, double half_life_fraction);

/// Same smoothing applied to the Tr Sigma column as well as the loss.
LossCurve ema_smooth_all(const LossCurve& curve, double half_life_fraction);

/// Gradient flow time tau(t) = integral of eta(u / t*) du from 0 to t.
FlowTimeSeries flow_time(const LossCurve& curve, const Schedule& schedule,
                         std::optional<double> t_star);

}  // namespace scl
