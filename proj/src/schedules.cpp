#include "scl/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>

#include "scl/error.hpp"
#include "scl/numfmt.hpp"
#include "spec_parse.hpp"

namespace scl {

namespace {

constexpr double pi = std::numbers::pi;

template <class... F>
struct Overload : F... {
  using F::operator()...;
};
template <class... F>
Overload(F...) -> Overload<F...>;

void check_x(double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    fail(ErrorKind::argument, fmt::format("normalized compute x={} outside [0, 1]", format_double(x)));
  }
}

std::size_t table_segment(const std::vector<double>& xs, double x) {
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const auto hi = static_cast<std::size_t>(it - xs.begin());
  return std::clamp<std::size_t>(hi, 1, xs.size() - 1) - 1;
}

}  // namespace

Schedule Schedule::oscillatory(double k, double amp) {
  if (!(k > 0.0) || !std::isfinite(k)) fail(ErrorKind::argument, "osc: k must be positive");
  if (!(amp >= 0.0 && amp <= 0.5)) {
    fail(ErrorKind::argument, "osc: amp must lie in [0, 0.5] to keep eta in [0, 1]");
  }
  return Schedule(Oscillatory{k, amp});
}

Schedule Schedule::warmup(double fraction, Schedule inner) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    fail(ErrorKind::argument, "warmup fraction must lie in (0, 1)");
  }
  return Schedule(Warmup{fraction, std::make_shared<const Schedule>(std::move(inner))});
}

Schedule Schedule::table(std::vector<double> x, std::vector<double> eta) {
  if (x.size() < 2 || x.size() != eta.size()) {
    fail(ErrorKind::argument, "table schedule needs >= 2 (x, eta) pairs");
  }
  if (x.front() != 0.0 || x.back() != 1.0) {
    fail(ErrorKind::argument, "table schedule must cover x in [0, 1] from 0 to 1");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i > 0 && !(x[i] > x[i - 1])) fail(ErrorKind::argument, "table x must be strictly increasing");
    if (!(eta[i] >= 0.0 && eta[i] <= 1.0)) fail(ErrorKind::argument, "table eta must lie in [0, 1]");
  }
  return Schedule(Table{std::move(x), std::move(eta)});
}

double Schedule::eta(double x) const {
  check_x(x);
  return std::visit(
      Overload{
          [](const Constant&) { return 1.0; },
          [&](const LinearDecay&) { return 1.0 - x; },
          [&](const Cosine&) { return 0.5 * (1.0 + std::cos(pi * x)); },
          [&](const Oscillatory& o) { return 1.0 - o.amp * (1.0 - std::cos(o.k * pi * x)); },
          [&](const Warmup& w) {
            if (x < w.fraction) return x / w.fraction;
            return w.inner->eta(std::min(1.0, (x - w.fraction) / (1.0 - w.fraction)));
          },
          [&](const Table& t) {
            const auto i = table_segment(t.x, x);
            const double u = (x - t.x[i]) / (t.x[i + 1] - t.x[i]);
            return t.eta[i] + u * (t.eta[i + 1] - t.eta[i]);
          },
      },
      kind_);
}

double Schedule::integral(double x) const {
  check_x(x);
  return std::visit(
      Overload{
          [&](const Constant&) { return x; },
          [&](const LinearDecay&) { return x - 0.5 * x * x; },
          [&](const Cosine&) { return 0.5 * (x + std::sin(pi * x) / pi); },
          [&](const Oscillatory& o) {
            return x - o.amp * (x - std::sin(o.k * pi * x) / (o.k * pi));
          },
          [&](const Warmup& w) {
            if (x < w.fraction) return 0.5 * x * x / w.fraction;
            const double u = std::min(1.0, (x - w.fraction) / (1.0 - w.fraction));
            return 0.5 * w.fraction + (1.0 - w.fraction) * w.inner->integral(u);
          },
          [&](const Table& t) {
            double acc = 0.0;
            const auto last = table_segment(t.x, x);
            for (std::size_t i = 0; i < last; ++i) {
              acc += 0.5 * (t.eta[i] + t.eta[i + 1]) * (t.x[i + 1] - t.x[i]);
            }
            const double e = eta(x);
            return acc + 0.5 * (t.eta[last] + e) * (x - t.x[last]);
          },
      },
      kind_);
}

std::string Schedule::id() const {
  return std::visit(
      Overload{
          [](const Constant&) -> std::string { return "constant"; },
          [](const LinearDecay&) -> std::string { return "linear"; },
          [](const Cosine&) -> std::string { return "cosine"; },
          [](const Oscillatory& o) -> std::string {
            return fmt::format("osc:k={},amp={}", format_double(o.k), format_double(o.amp));
          },
          [](const Warmup& w) -> std::string {
            return fmt::format("warmup:{}+{}", format_double(w.fraction), w.inner->id());
          },
          [](const Table& t) -> std::string {
            std::string s = "table:";
            for (std::size_t i = 0; i < t.x.size(); ++i) {
              if (i) s += ',';
              s += format_double(t.x[i]) + ":" + format_double(t.eta[i]);
            }
            return s;
          },
      },
      kind_);
}

namespace {

Schedule parse_table_pairs(std::string_view body) {
  std::vector<double> xs, etas;
  for (auto token : detail::split(body, ',')) {
    const auto colon = token.find(':');
    if (colon == std::string_view::npos) {
      fail(ErrorKind::parse, "table schedule: expected x:eta, got '" + std::string(token) + "'");
    }
    xs.push_back(parse_double(token.substr(0, colon), "table schedule"));
    etas.push_back(parse_double(token.substr(colon + 1), "table schedule"));
  }
  return Schedule::table(std::move(xs), std::move(etas));
}

Schedule parse_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open schedule table '" + path + "'");
  std::vector<double> xs, etas;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = detail::split(t, ',');
    const auto where = fmt::format("{}:{}", path, line_no);
    if (fields.size() != 2) fail(ErrorKind::parse, where + ": expected x,eta");
    if (xs.empty() && etas.empty() && fields[0] == "x") continue;
    xs.push_back(parse_double(fields[0], where));
    etas.push_back(parse_double(fields[1], where));
  }
  return Schedule::table(std::move(xs), std::move(etas));
}

}  // namespace

Schedule parse_schedule(std::string_view spec) {
  spec = trim(spec);
  const auto colon = spec.find(':');
  const auto head = trim(spec.substr(0, colon));
  const auto body = colon == std::string_view::npos ? std::string_view{} : trim(spec.substr(colon + 1));
  auto no_body = [&](Schedule s) {
    if (colon != std::string_view::npos) {
      fail(ErrorKind::parse, "schedule '" + std::string(head) + "' takes no parameters");
    }
    return s;
  };
  if (head == "constant") return no_body(Schedule::constant());
  if (head == "linear" || head == "linear_decay") return no_body(Schedule::linear_decay());
  if (head == "cosine") return no_body(Schedule::cosine());
  if (head == "osc" || head == "oscillatory") {
    double k = 3.0, amp = 0.5;
    for (const auto& [key, value] : detail::key_values(body, "osc schedule")) {
      if (key == "k") {
        k = parse_double(value, "osc schedule");
      } else if (key == "amp") {
        amp = parse_double(value, "osc schedule");
      } else {
        fail(ErrorKind::parse, "osc schedule: unknown key '" + std::string(key) + "'");
      }
    }
    return Schedule::oscillatory(k, amp);
  }
  if (head == "warmup") {
    const auto plus = body.find('+');
    if (plus == std::string_view::npos) {
      fail(ErrorKind::parse, "warmup schedule: expected warmup:<fraction>+<schedule>");
    }
    return Schedule::warmup(parse_double(body.substr(0, plus), "warmup schedule"),
                            parse_schedule(body.substr(plus + 1)));
  }
  if (head == "table") {
    if (!body.empty() && body.front() == '@') return parse_table_file(std::string(body.substr(1)));
    return parse_table_pairs(body);
  }
  fail(ErrorKind::parse, "unknown schedule '" + std::string(head) + "'");
}

double eta_at(const Schedule& schedule, double x) { return schedule.eta(x); }

double delta_eta(const Schedule& target, const Schedule& reference, double x) {
  return target.eta(x) - reference.eta(x);
}

double match_flow_time(const Schedule& target, const Schedule& reference, double x) {
  const double total = reference.integral(1.0);
  if (!(total > 0.0)) {
    fail(ErrorKind::degenerate, "reference schedule '" + reference.id() + "' has zero integral");
  }
  const double goal = target.integral(x);
  if (goal <= 0.0) return 0.0;
  if (goal >= total) return 1.0;
  // Fixed-depth bisection: the comparison sequence is monotone in goal, so y
  // is non-decreasing in x exactly, not just to tolerance.
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 64; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (reference.integral(mid) < goal) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double normalized_flow_time(const Schedule& schedule, double x) {
  const double total = schedule.integral(1.0);
  if (!(total > 0.0)) {
    fail(ErrorKind::degenerate, "schedule '" + schedule.id() + "' has zero integral");
  }
  return schedule.integral(x) / total;
}

}  // namespace scl
