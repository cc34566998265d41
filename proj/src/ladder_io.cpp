#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>

#include "scl/core.hpp"
#include "scl/error.hpp"
#include "scl/numfmt.hpp"
#include "spec_parse.hpp"

namespace scl {

using nlohmann::ordered_json;

namespace {

struct Row {
  std::int64_t step;
  double tokens;
  double loss;
  double lr;
  double trsigma;
};

using CurveKey = std::pair<double, std::int64_t>;

std::vector<LossCurve> build_curves(std::map<CurveKey, std::vector<Row>>& groups, bool has_lr,
                                    bool has_trsigma) {
  std::vector<LossCurve> curves;
  for (auto& [key, rows] : groups) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.tokens < b.tokens; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].tokens == rows[i - 1].tokens) {
        fail(ErrorKind::validation,
             fmt::format("(p={}, seed={}): duplicate tokens value {}", format_double(key.first),
                         key.second, format_double(rows[i].tokens)));
      }
    }
    std::vector<std::int64_t> steps;
    std::vector<double> tokens, loss, lr, trsigma;
    for (const auto& r : rows) {
      steps.push_back(r.step);
      tokens.push_back(r.tokens);
      loss.push_back(r.loss);
      if (has_lr) lr.push_back(r.lr);
      if (has_trsigma) trsigma.push_back(r.trsigma);
    }
    curves.emplace_back(key.first, key.second, std::move(steps), std::move(tokens),
                        std::move(loss), std::move(lr), std::move(trsigma));
  }
  return curves;
}

struct Meta {
  std::string schedule_id = "constant";
  double flops = 6.0;
  std::map<double, double> horizons;
};

ordered_json horizons_json(const std::map<double, double>& horizons) {
  ordered_json arr = ordered_json::array();
  for (const auto& [p, t] : horizons) arr.push_back({{"p", p}, {"t_star", t}});
  return arr;
}

Meta read_meta(const ordered_json& j, const std::string& source) {
  Meta m;
  try {
    if (j.contains("schedule_id")) m.schedule_id = j.at("schedule_id").get<std::string>();
    if (j.contains("flops_per_token_factor")) {
      m.flops = j.at("flops_per_token_factor").get<double>();
    }
    if (j.contains("horizons")) {
      for (const auto& h : j.at("horizons")) {
        m.horizons[h.at("p").get<double>()] = h.at("t_star").get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, source + ": " + e.what());
  }
  return m;
}

}  // namespace

LadderFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".json") return LadderFormat::json;
  if (ext == ".csv") return LadderFormat::csv;
  fail(ErrorKind::argument, "cannot infer ladder format from '" + path.string() +
                                "'; use a .csv or .json extension");
}

Ladder read_ladder_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) fail(ErrorKind::parse, source + ": empty file, header required");
  std::string header(trim(line));
  if (header.size() >= 3 && header.compare(0, 3, "\xEF\xBB\xBF") == 0) header.erase(0, 3);
  const auto names = detail::split(header, ',');
  const std::vector<std::string_view> required = {"p", "seed", "step", "tokens", "loss"};
  if (names.size() < required.size() || !std::equal(required.begin(), required.end(), names.begin())) {
    fail(ErrorKind::parse, fmt::format("{}:{}: header must start with p,seed,step,tokens,loss",
                                       source, line_no));
  }
  int lr_col = -1, trsigma_col = -1;
  for (std::size_t i = required.size(); i < names.size(); ++i) {
    if (names[i] == "lr" && lr_col < 0) {
      lr_col = static_cast<int>(i);
    } else if (names[i] == "trsigma" && trsigma_col < 0) {
      trsigma_col = static_cast<int>(i);
    } else {
      fail(ErrorKind::parse,
           fmt::format("{}:{}: unexpected column '{}'", source, line_no, names[i]));
    }
  }
  std::map<CurveKey, std::vector<Row>> groups;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = detail::split(line, ',');
    const auto where = fmt::format("{}:{}", source, line_no);
    if (fields.size() != names.size()) {
      fail(ErrorKind::parse, fmt::format("{}: expected {} fields, got {}", where, names.size(),
                                         fields.size()));
    }
    Row r{};
    const double p = parse_double(fields[0], where);
    const auto seed = parse_int(fields[1], where);
    r.step = parse_int(fields[2], where);
    r.tokens = parse_double(fields[3], where);
    r.loss = parse_double(fields[4], where);
    if (lr_col >= 0) r.lr = parse_double(fields[lr_col], where);
    if (trsigma_col >= 0) r.trsigma = parse_double(fields[trsigma_col], where);
    groups[{p, seed}].push_back(r);
  }
  if (groups.empty()) fail(ErrorKind::parse, source + ": no data rows");
  return Ladder(build_curves(groups, lr_col >= 0, trsigma_col >= 0));
}

void write_ladder_csv(std::ostream& out, const Ladder& ladder) {
  bool has_lr = true, has_trsigma = true;
  for (const auto& c : ladder.curves()) {
    has_lr = has_lr && c.has_lr();
    has_trsigma = has_trsigma && c.has_trsigma();
  }
  out << "p,seed,step,tokens,loss" << (has_lr ? ",lr" : "") << (has_trsigma ? ",trsigma" : "")
      << '\n';
  for (const auto& c : ladder.curves()) {
    const auto p = format_double(c.model_size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      out << p << ',' << c.seed() << ',' << c.steps()[i] << ',' << format_double(c.tokens()[i])
          << ',' << format_double(c.loss()[i]);
      if (has_lr) out << ',' << format_double(c.lr()[i]);
      if (has_trsigma) out << ',' << format_double(c.trsigma()[i]);
      out << '\n';
    }
  }
}

Ladder read_ladder_json(std::istream& in, const std::string& source) {
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, source + ": " + e.what());
  }
  const Meta meta = read_meta(j, source);
  std::map<CurveKey, std::vector<Row>> groups;
  bool has_lr = true, has_trsigma = true;
  try {
    const auto& curves = j.at("curves");
    for (std::size_t ci = 0; ci < curves.size(); ++ci) {
      const auto& c = curves[ci];
      const CurveKey key{c.at("p").get<double>(), c.at("seed").get<std::int64_t>()};
      if (groups.contains(key)) {
        fail(ErrorKind::validation, fmt::format("{}: duplicate curve (p={}, seed={})", source,
                                                format_double(key.first), key.second));
      }
      auto& rows = groups[key];
      for (const auto& s : c.at("samples")) {
        if (s.size() < 3 || s.size() > 5) {
          fail(ErrorKind::parse, fmt::format("{}: curve {} has a sample with {} fields", source,
                                             ci, s.size()));
        }
        Row r{s[0].get<std::int64_t>(), s[1].get<double>(), s[2].get<double>(), 0.0, 0.0};
        has_lr = has_lr && s.size() >= 4 && !s[3].is_null();
        has_trsigma = has_trsigma && s.size() >= 5;
        if (s.size() >= 4 && !s[3].is_null()) r.lr = s[3].get<double>();
        if (s.size() >= 5) r.trsigma = s[4].get<double>();
        rows.push_back(r);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, source + ": " + e.what());
  }
  if (groups.empty()) fail(ErrorKind::parse, source + ": no curves");
  return Ladder(build_curves(groups, has_lr, has_trsigma), meta.schedule_id, meta.flops,
                meta.horizons);
}

void write_ladder_json(std::ostream& out, const Ladder& ladder) {
  ordered_json j;
  j["schedule_id"] = ladder.schedule_id();
  j["flops_per_token_factor"] = ladder.flops_per_token();
  if (!ladder.horizons().empty()) j["horizons"] = horizons_json(ladder.horizons());
  ordered_json curves = ordered_json::array();
  for (const auto& c : ladder.curves()) {
    ordered_json samples = ordered_json::array();
    for (std::size_t i = 0; i < c.size(); ++i) {
      ordered_json s = {c.steps()[i], c.tokens()[i], c.loss()[i]};
      if (c.has_lr()) {
        s.push_back(c.lr()[i]);
      } else if (c.has_trsigma()) {
        s.push_back(nullptr);
      }
      if (c.has_trsigma()) s.push_back(c.trsigma()[i]);
      samples.push_back(std::move(s));
    }
    curves.push_back({{"p", c.model_size()}, {"seed", c.seed()}, {"samples", std::move(samples)}});
  }
  j["curves"] = std::move(curves);
  out << j.dump() << '\n';
}

Ladder load_ladder(const std::filesystem::path& path, std::optional<LadderFormat> format) {
  const LadderFormat f = format.value_or(format_from_path(path));
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  if (f == LadderFormat::json) return read_ladder_json(in, path.string());
  Ladder table = read_ladder_csv(in, path.string());
  auto meta_path = path;
  meta_path += ".meta.json";
  if (!std::filesystem::exists(meta_path)) return table;
  std::ifstream meta_in(meta_path, std::ios::binary);
  ordered_json j;
  try {
    j = ordered_json::parse(meta_in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, meta_path.string() + ": " + e.what());
  }
  const Meta meta = read_meta(j, meta_path.string());
  std::vector<LossCurve> curves(table.curves().begin(), table.curves().end());
  return Ladder(std::move(curves), meta.schedule_id, meta.flops, meta.horizons);
}

void save_ladder(const Ladder& ladder, const std::filesystem::path& path,
                 std::optional<LadderFormat> format) {
  const LadderFormat f = format.value_or(format_from_path(path));
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write '" + path.string() + "'");
  if (f == LadderFormat::json) {
    write_ladder_json(out, ladder);
  } else {
    write_ladder_csv(out, ladder);
    auto meta_path = path;
    meta_path += ".meta.json";
    ordered_json j;
    j["schedule_id"] = ladder.schedule_id();
    j["flops_per_token_factor"] = ladder.flops_per_token();
    j["horizons"] = horizons_json(ladder.horizons());
    std::ofstream meta(meta_path, std::ios::binary | std::ios::trunc);
    if (!meta) fail(ErrorKind::io, "cannot write '" + meta_path.string() + "'");
    meta << j.dump(2) << '\n';
  }
  if (!out) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

}  // namespace scl
