#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "scl/cli.hpp"

namespace fs = std::filesystem;
using testing::scratch_dir;
using testing::slurp;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "scalecollapse");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = scl::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const std::string quad = "quad:d=32,spec_exp=1.5,m0=i^-1,sigc=2,B=2,eta0=0.3,floor=0.1*p^-0.5";

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

}  // namespace

TEST_CASE("simulate writes a ladder with metadata in either format") {
  const auto dir = scratch_dir("cli_sim");
  const auto csv = dir / "l.csv";
  auto r = run({"simulate", "--law", "simple:L0=0,mu=0.5,nu=0.5", "--sizes", "16..64", "--out", csv.string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(csv));
  CHECK(fs::exists(dir / "l.csv.meta.json"));
  CHECK(first_line(slurp(csv)) == "p,seed,step,tokens,loss");
  r = run({"--format", "json", "simulate", "--law", "simple:L0=0,mu=0.5,nu=0.5", "--sizes", "16,32",
           "--out", (dir / "l.csv").string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "l.json"));
  CHECK(j["schedule_id"] == "constant");
  CHECK(j["curves"].size() == 2);
  CHECK(j["horizons"].size() == 2);
}

TEST_CASE("fit, collapse and gamma-scan produce the documented artifacts") {
  const auto dir = scratch_dir("cli_pipeline");
  const auto ladder = (dir / "l.csv").string();
  REQUIRE(run({"simulate", "--law", "simple:L0=0,mu=0.5,nu=0.5", "--sizes", "8..1024", "--extend", "10",
               "--decades", "4", "--out", ladder}).code == 0);
  const auto fit = (dir / "fit.json").string();
  auto r = run({"fit", "--ladder", ladder, "--out", fit, "--drop-extremes"});
  REQUIRE(r.code == 0);
  const auto fj = nlohmann::json::parse(slurp(fit));
  for (const char* k : {"frontier", "horizon", "law", "coverage_warnings"}) CHECK(fj.contains(k));
  for (const char* k : {"kappa", "gamma", "p0"}) CHECK(fj["horizon"].contains(k));
  for (const char* k : {"L0", "a", "b", "residual"}) CHECK(fj["law"].contains(k));
  CHECK(fj["horizon"]["gamma"].get<double>() == doctest::Approx(1.0).epsilon(0.05));
  CHECK(fj["frontier"][0].contains("c"));
  CHECK(fj["frontier"][0].contains("L"));
  CHECK(fj["frontier"][0].contains("p"));

  const auto out = dir / "collapse";
  r = run({"collapse", "--ladder", ladder, "--fit", fit, "--out-dir", out.string(), "--L0", "0"});
  REQUIRE(r.code == 0);
  CHECK(first_line(slurp(out / "collapse.csv")) == "x,mean_ell,delta,vp_eo,ep_vo");
  const auto rep = nlohmann::json::parse(slurp(out / "report.json"));
  CHECK(rep["L0"] == 0.0);
  CHECK(rep.contains("delta"));

  const auto scan = dir / "gamma_scan.csv";
  r = run({"gamma-scan", "--law", "simple:L0=0,mu=0.5,nu=0.5", "--sizes", "16..1024", "--out", scan.string()});
  REQUIRE(r.code == 0);
  const auto text = slurp(scan);
  CHECK(first_line(text) == "gamma,quality");
  CHECK(r.out.find("best gamma 1 ") != std::string::npos);
}

TEST_CASE("predict fits alpha from simulated schedule pairs") {
  const auto dir = scratch_dir("cli_predict");
  const auto ref = (dir / "ref.csv").string();
  const auto tgt = (dir / "lin.csv").string();
  const std::vector<std::string> common{"--quad", quad, "--sizes", "100,200", "--kappa", "4", "--seeds", "4",
                                        "--record-stride", "2"};
  auto args = std::vector<std::string>{"simulate", "--out", ref};
  args.insert(args.end(), common.begin(), common.end());
  REQUIRE(run(args).code == 0);
  args = {"simulate", "--schedule", "linear", "--out", tgt};
  args.insert(args.end(), common.begin(), common.end());
  REQUIRE(run(args).code == 0);
  const auto out = dir / "pred";
  const auto r = run({"predict", "--reference", ref, "--target", tgt, "--out-dir", out.string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(out / "alpha.json"));
  CHECK(j["alpha"].get<double>() > 0.0);
  CHECK(j["pairs"].size() == 2);
  CHECK(j["reference_alpha"]["transformer"] == 0.21);
  CHECK(first_line(slurp(out / "prediction.csv")) == "tau,x,L_ref,L_pred,L_obs,rel_err,target,p");
  // A self-pair has no predictor energy: warned about, alpha still fitted from the rest.
  const auto mixed = run({"predict", "--reference", ref, "--target", tgt, "--target", ref, "--out-dir",
                          (dir / "mixed").string()});
  CHECK(mixed.code == 0);
  CHECK(mixed.err.find("zero predictor energy") != std::string::npos);
}

TEST_CASE("outputs are byte-identical across reruns and thread counts") {
  const auto dir = scratch_dir("cli_determinism");
  auto sim = [&](const std::string& name, const std::string& threads) {
    const auto path = dir / name;
    REQUIRE(run({"--seed", "7", "--threads", threads, "simulate", "--quad", quad, "--sizes", "100..400",
                 "--kappa", "3", "--seeds", "3", "--schedule", "cosine", "--out", path.string()}).code == 0);
    return slurp(path);
  };
  const auto a = sim("a.csv", "1");
  CHECK(a == sim("b.csv", "1"));
  CHECK(a == sim("c.csv", "3"));
  CHECK(slurp(dir / "a.csv.meta.json") == slurp(dir / "c.csv.meta.json"));
  REQUIRE(run({"--seed", "8", "simulate", "--quad", quad, "--sizes", "100..400", "--kappa", "3", "--seeds", "3",
               "--schedule", "cosine", "--out", (dir / "d.csv").string()}).code == 0);
  CHECK(a != slurp(dir / "d.csv"));

  auto report = [&](const std::string& name, const std::string& threads) {
    const auto out = dir / name;
    REQUIRE(run({"--threads", threads, "report", "--quad", quad, "--sizes", "100..400", "--kappa", "3",
                 "--seeds", "3", "--schedule", "constant", "--target", "linear", "--out-dir", out.string()})
                .code == 0);
    return out;
  };
  const auto r1 = report("r1", "1");
  const auto r2 = report("r2", "2");
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(r1)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), r1);
    CAPTURE(rel.string());
    CHECK(slurp(entry.path()) == slurp(r2 / rel));
    ++compared;
  }
  CHECK(compared >= 8);
  const auto summary = nlohmann::json::parse(slurp(r1 / "summary.json"));
  CHECK(summary["predict"] == "predict/alpha.json");
  CHECK(summary["collapse"] == "collapse/report.json");
}

TEST_CASE("exit codes distinguish failure classes") {
  const auto dir = scratch_dir("cli_exit");
  CHECK(run({"--help"}).code == scl::exit_ok);
  CHECK(run({}).code == scl::exit_usage);
  CHECK(run({"simulate", "--law", "simple:mu=banana"}).code == scl::exit_usage);
  CHECK(run({"simulate", "--law", "simple:mu=0.5", "--quad", quad}).code == scl::exit_usage);
  CHECK(run({"fit"}).code == scl::exit_usage);
  CHECK(run({"--format", "xml", "simulate", "--law", "simple:mu=0.5"}).code == scl::exit_usage);
  CHECK(run({"fit", "--ladder", (dir / "missing.csv").string()}).code == scl::exit_failure);

  const auto small = (dir / "small.csv").string();
  REQUIRE(run({"simulate", "--law", "simple:L0=0,mu=0.5,nu=0.5", "--sizes", "16,32", "--out", small}).code == 0);
  CHECK(run({"fit", "--ladder", small, "--out", (dir / "f.json").string()}).code == scl::exit_insufficient);

  fs::remove(dir / "small.csv.meta.json");
  const auto r = run({"collapse", "--ladder", small, "--out-dir", dir.string()});
  CHECK(r.code == scl::exit_missing_horizons);
  CHECK(r.err.find("horizon") != std::string::npos);

  const auto law = (dir / "law.csv").string();
  REQUIRE(run({"simulate", "--law", "simple:L0=0,mu=0.5,nu=0.5", "--sizes", "16,32", "--out", law}).code == 0);
  CHECK(run({"predict", "--reference", law, "--target", law, "--out-dir", dir.string()}).code ==
        scl::exit_missing_trsigma);
  CHECK(run({"gamma-scan", "--ladder", law, "--grid", "1.5:2:0.1", "--out", (dir / "g.csv").string()}).code ==
        scl::exit_coverage);
}

TEST_CASE("environment variable sets the default output directory") {
  const auto dir = scratch_dir("cli_env");
  ::setenv("SCALECOLLAPSE_OUT", dir.c_str(), 1);
  const auto r = run({"simulate", "--law", "simple:L0=0,mu=0.5,nu=0.5", "--sizes", "16,32"});
  ::unsetenv("SCALECOLLAPSE_OUT");
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "ladder.csv"));
}
