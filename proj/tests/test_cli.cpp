#include "orbitcal/harness.hpp"
#include "orbitcal/plot.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace orbitcal;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "orbitcal_cli_test";

int run(const std::string& args, const std::string& stdout_name = "stdout.txt") {
  fs::create_directories(kWork);
  const std::string cmd = "cd '" + kWork.string() + "' && '" ORBITCAL_CLI "' " + args + " > '" +
                          (kWork / stdout_name).string() + "' 2> '" +
                          (kWork / "stderr.txt").string() + "'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

// "key value" lines.
std::map<std::string, std::string> summary(const fs::path& p) {
  std::map<std::string, std::string> out;
  std::istringstream is(slurp(p));
  std::string k, v;
  while (is >> k >> v) out[k] = v;
  return out;
}

const char* kSmallCampaign = R"(seed = 3
workers = 2
[campaign]
problem = "analytic:rosenbrock:3"
optimizers = ["cmaes", "nelder_mead"]
num_seeds = 3
eval_budget = 80
)";

}  // namespace

TEST_CASE("cli usage errors") {
  CHECK(run("") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("calibrate --budget 0") == 1);
  CHECK(run("calibrate --algorithm bfgs") == 1);
  CHECK(run("hyperopt --algorithm powell") == 1);
  CHECK(slurp(kWork / "stderr.txt").find("no tunable hyperparameters") != std::string::npos);
  write(kWork / "bad.toml", "[orbit]\nlength = 3\n");
  CHECK(run("calibrate --config bad.toml") == 1);
  CHECK(slurp(kWork / "stderr.txt").find("bad.toml:2: unknown key 'orbit.length'") !=
        std::string::npos);
  CHECK(run("plot missing.csv") == 2);
  CHECK(run("--help") == 0);
}

TEST_CASE("cli simulate") {
  REQUIRE(run("simulate --out sim") == 0);
  const std::string csv = slurp(kWork / "sim" / "pulse.csv");
  CHECK(csv.rfind("time_s,inphase,quadrature,signal\n", 0) == 0);
  CHECK(fs::exists(kWork / "sim" / "pulse.svg"));

  REQUIRE(run("simulate --amplitude 0 --out zero", "zero.txt") == 0);
  const std::string report = slurp(kWork / "zero.txt");
  const auto at = report.find("fidelity to identity (drift frame): ");
  REQUIRE(at != std::string::npos);
  const double f = std::stod(report.substr(at + 36));
  CHECK(std::abs(f - 1.0) < 1e-9);

  // The environment variable supplies the default config.
  write(kWork / "pwc.toml", "[pulse]\nmode = \"pwc\"\n");
  REQUIRE(std::system(("cd '" + kWork.string() + "' && ORBITCAL_CONFIG=pwc.toml '" ORBITCAL_CLI
                       "' simulate --out envsim > env.txt")
                          .c_str()) == 0);
  CHECK(slurp(kWork / "env.txt").rfind("mode pwc", 0) == 0);
}

TEST_CASE("cli calibrate improves the detuned drag start") {
  REQUIRE(run("calibrate --algorithm cmaes --budget 1000 --out cal") == 0);
  const auto s = summary(kWork / "cal" / "summary.txt");
  const double start = parse_number(s.at("start_loss"));
  const double final_loss = parse_number(s.at("final_loss"));
  CHECK(s.at("evaluations") == "1000");
  CHECK(final_loss <= start);
  CHECK(start - final_loss >= 2.0);
  // Regression fixture of the shipped defaults.
  CHECK(start == doctest::Approx(-2.8354696170244873).epsilon(1e-9));
  CHECK(final_loss == doctest::Approx(-7.02588).epsilon(1e-4));
  CHECK(fs::exists(kWork / "cal" / "run.csv"));
  CHECK(fs::exists(kWork / "cal" / "manifest.toml"));
}

TEST_CASE("cli benchmark, plot and manifest replay") {
  write(kWork / "small.toml", kSmallCampaign);
  REQUIRE(run("benchmark --config small.toml --out bench") == 0);
  for (const char* f : {"runs.csv", "summary.csv", "aggregate.csv", "aggregate_raw.csv",
                        "diagnostics.csv", "convergence_mean.svg", "convergence_median.svg",
                        "manifest.toml"}) {
    CHECK(fs::exists(kWork / "bench" / f));
  }
  REQUIRE(run("plot bench/aggregate.csv --out plots") == 0);
  const std::string svg = slurp(kWork / "plots" / "aggregate_median.svg");
  std::size_t polylines = 0;
  for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) {
    ++polylines;
  }
  CHECK(polylines == 2);
  CHECK(run("plot bench/manifest.toml --out plots") == 2);

  REQUIRE(run("benchmark --config bench/manifest.toml --workers 1 --out replay") == 0);
  for (const char* f : {"runs.csv", "summary.csv", "aggregate.csv", "aggregate_raw.csv",
                        "diagnostics.csv"}) {
    CHECK(slurp(kWork / "bench" / f) == slurp(kWork / "replay" / f));
  }
}

TEST_CASE("cli hyperopt") {
  write(kWork / "tune.toml", R"([hyperopt]
problem = "analytic:sphere:2"
num_seeds = 3
inner_budget = 60
tail_length = 10
meta_budget = 4
)");
  REQUIRE(run("hyperopt --config tune.toml --algorithm one_plus_one --out tune", "tune.txt") == 0);
  const std::string trace = slurp(kWork / "tune" / "meta_trace.csv");
  CHECK(trace.rfind("meta_eval_index,initial_sigma,rating,slope_sum,tail_sum\n", 0) == 0);
  CHECK(fs::exists(kWork / "tune" / "meta_trace.svg"));
  CHECK(slurp(kWork / "tune.txt").find("[optimizer.one_plus_one]") != std::string::npos);
}
