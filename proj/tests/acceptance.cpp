// Acceptance suite: one PASS/FAIL line per criterion on stdout, details
// indented beneath it, run progress on stderr. Arguments select criteria by
// number; no arguments runs all nine. Exit status is the number of failures
// outside the --xfail list.

#include "oracles.hpp"

#include "orbitcal/config.hpp"
#include "orbitcal/harness.hpp"
#include "orbitcal/hyperopt.hpp"
#include "orbitcal/rng.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace orbitcal;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigDir = ORBITCAL_CONFIG_DIR;
const fs::path kOutDir = ORBITCAL_ACCEPTANCE_OUT;

// Final medians closer than this count as a tie. The DRAG optimizers all
// converge onto the same noiseless minimum and differ by roundoff-level
// amounts there.
constexpr double kTieTolerance = 1e-6;

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    details.push_back(std::string(ok ? "ok    " : "FAIL  ") + what);
  }
  void note(const std::string& what) { details.push_back("      " + what); }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void check_runtime(Outcome& o, double seconds, double limit) {
  o.check(seconds < limit, fmt("runtime %.1f s < %.0f s", seconds, limit));
}

double sample_std(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// ----------------------------------------------------------------- physics

Outcome physics() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const double unitarity = oracle::max_unitarity_error(20, 11);
  o.check(unitarity < 1e-9, fmt("max |U^dag U - 1| over 20 random signals: %.3e < 1e-9", unitarity));
  const double ratio = oracle::dt_halving_ratio(2048);
  o.check(ratio >= 3.5 && ratio <= 4.5, fmt("dt-halving error ratio %.4f in [3.5, 4.5]", ratio));
  const double rabi = oracle::rabi_max_error(0.5e6, 16, 512);
  o.check(rabi < 1e-4, fmt("Rabi population error %.3e < 1e-4", rabi));
  check_runtime(o, seconds_since(t0), 30);
  return o;
}

// ---------------------------------------------------------------- clifford

Outcome clifford() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const oracle::CliffordReport r = oracle::clifford_report(1000, 2024);
  o.check(r.order == 24, fmt("group order %d", r.order));
  o.check(r.closure, "closure under multiplication");
  o.check(r.inverses, "every element has an inverse");
  o.check(r.identity, "two-sided identity");
  o.check(r.worst_sequence_error < 1e-10,
          fmt("1000 sequences, worst target error %.3e < 1e-10", r.worst_sequence_error));
  check_runtime(o, seconds_since(t0), 10);
  return o;
}

// -------------------------------------------------------------------- loss

Outcome loss_properties() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const ToolkitConfig cfg = load_config(kConfigDir / "desk.toml");
  const double floor = std::log(cfg.orbit.infidelity_floor);

  for (const char* spec : {"drag", "pwc"}) {
    const auto p = make_problem(cfg, spec);
    const auto again = make_problem(cfg, spec);
    Rng rng = make_rng(3, spec);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double lo = INFINITY, hi = -INFINITY;
    bool same = true;
    for (int i = 0; i < 100; ++i) {
      Vector unit(p->nominal().size());
      for (double& x : unit) x = u(rng);
      if (i == 0) unit.assign(unit.size(), 0.5);
      const Vector x = p->from_unit(unit);
      const double l = p->evaluate(x, 0, 0);
      same = same && again->evaluate(x, 0, 0) == l;
      lo = std::min(lo, l);
      hi = std::max(hi, l);
    }
    o.check(lo >= floor && hi <= 0.0,
            fmt("%s: 100 points give loss in [%.4f, %.4f] within [ln 1e-9, 0]", spec, lo, hi));
    o.check(same, fmt("%s: identical losses from an independently built loss", spec));
  }

  std::vector<double> few, many;
  const auto base = make_problem(cfg, "drag");
  const Vector x = base->from_unit(std::vector<double>{0.6, 0.4, 0.55});
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    ToolkitConfig c = cfg;
    c.orbit.sequence_seed = seed;
    c.orbit.num_sequences = 10;
    few.push_back(make_problem(c, "drag")->evaluate(x, 0, 0));
    c.orbit.num_sequences = 40;
    many.push_back(make_problem(c, "drag")->evaluate(x, 0, 0));
  }
  const double s10 = sample_std(few), s40 = sample_std(many);
  o.check(s40 < s10, fmt("std over 50 sequence draws: N=40 %.4f < N=10 %.4f", s40, s10));
  check_runtime(o, seconds_since(t0), 300);
  return o;
}

// --------------------------------------------------------------- landscape

Outcome landscape() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const ToolkitConfig cfg;
  const auto& ls = cfg.landscape;
  const OrbitLoss loss = landscape_loss(cfg);
  const auto& space = loss.space();
  const auto amps = landscape_axis(space, "amplitude", ls.a_min, ls.a_max, 101);
  const double b0 = space.nominal()[space.index_of("drag_coeff")];
  const Landscape slice = landscape_scan(loss, "amplitude", amps, "drag_coeff", std::vector{b0});
  const int minima = count_local_minima(slice.loss);
  o.check(ls.num_sequences == 1 && ls.sequence_length == 80,
          fmt("slice uses n=%d, l=%d", ls.num_sequences, ls.sequence_length));
  o.check(minima >= 2, fmt("101-point amplitude slice over [%g, %g] x nominal has %d local minima",
                           ls.a_min, ls.a_max, minima));
  fs::create_directories(kOutDir);
  std::ofstream csv(kOutDir / "amplitude_slice.csv");
  slice.write_csv(csv);
  check_runtime(o, seconds_since(t0), 600);
  return o;
}

// ------------------------------------------------------------- optimizers

Outcome optimizers() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  for (const Algorithm a : kAllAlgorithms) {
    const std::string name(to_string(a));
    const int wins = oracle::sphere_successes(a, 20);
    o.check(wins == 20, fmt("%s: %d/20 seeds reach f < 1e-6 within %zu evaluations", name.c_str(),
                            wins, oracle::sphere_budget(a)));
    if (oracle::rank_based(a)) {
      o.check(oracle::rank_invariant(a, 5), name + ": asks unchanged under a monotone loss transform");
    }
    o.check(oracle::deterministic(a, 5), name + ": identical runs from one seed");
  }
  check_runtime(o, seconds_since(t0), 120);
  return o;
}

// -------------------------------------------------------------- campaigns

struct Campaign {
  ToolkitConfig cfg;
  CampaignResult result;
  double seconds = 0.0;
  fs::path dir;
};

Campaign run_config(const ToolkitConfig& cfg, const fs::path& dir) {
  Campaign c{cfg, {}, 0.0, dir};
  const auto problem = make_problem(cfg, cfg.campaign.problem);
  const CampaignConfig cc = campaign_config(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t done = 0;
  const std::size_t total = cc.optimizers.size() * cc.num_seeds;
  c.result = run_campaign(cc, *problem, [&](const RunRecord& r) {
    std::fprintf(stderr, "  [%s %zu/%zu] %s seed %zu: best %.6f\n", cfg.campaign.problem.c_str(),
                 ++done, total, r.optimizer.c_str(), r.seed_index,
                 r.best.empty() ? std::nan("") : r.best.back());
  });
  c.seconds = seconds_since(t0);
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < cc.num_seeds; ++i) seeds.push_back(campaign_run_seed(cc.seed, i));
  export_results(c.result, problem->name(), dir, manifest_toml(cfg, "benchmark", seeds));
  return c;
}

double median_start(const CampaignResult& r) {
  std::vector<double> starts;
  for (const auto& rec : r.records) {
    if (rec.seed_index == starts.size()) starts.push_back(rec.start_loss);
  }
  return median_of(starts);
}

const AggregateCurve& curve(const CampaignResult& r, Algorithm a) {
  for (const auto& c : r.curves) {
    if (c.optimizer == to_string(a)) return c;
  }
  throw std::runtime_error("campaign has no curve for " + std::string(to_string(a)));
}

void report_campaign(Outcome& o, const Campaign& c) {
  const std::size_t cores = std::max(1u, std::thread::hardware_concurrency());
  o.note(fmt("%zu seeds x %zu evaluations, %.1f min on %zu worker(s), %zu core(s); output %s",
             c.cfg.campaign.num_seeds, c.cfg.campaign.eval_budget, c.seconds / 60.0,
             c.cfg.effective_workers(), cores, c.dir.c_str()));
  o.note(fmt("median start loss %.6f", median_start(c.result)));
  for (const auto& cv : c.result.curves) {
    o.check(cv.completed == cv.expected,
            fmt("%-22s %zu/%zu runs, final median %.9f, mean %.9f", cv.optimizer.c_str(),
                cv.completed, cv.expected, cv.median.back(), cv.mean.back()));
  }
}

// CMA-ES final median against every other optimizer's, `tolerance` nats slack.
void check_cmaes_best(Outcome& o, const CampaignResult& r, double tolerance) {
  const double cma = curve(r, Algorithm::CmaEs).median.back();
  for (const auto& cv : r.curves) {
    if (cv.optimizer == to_string(Algorithm::CmaEs)) continue;
    const double other = cv.median.back();
    o.check(cma <= other + tolerance, fmt("cmaes median %.9f <= %s median %.9f%s", cma,
                                          cv.optimizer.c_str(), other,
                                          tolerance > 0 ? fmt(" + %.0e", tolerance).c_str() : ""));
  }
}

Outcome drag_benchmark() {
  Outcome o;
  const ToolkitConfig cfg = load_config(kConfigDir / "desk.toml");
  o.check(cfg.campaign.problem == "drag" && cfg.campaign.num_seeds == 20 &&
              cfg.campaign.eval_budget == 1000 && cfg.orbit.num_sequences == 20 &&
              cfg.orbit.sequence_length == 20 && cfg.campaign.optimizers.size() == 6,
          "desk.toml: drag, 6 optimizers, 20 seeds, budget 1000, N=20, l=20");
  const Campaign c = run_config(cfg, kOutDir / "drag");
  report_campaign(o, c);
  const double start = median_start(c.result);
  for (const auto& cv : c.result.curves) {
    o.check(cv.median.back() < start, fmt("%s median best-curve ends below the start (%.6f < %.6f)",
                                          cv.optimizer.c_str(), cv.median.back(), start));
  }
  check_cmaes_best(o, c.result, kTieTolerance);
  check_runtime(o, c.seconds, 2 * 3600);
  return o;
}

Outcome pwc_benchmark() {
  Outcome o;
  const ToolkitConfig cfg = load_config(kConfigDir / "desk_pwc.toml");
  o.check(cfg.campaign.problem == "pwc" && cfg.campaign.num_seeds == 20 &&
              cfg.campaign.eval_budget == 3000 && cfg.campaign.optimizers.size() == 6,
          "desk_pwc.toml: pwc (82 parameters), 6 optimizers, 20 seeds, budget 3000");
  const auto& de = std::get<DifferentialEvolutionParams>(
      cfg.hyperparams_for(Algorithm::DifferentialEvolution));
  const DifferentialEvolutionParams defaults;
  o.check(hyperparam_values(de) == hyperparam_values(defaults) &&
              de.initial_sigma == defaults.initial_sigma,
          "differential_evolution runs with default hyperparameters");
  const Campaign c = run_config(cfg, kOutDir / "pwc");
  report_campaign(o, c);
  check_cmaes_best(o, c.result, 0.0);

  const double start = median_start(c.result);
  const double de_gain = start - curve(c.result, Algorithm::DifferentialEvolution).median.back();
  for (const auto& cv : c.result.curves) {
    if (cv.optimizer == to_string(Algorithm::DifferentialEvolution)) continue;
    const double gain = start - cv.median.back();
    o.check(de_gain <= gain, fmt("differential_evolution improvement %.6f <= %s improvement %.6f",
                                 de_gain, cv.optimizer.c_str(), gain));
  }
  check_runtime(o, c.seconds, 6 * 3600);
  return o;
}

// ----------------------------------------------------------------- rating

Outcome rating() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  o.check(tail_score(std::vector<double>{9.0, 1.0, 3.0}, 2) == std::log(2.0),
          "tail_score([9, 1, 3], 2) == ln 2");
  o.check(tail_score(std::vector<double>(60, 0.25), 50) == std::log(0.25),
          "tail_score(60 x 0.25, 50) == ln 0.25");
  o.check(slope_score(std::vector<double>{0.0, -1.0, -2.0, -3.0}) == -1.0,
          "slope_score([0, -1, -2, -3]) == -1");
  o.check(slope_score(std::vector<double>(10, -3.0)) == 0.0, "slope_score of a constant == 0");

  const AnalyticProblem rosen(make_analytic("rosenbrock", 2));
  RatingConfig rc;
  rc.num_seeds = 4;
  rc.inner_budget = 120;
  double worst = 0.0;
  Rating base = rate_hyperparameters(NelderMeadParams{}, rc, rosen, 3);
  for (const auto& [s, g] : {std::pair{0.0, 1.0}, {100.0, 0.0}, {200.0, 2.5}, {-3.0, 0.5}}) {
    rc.slope_weight = s;
    rc.final_weight = g;
    const Rating r = rate_hyperparameters(NelderMeadParams{}, rc, rosen, 3);
    const double expect = s * base.slope_sum + g * base.tail_sum;
    worst = std::max(worst, std::abs(r.total - expect) / std::max(1.0, std::abs(expect)));
  }
  o.check(worst <= 8 * std::numeric_limits<double>::epsilon(),
          fmt("r(s, g) == s * sum m + g * sum e, worst relative error %.2e", worst));

  const AnalyticProblem sphere(make_analytic("sphere", 2));
  RatingConfig rs;
  rs.num_seeds = 10;
  rs.inner_budget = 300;
  const MetaResult tuned = meta_optimize(OnePlusOneParams{}, rs, sphere, 30, 1, 1);
  auto mean_final = [](const Rating& r) {
    return std::accumulate(r.final_losses.begin(), r.final_losses.end(), 0.0) /
           static_cast<double>(r.final_losses.size());
  };
  const double best = mean_final(tuned.best_rating);
  const double tiny = mean_final(rate_hyperparameters(OnePlusOneParams{1e-6}, rs, sphere, 1));
  const double huge = mean_final(rate_hyperparameters(OnePlusOneParams{1e2}, rs, sphere, 1));
  o.note(fmt("tuned sigma %.4g", std::get<OnePlusOneParams>(tuned.best).initial_sigma));
  o.check(best <= tiny, fmt("tuned mean final %.3e <= sigma 1e-6 mean final %.3e", best, tiny));
  o.check(best <= huge, fmt("tuned mean final %.3e <= sigma 1e2 mean final %.3e", best, huge));
  check_runtime(o, seconds_since(t0), 600);
  return o;
}

// --------------------------------------------------------- reproducibility

Outcome replay() {
  Outcome o;
  const std::vector<std::string> csvs = {"runs.csv", "summary.csv", "aggregate.csv",
                                         "aggregate_raw.csv", "diagnostics.csv"};
  // An analytic campaign plus the DRAG campaign (run here if criterion 6 was skipped).
  ToolkitConfig small;
  small.seed = 9;
  small.campaign.problem = "analytic:rastrigin:4";
  small.campaign.num_seeds = 5;
  small.campaign.eval_budget = 300;
  run_config(small, kOutDir / "analytic");
  if (!fs::exists(kOutDir / "drag" / "manifest.toml")) {
    run_config(load_config(kConfigDir / "desk.toml"), kOutDir / "drag");
  }
  for (const char* name : {"analytic", "drag"}) {
    const fs::path dir = kOutDir / name;
    ToolkitConfig cfg = load_config(dir / "manifest.toml");
    cfg.workers = 1;
    const fs::path again = kOutDir / (std::string(name) + "_replay");
    const Campaign c = run_config(cfg, again);
    for (const auto& f : csvs) {
      const std::string a = slurp(dir / f);
      o.check(!a.empty() && a == slurp(again / f),
              fmt("%s/%s replayed byte-identically (%zu bytes, %.1f min)", name, f.c_str(),
                  a.size(), c.seconds / 60.0));
    }
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"physics oracles", physics},
      {"clifford group and ORBIT sequences", clifford},
      {"loss bounds, determinism and variance reduction", loss_properties},
      {"landscape has multiple local minima", landscape},
      {"optimizer smoke suite", optimizers},
      {"DRAG benchmark", drag_benchmark},
      {"PWC benchmark", pwc_benchmark},
      {"hyperparameter rating", rating},
      {"manifest replay", replay},
  };
  std::vector<int> only, xfail;
  CLI::App app{"Acceptance suite"};
  app.add_option("criteria", only, "criteria to run (default: all)")->check(CLI::Range(1, 9));
  app.add_option("--xfail", xfail, "criteria known to fail; reported but not counted")
      ->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected(only.begin(), only.end()), known(xfail.begin(), xfail.end());

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int k = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(k)) continue;
    std::fprintf(stderr, "criterion %d: %s\n", k, criteria[i].first);
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const bool expected = known.count(k) > 0;
    failures += !o.pass && !expected;
    std::printf("criterion %d %s  %s%s\n", k, o.pass ? "PASS" : "FAIL", criteria[i].first,
                !o.pass && expected ? " (known failure, see README)" : "");
    for (const auto& d : o.details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
  }
  return failures;
}
