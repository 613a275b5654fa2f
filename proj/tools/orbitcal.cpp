// orbitcal: simulate pulses, run closed-loop calibrations, benchmark
// campaigns, tune hyperparameters and plot results.
//
// Exit codes: 0 success, 1 usage or config error, 2 runtime failure.

#include "orbitcal/config.hpp"
#include "orbitcal/harness.hpp"
#include "orbitcal/hyperopt.hpp"
#include "orbitcal/plot.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

using namespace orbitcal;
namespace fs = std::filesystem;

namespace {

constexpr const char* kConfigEnv = "ORBITCAL_CONFIG";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> out;
  std::optional<std::string> algorithm;
  std::optional<long long> budget;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "TOML config file (default: $ORBITCAL_CONFIG)");
  cmd->add_option("--seed", o.seed, "global seed");
  cmd->add_option("--workers", o.workers, "worker threads (default: all cores)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--algorithm", o.algorithm,
                  "cmaes | nelder_mead | powell | one_plus_one | de | sa");
  cmd->add_option("--budget", o.budget, "evaluation budget");
}

ToolkitConfig resolve_config(const CommonOptions& o) {
  std::string path = o.config;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnv)) path = env;
  }
  ToolkitConfig cfg = path.empty() ? ToolkitConfig{} : load_config(path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  return cfg;
}

std::size_t resolve_budget(const CommonOptions& o, std::size_t fallback) {
  if (!o.budget) return fallback;
  if (*o.budget < 1) throw UsageError("--budget must be >= 1");
  return static_cast<std::size_t>(*o.budget);
}

Algorithm resolve_algorithm(const CommonOptions& o, Algorithm fallback) {
  if (!o.algorithm) return fallback;
  try {
    return algorithm_from_string(*o.algorithm);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

fs::path prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

template <class F>
void write_file(const fs::path& path, F&& write) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write(os);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

// ------------------------------------------------------------- simulate ---

struct SimulateOptions {
  std::string mode;
  std::string gate = "X90p";
  int points = 1024;
  std::optional<double> amplitude, drag_coeff;
  bool landscape = false;
};

void print_gate_report(const ToolkitConfig& cfg, const PulseParams& base) {
  const PulseGateModel model(cfg.system);
  const GateUnitaries u = model.unitaries(base);
  std::printf("%-6s %-18s %-18s %s\n", "gate", "fidelity", "leakage", "unitarity_error");
  for (const AtomicGate g : kAtomicGates) {
    const Unitary& ug = u[static_cast<std::size_t>(g)];
    const double leak = std::norm(ug(2, 0)) / 2.0 + std::norm(ug(2, 1)) / 2.0;
    std::printf("%-6s %-18.12f %-18.3e %.3e\n", std::string(to_string(g)).c_str(),
                gate_fidelity(ug, ideal_su2(g)), leak, unitarity_error(ug));
  }
}

int cmd_simulate(const CommonOptions& common, const SimulateOptions& so) {
  ToolkitConfig cfg = resolve_config(common);
  if (!so.mode.empty()) {
    try {
      cfg.pulse.mode = pulse_mode_from_string(so.mode);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (so.amplitude) cfg.pulse.drag.amplitude = *so.amplitude;
  if (so.drag_coeff) cfg.pulse.drag.drag_coeff = *so.drag_coeff;
  const fs::path out = prepare_dir(common.out.value_or("simulate"));

  if (so.landscape) {
    const auto& ls = cfg.landscape;
    const OrbitLoss loss = landscape_loss(cfg);
    const auto& space = loss.space();
    const auto va = landscape_axis(space, ls.param_a, ls.a_min, ls.a_max, ls.a_points);
    const auto vb = landscape_axis(space, ls.param_b, ls.b_min, ls.b_max, ls.b_points);
    const Landscape scan = landscape_scan(loss, ls.param_a, va, ls.param_b, vb);
    write_file(out / "landscape.csv", [&](std::ostream& os) { scan.write_csv(os); });
    write_file(out / "landscape.svg", [&](std::ostream& os) {
      write_heatmap_svg(os, "ORBIT loss landscape", ls.param_a, va, ls.param_b, vb, scan.loss);
    });
    const double b0 = space.nominal()[space.index_of(ls.param_b)];
    const Landscape slice = landscape_scan(loss, ls.param_a, va, ls.param_b, std::vector{b0});
    std::printf("landscape: %zu x %zu points, n=%d l=%d\n", va.size(), vb.size(),
                ls.num_sequences, ls.sequence_length);
    std::printf("local minima along %s at nominal %s: %d\n", ls.param_a.c_str(),
                ls.param_b.c_str(), count_local_minima(slice.loss));
    std::printf("wrote %s\n", (out / "landscape.csv").c_str());
    return 0;
  }

  AtomicGate gate;
  try {
    gate = atomic_gate_from_string(so.gate);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (so.points < 2) throw UsageError("--points must be >= 2");
  const PulseParams base = nominal_pulse(cfg);
  const GatePulse pulse = gate_pulse(gate, base);
  write_file(out / "pulse.csv", [&](std::ostream& os) { write_pulse_csv(os, pulse.params(), so.points); });

  LineChart chart;
  chart.title = std::string(to_string(cfg.pulse.mode)) + " pulse, " + so.gate;
  chart.x_label = "time (ns)";
  chart.y_label = "envelope (rad/s)";
  chart.step = cfg.pulse.mode == PulseMode::Pwc;
  {
    std::ostringstream csv;
    write_pulse_csv(csv, pulse.params(), so.points);
    std::istringstream is(csv.str());
    std::string line;
    std::getline(is, line);
    Series in{"inphase", {}, {}}, quad{"quadrature", {}, {}};
    while (std::getline(is, line)) {
      const auto f = split_csv_line(line);
      const double t = parse_number(f[0]) * 1e9;
      in.x.push_back(t);
      in.y.push_back(parse_number(f[1]));
      quad.x.push_back(t);
      quad.y.push_back(parse_number(f[2]));
    }
    chart.series = {in, quad};
  }
  write_file(out / "pulse.svg", [&](std::ostream& os) { write_line_svg(os, chart); });

  // Fidelity of the selected gate, both in the drive frame and, for checks
  // of the silent limit, against the identity in the frame of the drift.
  const Unitary drive = drive_frame_propagator(cfg.system, pulse);
  Unitary lab;
  if (pulse.silent()) {
    lab = drift_evolution(cfg.system, pulse.duration());
  } else {
    const SampledSignal s = pulse.sample(cfg.system.dt);
    lab = propagate(cfg.system, s.values, s.step);
  }
  const Unitary drift_frame = drift_evolution(cfg.system, pulse.duration()).adjoint() * lab;
  std::printf("mode %s, gate %s, duration %.6g s\n", std::string(to_string(cfg.pulse.mode)).c_str(),
              so.gate.c_str(), pulse.duration());
  std::printf("fidelity to target %s: %.12f\n", so.gate.c_str(),
              gate_fidelity(drive, ideal_su2(gate)));
  std::printf("fidelity to identity (drift frame): %.12f\n",
              gate_fidelity(drift_frame, Matrix2c::Identity()));
  print_gate_report(cfg, base);
  std::printf("wrote %s\n", (out / "pulse.csv").c_str());
  return 0;
}

// ------------------------------------------------------------ calibrate ---

int cmd_calibrate(const CommonOptions& common) {
  ToolkitConfig cfg = resolve_config(common);
  const Algorithm alg = resolve_algorithm(common, Algorithm::CmaEs);
  const std::size_t budget = resolve_budget(common, cfg.campaign.eval_budget);
  cfg.campaign.eval_budget = budget;
  cfg.campaign.optimizers = {alg};
  const fs::path out = prepare_dir(common.out.value_or("calibrate"));
  const auto problem = make_pulse_problem(cfg);
  const std::uint64_t seed = campaign_run_seed(cfg.seed, 0);
  RunRecord rec = run_single(cfg.hyperparams_for(alg), *problem, seed,
                             RunOptions{budget, cfg.campaign.detuning_fraction,
                                        cfg.effective_workers()});
  write_file(out / "run.csv", [&](std::ostream& os) { write_run_csv(os, rec); });
  write_file(out / "manifest.toml",
             [&](std::ostream& os) { os << manifest_toml(cfg, "calibrate", {seed}); });
  std::ostringstream summary;
  summary << "problem " << problem->name() << "\n"
          << "algorithm " << rec.optimizer << "\n"
          << "evaluations " << rec.raw.size() << "\n"
          << "start_loss " << format_number(rec.start_loss) << "\n"
          << "final_loss " << format_number(rec.best.back()) << "\n"
          << "clamps " << rec.clamps << "\n";
  for (std::size_t i = 0; i < rec.best_x.size(); ++i) {
    summary << "best." << problem->parameter_names()[i] << ' ' << format_number(rec.best_x[i])
            << "\n";
  }
  write_file(out / "summary.txt", [&](std::ostream& os) { os << summary.str(); });
  std::cout << summary.str();
  return 0;
}

// ------------------------------------------------------------ benchmark ---

int cmd_benchmark(const CommonOptions& common) {
  ToolkitConfig cfg = resolve_config(common);
  if (common.algorithm) cfg.campaign.optimizers = {resolve_algorithm(common, Algorithm::CmaEs)};
  cfg.campaign.eval_budget = resolve_budget(common, cfg.campaign.eval_budget);
  if (common.out) cfg.campaign.output_dir = *common.out;
  const auto problem = make_problem(cfg, cfg.campaign.problem);

  const CampaignConfig cc = campaign_config(cfg);

  std::size_t done = 0;
  const std::size_t total = cc.optimizers.size() * cc.num_seeds;
  const CampaignResult result = run_campaign(cc, *problem, [&](const RunRecord& r) {
    ++done;
    std::fprintf(stderr, "[%zu/%zu] %s seed %zu: %s, best %.6f\n", done, total,
                 r.optimizer.c_str(), r.seed_index, r.termination.c_str(),
                 r.best.empty() ? std::nan("") : r.best.back());
  });
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < cc.num_seeds; ++i) seeds.push_back(campaign_run_seed(cc.seed, i));
  const auto files = export_results(result, problem->name(), cfg.campaign.output_dir,
                                    manifest_toml(cfg, "benchmark", seeds));
  std::printf("%-14s %10s %14s %14s\n", "optimizer", "completed", "final_mean", "final_median");
  int failures = 0;
  for (const auto& c : result.curves) {
    if (c.completed < c.expected) ++failures;
    std::printf("%-14s %4zu/%-5zu %14.6f %14.6f\n", c.optimizer.c_str(), c.completed, c.expected,
                c.mean.empty() ? std::nan("") : c.mean.back(),
                c.median.empty() ? std::nan("") : c.median.back());
  }
  for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
  return failures ? 2 : 0;
}

// ------------------------------------------------------------- hyperopt ---

int cmd_hyperopt(const CommonOptions& common) {
  ToolkitConfig cfg = resolve_config(common);
  const Algorithm alg = resolve_algorithm(common, Algorithm::CmaEs);
  try {
    meta_axes(alg);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string(to_string(alg)) + ": " + e.what());
  }
  cfg.hyperopt.meta_budget = resolve_budget(common, cfg.hyperopt.meta_budget);
  const fs::path out = prepare_dir(common.out.value_or("hyperopt"));
  const auto problem = make_problem(cfg, cfg.hyperopt.problem);

  const MetaResult result = meta_optimize(
      cfg.hyperparams_for(alg), cfg.hyperopt.rating, *problem, cfg.hyperopt.meta_budget, cfg.seed,
      cfg.hyperopt.base_seed, cfg.campaign.detuning_fraction, cfg.effective_workers(),
      [](const MetaEvaluation& ev) {
        std::fprintf(stderr, "[meta %zu] rating %.6f\n", ev.index, ev.rating.total);
      });
  write_file(out / "meta_trace.csv", [&](std::ostream& os) { write_meta_trace_csv(os, result); });

  LineChart chart;
  chart.title = std::string(to_string(alg)) + " hyperparameter search";
  chart.x_label = "meta evaluation";
  chart.y_label = "rating";
  Series rating{"rating", {}, {}}, best{"best so far", {}, {}};
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& ev : result.trace) {
    lowest = std::min(lowest, ev.rating.total);
    rating.x.push_back(static_cast<double>(ev.index));
    rating.y.push_back(ev.rating.total);
    best.x.push_back(static_cast<double>(ev.index));
    best.y.push_back(lowest);
  }
  chart.series = {rating, best};
  write_file(out / "meta_trace.svg", [&](std::ostream& os) { write_line_svg(os, chart); });

  ToolkitConfig tuned = cfg;
  tuned.hyperparams[static_cast<std::size_t>(alg)] = result.best;
  write_file(out / "manifest.toml", [&](std::ostream& os) {
    os << manifest_toml(tuned, "hyperopt " + std::string(to_string(alg)), {});
  });
  std::printf("best rating %.6f after %zu meta evaluations\n", result.best_rating.total,
              result.trace.size());
  const auto axes = meta_axes(alg);
  const Vector values = hyperparam_values(result.best);
  std::printf("[optimizer.%s]\n", std::string(to_string(alg)).c_str());
  for (std::size_t i = 0; i < axes.size(); ++i) {
    std::printf("%s = %s\n", axes[i].name.c_str(), format_number(values[i]).c_str());
  }
  std::printf("wrote %s\n", (out / "meta_trace.csv").c_str());
  return 0;
}

// ----------------------------------------------------------------- plot ---

int cmd_plot(const CommonOptions& common, const std::vector<std::string>& inputs) {
  if (inputs.empty()) throw UsageError("plot: no input files");
  const fs::path out = prepare_dir(common.out.value_or("plots"));
  for (const auto& input : inputs) {
    std::ifstream is(input, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + input);
    std::string header;
    std::getline(is, header);
    const auto cols = split_csv_line(header);
    const std::string stem = fs::path(input).stem().string();
    is.seekg(0);

    if (cols == std::vector<std::string>{"optimizer", "eval_index", "mean", "median"}) {
      const auto curves = read_aggregate_csv(is);
      write_file(out / (stem + "_mean.svg"), [&](std::ostream& os) {
        write_convergence_svg(os, curves, false, stem + ": mean best loss", "loss");
      });
      write_file(out / (stem + "_median.svg"), [&](std::ostream& os) {
        write_convergence_svg(os, curves, true, stem + ": median best loss", "loss");
      });
      std::printf("wrote %s_mean.svg and %s_median.svg (%zu curves)\n", (out / stem).c_str(),
                  (out / stem).c_str(), curves.size());
      continue;
    }

    // Generic numeric table: first column is x, the rest are series.
    std::string line;
    std::getline(is, line);
    std::vector<std::vector<double>> columns(cols.size());
    std::size_t row = 1;
    while (std::getline(is, line)) {
      ++row;
      if (line.empty()) continue;
      const auto f = split_csv_line(line);
      if (f.size() != cols.size()) {
        throw std::runtime_error(input + ": row " + std::to_string(row) + " has " +
                                 std::to_string(f.size()) + " fields, expected " +
                                 std::to_string(cols.size()));
      }
      for (std::size_t c = 0; c < f.size(); ++c) columns[c].push_back(parse_number(f[c]));
    }
    if (cols.size() == 3 && cols[2] == "loss") {
      // Landscape: recover the grid from the row-major layout.
      std::vector<double> xs, ys;
      for (const double v : columns[0]) {
        if (xs.empty() || xs.back() != v) xs.push_back(v);
      }
      ys.assign(columns[1].begin(), columns[1].begin() + static_cast<std::ptrdiff_t>(
                                                             columns[1].size() / std::max<std::size_t>(1, xs.size())));
      write_file(out / (stem + ".svg"), [&](std::ostream& os) {
        write_heatmap_svg(os, "ORBIT loss landscape", cols[0], xs, cols[1], ys, columns[2]);
      });
    } else {
      if (cols.size() < 2) throw std::runtime_error(input + ": need at least two columns");
      LineChart chart;
      chart.title = stem;
      chart.x_label = cols[0];
      chart.y_label = "value";
      for (std::size_t c = 1; c < cols.size(); ++c) {
        chart.series.push_back(Series{cols[c], columns[0], columns[c]});
      }
      write_file(out / (stem + ".svg"), [&](std::ostream& os) { write_line_svg(os, chart); });
    }
    std::printf("wrote %s.svg\n", (out / stem).c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop qubit calibration testbed"};
  app.require_subcommand(1);
  CommonOptions common;
  SimulateOptions sim;
  std::vector<std::string> plot_inputs;

  auto* simulate = app.add_subcommand("simulate", "sample a gate pulse and report gate fidelities");
  add_common(simulate, common);
  simulate->add_option("--mode", sim.mode, "drag | pwc (default from config)");
  simulate->add_option("--gate", sim.gate, "atomic gate to sample");
  simulate->add_option("--points", sim.points, "samples in the pulse CSV");
  simulate->add_option("--amplitude", sim.amplitude, "override the DRAG amplitude (rad/s)");
  simulate->add_option("--drag-coeff", sim.drag_coeff, "override the DRAG coefficient (s)");
  simulate->add_flag("--landscape", sim.landscape, "scan the loss landscape instead");

  auto* calibrate = app.add_subcommand("calibrate", "one closed-loop run from a detuned start");
  add_common(calibrate, common);
  auto* benchmark = app.add_subcommand("benchmark", "multi-seed campaign over optimizers");
  add_common(benchmark, common);
  auto* hyperopt = app.add_subcommand("hyperopt", "tune an optimizer's hyperparameters");
  add_common(hyperopt, common);
  auto* plot = app.add_subcommand("plot", "render result CSV files as SVG");
  add_common(plot, common);
  plot->add_option("inputs", plot_inputs, "CSV files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*simulate) return cmd_simulate(common, sim);
    if (*calibrate) return cmd_calibrate(common);
    if (*benchmark) return cmd_benchmark(common);
    if (*hyperopt) return cmd_hyperopt(common);
    if (*plot) return cmd_plot(common, plot_inputs);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
