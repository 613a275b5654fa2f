#include "orbitcal/harness.hpp"

#include "orbitcal/plot.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace orbitcal {

namespace {

// Evaluates points [0, count) of a batch, spreading them over `workers` threads.
std::vector<double> evaluate_batch(const Problem& problem, const std::vector<Vector>& physical,
                                   std::size_t count, std::size_t first_index,
                                   std::uint64_t noise_seed, std::size_t workers) {
  std::vector<double> losses(count);
  auto work = [&](std::size_t i) {
    losses[i] = problem.evaluate(physical[i], first_index + i, noise_seed);
  };
  const std::size_t threads = std::min(workers, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) work(i);
    return losses;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += threads) work(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return losses;
}

}  // namespace

Vector detuned_start(std::span<const double> nominal, std::span<const double> lower,
                     std::span<const double> upper, const std::vector<bool>& offset,
                     double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("detuning fraction must lie in [0, 1)");
  }
  Rng rng(seed);
  std::bernoulli_distribution coin(0.5);
  Vector x(nominal.begin(), nominal.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = coin(rng) ? 1.0 : -1.0;
    if (nominal[i] == 0.0 || (i < offset.size() && offset[i])) {
      x[i] = nominal[i] + fraction * s * (upper[i] - lower[i]);
    } else {
      x[i] = nominal[i] * (1.0 + fraction * s);
    }
    x[i] = std::clamp(x[i], lower[i], upper[i]);
  }
  return x;
}

Vector detuned_start(const Problem& problem, double fraction, std::uint64_t seed) {
  std::vector<bool> offset(problem.dimension());
  for (std::size_t i = 0; i < offset.size(); ++i) offset[i] = problem.offset_parameter(i);
  return detuned_start(problem.nominal(), problem.lower(), problem.upper(), offset, fraction,
                       seed);
}

RunRecord run_single(const Hyperparams& hp, const Problem& problem, std::uint64_t seed,
                     const RunOptions& opt) {
  if (opt.budget < 1) throw std::invalid_argument("run: budget must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.optimizer = std::string(to_string(algorithm_of(hp)));
  rec.seed = seed;
  rec.hyperparams = hp;
  rec.start = detuned_start(problem, opt.detuning_fraction, derive_seed(seed, "detuning"));
  const std::uint64_t noise = derive_seed(seed, "noise");
  // Index 0 is the start point; evaluations count from 1.
  rec.start_loss = problem.evaluate(rec.start, 0, noise);

  auto optimizer = make_optimizer(hp, problem.to_unit(rec.start), Bounds::unit(problem.dimension()),
                                  derive_seed(seed, "optimizer"));
  rec.raw.reserve(opt.budget);
  rec.best.reserve(opt.budget);
  double best = std::numeric_limits<double>::infinity();
  while (rec.raw.size() < opt.budget) {
    const std::vector<Vector>& batch = optimizer->ask();
    const std::size_t take = std::min(batch.size(), opt.budget - rec.raw.size());
    std::vector<Vector> physical;
    physical.reserve(take);
    for (std::size_t i = 0; i < take; ++i) physical.push_back(problem.from_unit(batch[i]));
    const auto losses = evaluate_batch(problem, physical, take, rec.raw.size() + 1, noise,
                                       opt.workers);
    for (std::size_t i = 0; i < take; ++i) {
      rec.raw.push_back(losses[i]);
      const double f = std::isnan(losses[i]) ? std::numeric_limits<double>::infinity() : losses[i];
      if (rec.best_x.empty() || f < best) {
        best = f;
        rec.best_x = physical[i];
      }
      rec.best.push_back(best);
    }
    if (take < batch.size()) break;
    const std::vector<Vector> told = batch;
    optimizer->tell(told, losses);
    rec.diagnostics.push_back(optimizer->diagnostics());
  }
  rec.clamps = optimizer->clamp_count();
  rec.warnings = optimizer->warning_count();
  rec.termination = "budget";
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

double median_of(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

AggregateCurve aggregate_stats(const std::vector<RunRecord>& records, std::size_t budget) {
  std::vector<const RunRecord*> done;
  for (const auto& r : records) {
    if (r.ok() && !r.best.empty()) done.push_back(&r);
  }
  if (done.empty()) throw std::invalid_argument("aggregate: no completed runs");
  AggregateCurve out;
  out.optimizer = done.front()->optimizer;
  out.completed = done.size();
  out.expected = records.size();
  auto value_at = [](const std::vector<double>& v, std::size_t i) {
    return i < v.size() ? v[i] : v.back();
  };
  std::vector<double> column(done.size());
  for (std::size_t i = 0; i < budget; ++i) {
    for (std::size_t k = 0; k < done.size(); ++k) column[k] = value_at(done[k]->best, i);
    double sum = 0.0;
    for (const double v : column) sum += v;
    out.mean.push_back(sum / static_cast<double>(column.size()));
    out.median.push_back(median_of(column));
    const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
    out.lowest.push_back(*lo);
    out.highest.push_back(*hi);
    for (std::size_t k = 0; k < done.size(); ++k) column[k] = value_at(done[k]->raw, i);
    sum = 0.0;
    for (const double v : column) sum += v;
    out.raw_mean.push_back(sum / static_cast<double>(column.size()));
    out.raw_median.push_back(median_of(column));
  }
  return out;
}

void CampaignConfig::validate() const {
  if (optimizers.empty()) throw std::invalid_argument("campaign: no optimizers");
  if (num_seeds < 1) throw std::invalid_argument("campaign: num_seeds must be >= 1");
  if (eval_budget < 1) throw std::invalid_argument("campaign: eval_budget must be >= 1");
  if (!(detuning_fraction >= 0.0 && detuning_fraction < 1.0)) {
    throw std::invalid_argument("campaign: detuning_fraction must lie in [0, 1)");
  }
  for (const auto& hp : optimizers) orbitcal::validate(hp);
}

std::uint64_t campaign_run_seed(std::uint64_t campaign_seed, std::size_t index) {
  return derive_seed(campaign_seed, "run", index);
}

CampaignResult run_campaign(const CampaignConfig& cfg, const Problem& problem,
                            const ProgressFn& progress) {
  cfg.validate();
  const std::size_t jobs = cfg.optimizers.size() * cfg.num_seeds;
  CampaignResult result;
  result.budget = cfg.eval_budget;
  result.records.resize(jobs);
  std::atomic<std::size_t> next{0};
  std::mutex report;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const std::size_t opt_index = j / cfg.num_seeds;
      const std::size_t seed_index = j % cfg.num_seeds;
      const Hyperparams& hp = cfg.optimizers[opt_index];
      const std::uint64_t seed = campaign_run_seed(cfg.seed, seed_index);
      RunRecord rec;
      try {
        rec = run_single(hp, problem, seed, RunOptions{cfg.eval_budget, cfg.detuning_fraction, 1});
      } catch (const std::exception& e) {
        rec.optimizer = std::string(to_string(algorithm_of(hp)));
        rec.seed = seed;
        rec.hyperparams = hp;
        rec.termination = std::string("error: ") + e.what();
      }
      rec.seed_index = seed_index;
      result.records[j] = std::move(rec);
      if (progress) {
        const std::lock_guard lock(report);
        progress(result.records[j]);
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.workers, jobs));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t o = 0; o < cfg.optimizers.size(); ++o) {
    const auto first = result.records.begin() + static_cast<std::ptrdiff_t>(o * cfg.num_seeds);
    const std::vector<RunRecord> group(first, first + static_cast<std::ptrdiff_t>(cfg.num_seeds));
    AggregateCurve curve;
    try {
      curve = aggregate_stats(group, cfg.eval_budget);
    } catch (const std::invalid_argument&) {
      curve.optimizer = std::string(to_string(algorithm_of(cfg.optimizers[o])));
      curve.expected = cfg.num_seeds;
    }
    result.curves.push_back(std::move(curve));
  }
  return result;
}

void write_runs_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  os << "optimizer,seed,eval_index,raw_loss,best_loss\n";
  for (const auto& r : records) {
    for (std::size_t i = 0; i < r.raw.size(); ++i) {
      os << csv_field(r.optimizer) << ',' << r.seed_index << ',' << i + 1 << ','
         << format_number(r.raw[i]) << ',' << format_number(r.best[i]) << '\n';
    }
  }
}

void write_run_csv(std::ostream& os, const RunRecord& r) {
  os << "eval_index,raw_loss,best_loss\n";
  for (std::size_t i = 0; i < r.raw.size(); ++i) {
    os << i + 1 << ',' << format_number(r.raw[i]) << ',' << format_number(r.best[i]) << '\n';
  }
}

void write_summary_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  os << "optimizer,seed,run_seed,start_loss,final_best_loss,evaluations,clamps,warnings,"
        "termination\n";
  for (const auto& r : records) {
    os << csv_field(r.optimizer) << ',' << r.seed_index << ',' << r.seed << ','
       << format_number(r.start_loss) << ','
       << (r.best.empty() ? std::string("nan") : format_number(r.best.back())) << ','
       << r.raw.size() << ',' << r.clamps << ',' << r.warnings << ',' << csv_field(r.termination)
       << '\n';
  }
}

void write_aggregate_csv(std::ostream& os, const std::vector<AggregateCurve>& curves, bool raw) {
  os << "optimizer,eval_index,mean,median\n";
  for (const auto& c : curves) {
    const auto& mean = raw ? c.raw_mean : c.mean;
    const auto& median = raw ? c.raw_median : c.median;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      os << csv_field(c.optimizer) << ',' << i + 1 << ',' << format_number(mean[i]) << ','
         << format_number(median[i]) << '\n';
    }
  }
}

void write_diagnostics_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  os << "optimizer,seed,iteration,sigma,temperature,simplex_volume,condition_number\n";
  for (const auto& r : records) {
    for (const auto& d : r.diagnostics) {
      os << csv_field(r.optimizer) << ',' << r.seed_index << ',' << d.iteration << ','
         << format_number(d.sigma) << ',' << format_number(d.temperature) << ','
         << format_number(d.simplex_volume) << ',' << format_number(d.condition_number) << '\n';
    }
  }
}

std::vector<AggregateCurve> read_aggregate_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("aggregate csv: empty input");
  const auto header = split_csv_line(line);
  if (header != std::vector<std::string>{"optimizer", "eval_index", "mean", "median"}) {
    throw std::invalid_argument("aggregate csv: unexpected header '" + line + "'");
  }
  std::vector<AggregateCurve> curves;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) {
      throw std::invalid_argument("aggregate csv: row " + std::to_string(row) + " has " +
                                  std::to_string(f.size()) + " fields");
    }
    if (curves.empty() || curves.back().optimizer != f[0]) {
      curves.push_back(AggregateCurve{});
      curves.back().optimizer = f[0];
    }
    auto& c = curves.back();
    const auto index = static_cast<std::size_t>(parse_number(f[1]));
    if (index != c.mean.size() + 1) {
      throw std::invalid_argument("aggregate csv: row " + std::to_string(row) +
                                  " breaks the eval_index sequence");
    }
    c.mean.push_back(parse_number(f[2]));
    c.median.push_back(parse_number(f[3]));
  }
  return curves;
}

void write_convergence_svg(std::ostream& os, const std::vector<AggregateCurve>& curves,
                           bool median, const std::string& title, const std::string& y_label) {
  LineChart chart;
  chart.title = title;
  chart.x_label = "function evaluations";
  chart.y_label = y_label;
  for (const auto& c : curves) {
    Series s;
    s.label = c.optimizer;
    const auto& y = median ? c.median : c.mean;
    // Thin long curves to at most ~2000 vertices; keep the final point.
    const std::size_t stride = std::max<std::size_t>(1, y.size() / 2000);
    for (std::size_t i = 0; i < y.size(); i += stride) {
      s.x.push_back(static_cast<double>(i + 1));
      s.y.push_back(y[i]);
    }
    if (!y.empty() && (y.size() - 1) % stride != 0) {
      s.x.push_back(static_cast<double>(y.size()));
      s.y.push_back(y.back());
    }
    chart.series.push_back(std::move(s));
  }
  write_line_svg(os, chart);
}

std::vector<std::filesystem::path> export_results(const CampaignResult& result,
                                                  const std::string& problem_name,
                                                  const std::filesystem::path& dir,
                                                  const std::string& manifest) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const auto& write) {
    const auto path = dir / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    write(os);
    os.flush();
    if (!os) throw std::runtime_error("write failed: " + path.string());
    written.push_back(path);
  };
  std::vector<AggregateCurve> complete;
  for (const auto& c : result.curves) {
    if (c.completed > 0) complete.push_back(c);
  }
  emit("runs.csv", [&](std::ostream& os) { write_runs_csv(os, result.records); });
  emit("summary.csv", [&](std::ostream& os) { write_summary_csv(os, result.records); });
  emit("aggregate.csv", [&](std::ostream& os) { write_aggregate_csv(os, complete, false); });
  emit("aggregate_raw.csv", [&](std::ostream& os) { write_aggregate_csv(os, complete, true); });
  emit("diagnostics.csv", [&](std::ostream& os) { write_diagnostics_csv(os, result.records); });
  emit("convergence_mean.svg", [&](std::ostream& os) {
    write_convergence_svg(os, complete, false, problem_name + ": mean best loss", "loss");
  });
  emit("convergence_median.svg", [&](std::ostream& os) {
    write_convergence_svg(os, complete, true, problem_name + ": median best loss", "loss");
  });
  emit("manifest.toml", [&](std::ostream& os) { os << manifest; });
  return written;
}

}  // namespace orbitcal
