#pragma once

// Seeded single runs, multi-seed campaigns, aggregation and result files.
//
// A run seed names three streams: "detuning" (the start point), "optimizer"
// (the algorithm's own draws) and "noise" (shots / resampled sequences).

#include "orbitcal/optimizers.hpp"
#include "orbitcal/problem.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace orbitcal {

/// nominal_i (1 + fraction s_i) with random signs s_i; parameters that are
/// zero or flagged as offsets move by fraction * (upper - lower) instead.
/// The result is clamped into the box.
Vector detuned_start(const Problem& problem, double fraction, std::uint64_t seed);
Vector detuned_start(std::span<const double> nominal, std::span<const double> lower,
                     std::span<const double> upper, const std::vector<bool>& offset,
                     double fraction, std::uint64_t seed);

struct RunRecord {
  std::string optimizer;  ///< algorithm tag
  std::size_t seed_index = 0;
  std::uint64_t seed = 0;
  Hyperparams hyperparams;
  Vector start;  ///< physical
  double start_loss = 0.0;
  std::vector<double> raw;   ///< loss of every evaluation in call order
  std::vector<double> best;  ///< running minimum of raw
  Vector best_x;             ///< physical
  std::size_t clamps = 0;
  std::size_t warnings = 0;
  std::vector<Diagnostics> diagnostics;  ///< one per told batch
  std::string termination;               ///< "budget" or "error: ..."
  double wall_time = 0.0;

  bool ok() const { return termination == "budget"; }
};

struct RunOptions {
  std::size_t budget = 1000;
  double detuning_fraction = 0.05;
  std::size_t workers = 1;  ///< threads evaluating one batch
};

/// Fresh optimizer in the problem's unit box, evaluated until `budget` calls;
/// the last batch is truncated and never told.
RunRecord run_single(const Hyperparams& hp, const Problem& problem, std::uint64_t seed,
                     const RunOptions& opt);

struct AggregateCurve {
  std::string optimizer;
  std::vector<double> mean, median;          ///< best-so-far, index 0 is eval 1
  std::vector<double> raw_mean, raw_median;  ///< raw losses
  std::vector<double> lowest, highest;       ///< per-index extremes of best-so-far
  std::size_t completed = 0, expected = 0;
};

/// Pointwise statistics on the grid 1..budget; short curves are extended by
/// their last value. Throws on empty input.
AggregateCurve aggregate_stats(const std::vector<RunRecord>& records, std::size_t budget);

double median_of(std::vector<double> v);

struct CampaignConfig {
  std::vector<Hyperparams> optimizers;
  std::size_t num_seeds = 20;
  std::size_t eval_budget = 1000;
  double detuning_fraction = 0.05;
  std::uint64_t seed = 1;
  std::size_t workers = 1;

  void validate() const;
};

struct CampaignResult {
  std::vector<RunRecord> records;  ///< sorted by (optimizer order, seed index)
  std::vector<AggregateCurve> curves;
  std::size_t budget = 0;
};

/// Run seed of seed index i in a campaign.
std::uint64_t campaign_run_seed(std::uint64_t campaign_seed, std::size_t index);

using ProgressFn = std::function<void(const RunRecord&)>;

/// Every (optimizer, seed) job on a pool of cfg.workers threads. Seed index i
/// uses the same start point for every optimizer. Failed runs are kept with
/// their error and left out of the aggregates.
CampaignResult run_campaign(const CampaignConfig& cfg, const Problem& problem,
                            const ProgressFn& progress = {});

void write_runs_csv(std::ostream& os, const std::vector<RunRecord>& records);
void write_summary_csv(std::ostream& os, const std::vector<RunRecord>& records);
void write_aggregate_csv(std::ostream& os, const std::vector<AggregateCurve>& curves, bool raw);
void write_diagnostics_csv(std::ostream& os, const std::vector<RunRecord>& records);
void write_run_csv(std::ostream& os, const RunRecord& record);

/// Aggregate CSV back into curves (mean/median only).
std::vector<AggregateCurve> read_aggregate_csv(std::istream& is);

/// Mean or median curves, one polyline per optimizer.
void write_convergence_svg(std::ostream& os, const std::vector<AggregateCurve>& curves,
                           bool median, const std::string& title, const std::string& y_label);

/// runs.csv, summary.csv, aggregate.csv, aggregate_raw.csv, diagnostics.csv,
/// convergence_mean.svg, convergence_median.svg and manifest.toml (given text).
/// Returns the written paths.
std::vector<std::filesystem::path> export_results(const CampaignResult& result,
                                                  const std::string& problem_name,
                                                  const std::filesystem::path& dir,
                                                  const std::string& manifest);

}  // namespace orbitcal
