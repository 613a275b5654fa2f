#pragma once

// Rating a hyperparameter setting by repeated seeded runs, and tuning it with
// an outer CMA-ES.
//
// Per run n: r_n = s * m_n + g * e_n, where m_n is the least-squares slope of
// ln(loss) against the evaluation index over the whole run and e_n is the log
// of the mean of the last l losses. Both work on linear-scale losses; an
// ORBIT loss is already ln(infidelity), so it is exponentiated first.

#include "orbitcal/harness.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace orbitcal {

struct RatingConfig {
  double slope_weight = 100.0;
  double final_weight = 1.0;
  std::size_t tail_length = 50;
  std::size_t num_seeds = 20;
  std::size_t inner_budget = 500;

  void validate() const;
};

/// ln of the arithmetic mean of the last `tail` values. Throws if too few.
double tail_score(std::span<const double> linear_losses, std::size_t tail);
/// Least-squares slope of y against 0..k-1. Throws for fewer than 2 points.
double slope_score(std::span<const double> log_losses);

/// Linear-scale losses of a run (exp of ORBIT losses, analytic values as is).
std::vector<double> linear_losses(const RunRecord& r, bool log_scale);
/// ln(loss) of a run; analytic values are floored at 1e-300 before the log.
std::vector<double> log_losses(const RunRecord& r, bool log_scale);

struct Rating {
  double total = 0.0;  ///< s * slope_sum + g * tail_sum, +inf on failure
  double slope_sum = 0.0;
  double tail_sum = 0.0;
  std::vector<double> slopes, tails;
  std::vector<double> final_losses;  ///< best-so-far at the end of each run
  std::string diagnostic;            ///< set when the rating failed
};

/// Runs seeds base_seed .. base_seed + n - 1 with the inner budget.
Rating rate_hyperparameters(const Hyperparams& hp, const RatingConfig& rc, const Problem& problem,
                            std::uint64_t base_seed, double detuning_fraction = 0.05,
                            std::size_t workers = 1);

/// One axis of the tuning box. Log axes are searched in log space; integer
/// axes are rounded before use.
struct MetaAxis {
  std::string name;
  double lower, upper;
  bool log;
  bool integer;
};

/// Throws std::invalid_argument("no tunable hyperparameters") for Powell.
std::vector<MetaAxis> meta_axes(Algorithm a);
/// Unit-box point to a valid hyperparameter set (rounded and clamped);
/// settings outside the box (SA schedule) come from `base`.
Hyperparams decode_hyperparams(const Hyperparams& base, std::span<const double> unit);
/// Inverse of decode_hyperparams, clamped into the box.
Vector encode_hyperparams(const Hyperparams& hp);
/// Values of the tuned fields in meta_axes() order.
Vector hyperparam_values(const Hyperparams& hp);

struct MetaEvaluation {
  std::size_t index = 0;
  Hyperparams hp;
  Rating rating;
};

struct MetaResult {
  Hyperparams best;
  Rating best_rating;
  std::vector<MetaEvaluation> trace;
};

using MetaProgressFn = std::function<void(const MetaEvaluation&)>;

/// The first meta-evaluation rates `start`; then a CMA-ES (6 per batch,
/// sigma 0.3 in the unit box) proposes the rest. Returns the lowest rating.
MetaResult meta_optimize(const Hyperparams& start, const RatingConfig& rc, const Problem& problem,
                         std::size_t meta_budget, std::uint64_t seed, std::uint64_t base_seed,
                         double detuning_fraction = 0.05, std::size_t workers = 1,
                         const MetaProgressFn& progress = {});

/// meta_eval_index, one column per axis, rating, slope_sum, tail_sum.
void write_meta_trace_csv(std::ostream& os, const MetaResult& result);

}  // namespace orbitcal
