#include "orbitcal/hyperopt.hpp"

#include "orbitcal/plot.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace orbitcal {

namespace {

constexpr double kLinearFloor = 1e-300;
constexpr int kMetaPopulation = 6;
constexpr double kMetaSigma = 0.3;

double to_axis(const MetaAxis& a, double unit) {
  const double u = std::clamp(unit, 0.0, 1.0);
  double v = a.log ? std::exp(std::log(a.lower) + u * (std::log(a.upper) - std::log(a.lower)))
                   : a.lower + u * (a.upper - a.lower);
  if (a.integer) v = std::round(v);
  return std::clamp(v, a.lower, a.upper);
}

double from_axis(const MetaAxis& a, double v) {
  v = std::clamp(v, a.lower, a.upper);
  if (a.log) return (std::log(v) - std::log(a.lower)) / (std::log(a.upper) - std::log(a.lower));
  return (v - a.lower) / (a.upper - a.lower);
}

}  // namespace

void RatingConfig::validate() const {
  if (tail_length < 2) throw std::invalid_argument("rating: tail_length must be >= 2");
  if (num_seeds < 1) throw std::invalid_argument("rating: num_seeds must be >= 1");
  if (inner_budget <= tail_length) {
    throw std::invalid_argument("rating: inner_budget must exceed tail_length");
  }
}

double tail_score(std::span<const double> linear_losses, std::size_t tail) {
  if (tail < 1 || linear_losses.size() < tail) {
    throw std::invalid_argument("tail_score: fewer evaluations than the tail length");
  }
  double sum = 0.0;
  for (std::size_t i = linear_losses.size() - tail; i < linear_losses.size(); ++i) {
    sum += linear_losses[i];
  }
  return std::log(sum / static_cast<double>(tail));
}

double slope_score(std::span<const double> y) {
  const std::size_t k = y.size();
  if (k < 2) throw std::invalid_argument("slope_score: need at least 2 points");
  const double n = static_cast<double>(k);
  const double x_mean = (n - 1.0) / 2.0;
  double y_mean = 0.0;
  for (const double v : y) y_mean += v;
  y_mean /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double dx = static_cast<double>(i) - x_mean;
    sxy += dx * (y[i] - y_mean);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

std::vector<double> linear_losses(const RunRecord& r, bool log_scale) {
  std::vector<double> out(r.raw.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = log_scale ? std::exp(r.raw[i]) : r.raw[i];
  return out;
}

std::vector<double> log_losses(const RunRecord& r, bool log_scale) {
  if (log_scale) return r.raw;
  std::vector<double> out(r.raw.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(std::max(r.raw[i], kLinearFloor));
  return out;
}

Rating rate_hyperparameters(const Hyperparams& hp, const RatingConfig& rc, const Problem& problem,
                            std::uint64_t base_seed, double detuning_fraction,
                            std::size_t workers) {
  rc.validate();
  Rating out;
  try {
    orbitcal::validate(hp);
  } catch (const std::exception& e) {
    out.total = std::numeric_limits<double>::infinity();
    out.diagnostic = e.what();
    return out;
  }
  std::vector<RunRecord> runs(rc.num_seeds);
  std::vector<std::string> errors(rc.num_seeds);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < rc.num_seeds; k = next++) {
      try {
        runs[k] = run_single(hp, problem, base_seed + k,
                             RunOptions{rc.inner_budget, detuning_fraction, 1});
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(workers, rc.num_seeds));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t k = 0; k < rc.num_seeds; ++k) {
    if (!errors[k].empty()) {
      out.total = std::numeric_limits<double>::infinity();
      out.diagnostic = "seed " + std::to_string(base_seed + k) + ": " + errors[k];
      return out;
    }
    const double m = slope_score(log_losses(runs[k], problem.log_scale()));
    const double e = tail_score(linear_losses(runs[k], problem.log_scale()), rc.tail_length);
    out.slopes.push_back(m);
    out.tails.push_back(e);
    out.slope_sum += m;
    out.tail_sum += e;
    out.final_losses.push_back(runs[k].best.back());
  }
  out.total = rc.slope_weight * out.slope_sum + rc.final_weight * out.tail_sum;
  return out;
}

std::vector<MetaAxis> meta_axes(Algorithm a) {
  const MetaAxis sigma{"initial_sigma", 1e-4, 3.0, true, false};
  switch (a) {
    case Algorithm::CmaEs:
      return {sigma, {"population_size", 2.0, 64.0, true, true}};
    case Algorithm::NelderMead:
    case Algorithm::OnePlusOneEs:
      return {sigma};
    case Algorithm::Powell:
      throw std::invalid_argument("no tunable hyperparameters");
    case Algorithm::DifferentialEvolution:
      // The population range starts at 4, the smallest size DE/rand/1 accepts.
      return {sigma,
              {"population_size", 4.0, 64.0, true, true},
              {"crossover_rate", 0.0, 1.0, false, false},
              {"differential_weight", 0.1, 1.9, false, false}};
    case Algorithm::SimulatedAnnealing:
      return {{"initial_temperature", 1e-4, 10.0, true, false},
              {"decay_rate", 0.8, 0.9999, false, false},
              sigma};
  }
  throw std::invalid_argument("unknown algorithm");
}

Vector hyperparam_values(const Hyperparams& hp) {
  return std::visit(
      [](const auto& p) -> Vector {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, CmaEsParams>) {
          // An automatic population is reported as the size it resolves to
          // for a 3-parameter problem only if set; keep 0 visible otherwise.
          return {p.initial_sigma, static_cast<double>(p.population_size)};
        } else if constexpr (std::is_same_v<P, NelderMeadParams> ||
                             std::is_same_v<P, OnePlusOneParams>) {
          return {p.initial_sigma};
        } else if constexpr (std::is_same_v<P, PowellParams>) {
          return {};
        } else if constexpr (std::is_same_v<P, DifferentialEvolutionParams>) {
          return {p.initial_sigma, static_cast<double>(p.population_size), p.crossover_rate,
                  p.differential_weight};
        } else {
          return {p.initial_temperature, p.decay_rate, p.initial_sigma};
        }
      },
      hp);
}

Hyperparams decode_hyperparams(const Hyperparams& base, std::span<const double> unit) {
  const auto axes = meta_axes(algorithm_of(base));
  if (unit.size() != axes.size()) throw std::invalid_argument("decode: wrong dimension");
  Vector v(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) v[i] = to_axis(axes[i], unit[i]);
  Hyperparams out = base;
  std::visit(
      [&](auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, CmaEsParams>) {
          p.initial_sigma = v[0];
          p.population_size = static_cast<int>(v[1]);
        } else if constexpr (std::is_same_v<P, NelderMeadParams> ||
                             std::is_same_v<P, OnePlusOneParams>) {
          p.initial_sigma = v[0];
        } else if constexpr (std::is_same_v<P, DifferentialEvolutionParams>) {
          p.initial_sigma = v[0];
          p.population_size = static_cast<int>(v[1]);
          p.crossover_rate = v[2];
          p.differential_weight = v[3];
        } else if constexpr (std::is_same_v<P, SimulatedAnnealingParams>) {
          p.initial_temperature = v[0];
          p.decay_rate = v[1];
          p.initial_sigma = v[2];
        }
      },
      out);
  orbitcal::validate(out);
  return out;
}

Vector encode_hyperparams(const Hyperparams& hp) {
  const auto axes = meta_axes(algorithm_of(hp));
  const Vector v = hyperparam_values(hp);
  Vector u(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) u[i] = from_axis(axes[i], v[i]);
  return u;
}

MetaResult meta_optimize(const Hyperparams& start, const RatingConfig& rc, const Problem& problem,
                         std::size_t meta_budget, std::uint64_t seed, std::uint64_t base_seed,
                         double detuning_fraction, std::size_t workers,
                         const MetaProgressFn& progress) {
  const Algorithm alg = algorithm_of(start);
  const auto axes = meta_axes(alg);
  rc.validate();
  if (meta_budget < 1) throw std::invalid_argument("meta budget must be >= 1");

  Hyperparams first = start;
  if (const auto* c = std::get_if<CmaEsParams>(&first); c && c->population_size == 0) {
    std::get<CmaEsParams>(first).population_size = cmaes_population(*c, problem.dimension());
  }
  MetaResult result;
  auto record = [&](const Hyperparams& hp) {
    MetaEvaluation ev;
    ev.index = result.trace.size();
    ev.hp = hp;
    ev.rating = rate_hyperparameters(hp, rc, problem, base_seed, detuning_fraction, workers);
    if (result.trace.empty() || ev.rating.total < result.best_rating.total) {
      result.best = hp;
      result.best_rating = ev.rating;
    }
    if (progress) progress(ev);
    result.trace.push_back(std::move(ev));
    return result.trace.back().rating.total;
  };
  record(first);

  CmaEs meta(CmaEsParams{kMetaPopulation, kMetaSigma}, encode_hyperparams(first),
             Bounds::unit(axes.size()), derive_seed(seed, "meta"));
  while (result.trace.size() < meta_budget) {
    const auto batch = meta.ask();
    std::vector<double> scores;
    for (const auto& u : batch) {
      if (result.trace.size() >= meta_budget) break;
      scores.push_back(record(decode_hyperparams(first, u)));
    }
    if (scores.size() < batch.size()) break;
    meta.tell(batch, scores);
  }
  return result;
}

void write_meta_trace_csv(std::ostream& os, const MetaResult& result) {
  if (result.trace.empty()) return;
  const auto axes = meta_axes(algorithm_of(result.trace.front().hp));
  os << "meta_eval_index";
  for (const auto& a : axes) os << ',' << a.name;
  os << ",rating,slope_sum,tail_sum\n";
  for (const auto& ev : result.trace) {
    os << ev.index;
    for (const double v : hyperparam_values(ev.hp)) os << ',' << format_number(v);
    os << ',' << format_number(ev.rating.total) << ',' << format_number(ev.rating.slope_sum) << ','
       << format_number(ev.rating.tail_sum) << '\n';
  }
}

}  // namespace orbitcal
