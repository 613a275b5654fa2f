#pragma once

// Gradient-free optimizers behind one ask/tell interface.
//
// The caller owns evaluation: ask() yields a batch of candidates, the caller
// evaluates them (possibly in parallel) and passes the losses back through
// tell(). Candidates are always inside the box bounds; anything an algorithm
// proposes outside is clamped and counted.

#include "orbitcal/detail/search_task.hpp"
#include "orbitcal/rng.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace orbitcal {

using Vector = std::vector<double>;

struct Bounds {
  Vector lower;
  Vector upper;

  static Bounds unit(std::size_t dim) { return {Vector(dim, 0.0), Vector(dim, 1.0)}; }
  static Bounds uniform(std::size_t dim, double lo, double hi) {
    return {Vector(dim, lo), Vector(dim, hi)};
  }
  std::size_t dimension() const { return lower.size(); }
  void validate() const;
};

/// Coordinate-wise clamp. Adds the number of moved coordinates to *counter.
Vector clamp_to_bounds(std::span<const double> x, const Bounds& b, std::size_t* counter = nullptr);

enum class Algorithm { CmaEs, NelderMead, Powell, OnePlusOneEs, DifferentialEvolution, SimulatedAnnealing };

inline constexpr std::array<Algorithm, 6> kAllAlgorithms = {
    Algorithm::CmaEs,        Algorithm::NelderMead,          Algorithm::Powell,
    Algorithm::OnePlusOneEs, Algorithm::DifferentialEvolution, Algorithm::SimulatedAnnealing};

std::string_view to_string(Algorithm a);
/// Accepts the tags produced by to_string(). Throws on anything else.
Algorithm algorithm_from_string(std::string_view tag);

struct CmaEsParams {
  int population_size = 0;  ///< 0 selects 4 + floor(3 ln dim)
  double initial_sigma = 0.3;
};
struct NelderMeadParams {
  double initial_sigma = 0.1;
};
struct PowellParams {};
struct OnePlusOneParams {
  double initial_sigma = 0.1;
};
struct DifferentialEvolutionParams {
  double initial_sigma = 0.1;
  int population_size = 15;
  double crossover_rate = 0.9;
  double differential_weight = 0.8;
};
enum class CoolingSchedule { Exponential, Logarithmic };
std::string_view to_string(CoolingSchedule s);
CoolingSchedule cooling_schedule_from_string(std::string_view s);
struct SimulatedAnnealingParams {
  CoolingSchedule schedule = CoolingSchedule::Exponential;
  double initial_temperature = 1.0;
  double decay_rate = 0.99;
  double initial_sigma = 0.1;
};

using Hyperparams = std::variant<CmaEsParams, NelderMeadParams, PowellParams, OnePlusOneParams,
                                 DifferentialEvolutionParams, SimulatedAnnealingParams>;

Algorithm algorithm_of(const Hyperparams& hp);
Hyperparams default_hyperparams(Algorithm a);
/// Throws std::invalid_argument when an invariant is violated.
void validate(const Hyperparams& hp);
/// Effective CMA-ES population for a dimension.
int cmaes_population(const CmaEsParams& p, std::size_t dim);

/// Per-iteration internals; fields that do not apply are NaN.
struct Diagnostics {
  std::size_t iteration = 0;
  double sigma = std::numeric_limits<double>::quiet_NaN();
  double temperature = std::numeric_limits<double>::quiet_NaN();
  double simplex_volume = std::numeric_limits<double>::quiet_NaN();
  double condition_number = std::numeric_limits<double>::quiet_NaN();
};

class AskTellOptimizer {
 public:
  AskTellOptimizer(Algorithm algorithm, std::span<const double> x0, Bounds bounds);
  virtual ~AskTellOptimizer() = default;
  AskTellOptimizer(const AskTellOptimizer&) = delete;
  AskTellOptimizer& operator=(const AskTellOptimizer&) = delete;

  Algorithm algorithm() const { return algorithm_; }
  std::size_t dimension() const { return bounds_.dimension(); }
  const Bounds& bounds() const { return bounds_; }

  /// Next batch (size >= 1). Throws std::logic_error if the previous batch
  /// has not been told.
  const std::vector<Vector>& ask();
  /// Losses for exactly the last asked batch, in order.
  void tell(const std::vector<Vector>& candidates, std::span<const double> losses);

  /// Best told candidate. Throws std::logic_error before the first tell.
  const Vector& recommend() const;
  double best_loss() const { return best_loss_; }
  std::size_t evals_used() const { return evals_; }
  std::size_t clamp_count() const { return clamps_; }
  std::size_t warning_count() const { return warnings_; }
  virtual Diagnostics diagnostics() const = 0;

 protected:
  virtual std::vector<Vector> next_batch() = 0;
  virtual void absorb(std::span<const double> losses) = 0;

  Vector clamp(std::span<const double> x) { return clamp_to_bounds(x, bounds_, &clamps_); }
  void flag_warning() { ++warnings_; }
  const Vector& start() const { return x0_; }

 private:
  Algorithm algorithm_;
  Bounds bounds_;
  Vector x0_;
  std::vector<Vector> pending_;
  bool awaiting_tell_ = false;
  Vector best_;
  double best_loss_ = std::numeric_limits<double>::infinity();
  std::size_t evals_ = 0;
  std::size_t clamps_ = 0;
  std::size_t warnings_ = 0;
};

/// CMA-ES with weighted recombination of the best floor(lambda/2), cumulative
/// step-size adaptation and rank-one plus rank-mu covariance updates.
class CmaEs final : public AskTellOptimizer {
 public:
  CmaEs(const CmaEsParams& p, std::span<const double> x0, Bounds bounds, std::uint64_t seed);
  Diagnostics diagnostics() const override;
  double sigma() const { return sigma_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }

 private:
  std::vector<Vector> next_batch() override;
  void absorb(std::span<const double> losses) override;
  void update_eigensystem();

  Rng rng_;
  int lambda_, mu_;
  Eigen::VectorXd weights_;
  double mu_eff_, c_sigma_, d_sigma_, c_c_, c_1_, c_mu_, chi_n_;
  Eigen::VectorXd mean_, p_sigma_, p_c_;
  Eigen::MatrixXd cov_, basis_, inv_sqrt_;
  Eigen::VectorXd scales_;
  double sigma_;
  std::size_t generation_ = 0;
  std::vector<Eigen::VectorXd> samples_;
};

/// Nelder-Mead with dimension-adaptive coefficients; ties rank the older
/// vertex first, so a flat simplex ends in a shrink.
class NelderMead final : public AskTellOptimizer {
 public:
  NelderMead(const NelderMeadParams& p, std::span<const double> x0, Bounds bounds,
             std::uint64_t seed);
  Diagnostics diagnostics() const override;

  enum class Step { Init, Reflect, Expand, ContractOutside, ContractInside, Shrink, Reinit };
  Step last_step() const { return last_step_; }
  std::size_t reinitializations() const { return reinits_; }

 private:
  std::vector<Vector> next_batch() override;
  void absorb(std::span<const double> losses) override;
  detail::Task<void> run();
  detail::Task<void> evaluate_vertices(std::vector<std::size_t> which);
  double normalized_volume() const;

  double sigma_;
  std::vector<Vector> vertices_;
  std::vector<double> values_;
  std::vector<std::uint64_t> ages_;
  std::uint64_t next_age_ = 0;
  std::size_t iteration_ = 0;
  std::size_t reinits_ = 0;
  Step last_step_ = Step::Init;
  detail::EvalChannel channel_;
  detail::Task<void> routine_;
};

/// Powell's conjugate-direction method. Each line search brackets the minimum
/// and refines it with golden-section steps (parabolic steps accepted when they
/// fall inside the bracket), to 1e-8 relative tolerance or 50 probes.
class Powell final : public AskTellOptimizer {
 public:
  Powell(std::span<const double> x0, Bounds bounds, std::uint64_t seed);
  Diagnostics diagnostics() const override;

  /// One record per completed direction cycle.
  struct Cycle {
    std::vector<double> decreases;  ///< per direction, in the order searched
    int discarded = -1;             ///< index dropped from the set, -1 if kept
  };
  const std::vector<Cycle>& cycles() const { return cycles_; }
  const std::vector<Vector>& directions() const { return dirs_; }

  static constexpr double kLineTolerance = 1e-8;
  static constexpr int kMaxLineProbes = 50;

 private:
  struct LinePoint {
    Vector x;
    double f;
  };
  std::vector<Vector> next_batch() override;
  void absorb(std::span<const double> losses) override;
  detail::Task<void> run();
  detail::Task<LinePoint> line_minimize(LinePoint from, Vector dir);
  detail::Task<double> probe(Vector x);

  std::vector<Vector> dirs_;
  std::vector<Cycle> cycles_;
  std::size_t iteration_ = 0;
  detail::EvalChannel channel_;
  detail::Task<void> routine_;
};

/// (1+1)-ES with the 1/5th success rule.
class OnePlusOneEs final : public AskTellOptimizer {
 public:
  OnePlusOneEs(const OnePlusOneParams& p, std::span<const double> x0, Bounds bounds,
               std::uint64_t seed);
  Diagnostics diagnostics() const override;
  double sigma() const { return sigma_; }
  const Vector& parent() const { return parent_; }
  double parent_loss() const { return parent_loss_; }
  std::size_t successes() const { return successes_; }

 private:
  std::vector<Vector> next_batch() override;
  void absorb(std::span<const double> losses) override;

  Rng rng_;
  double sigma_;
  double c_;
  Vector parent_, child_;
  double parent_loss_ = std::numeric_limits<double>::infinity();
  bool initialized_ = false;
  std::size_t steps_ = 0, successes_ = 0;
};

/// DE/rand/1/bin with greedy replacement; every ask is a whole generation.
class DifferentialEvolution final : public AskTellOptimizer {
 public:
  DifferentialEvolution(const DifferentialEvolutionParams& p, std::span<const double> x0,
                        Bounds bounds, std::uint64_t seed);
  Diagnostics diagnostics() const override;
  const std::vector<Vector>& population() const { return population_; }
  const std::vector<double>& fitness() const { return fitness_; }

 private:
  std::vector<Vector> next_batch() override;
  void absorb(std::span<const double> losses) override;

  DifferentialEvolutionParams p_;
  Rng rng_;
  std::vector<Vector> population_, trials_;
  std::vector<double> fitness_;
  bool initialized_ = false;
  std::size_t generation_ = 0;
};

/// Metropolis acceptance: delta <= 0, or u < exp(-delta / T).
bool annealing_accepts(double delta, double temperature, double u);

/// Simulated annealing with Gaussian proposals; the proposal width follows the
/// acceptance ratio over windows of 50 steps.
class SimulatedAnnealing final : public AskTellOptimizer {
 public:
  SimulatedAnnealing(const SimulatedAnnealingParams& p, std::span<const double> x0, Bounds bounds,
                     std::uint64_t seed);
  Diagnostics diagnostics() const override;
  double temperature() const;
  double sigma() const { return sigma_; }
  std::size_t worse_accepted() const { return worse_accepted_; }
  const Vector& current() const { return current_; }

  static constexpr std::size_t kWindow = 50;

 private:
  std::vector<Vector> next_batch() override;
  void absorb(std::span<const double> losses) override;

  SimulatedAnnealingParams p_;
  Rng rng_;
  double sigma_;
  Vector current_, proposal_;
  double current_loss_ = std::numeric_limits<double>::infinity();
  bool initialized_ = false;
  std::size_t step_ = 0, window_accepted_ = 0, window_steps_ = 0, worse_accepted_ = 0;
};

std::unique_ptr<AskTellOptimizer> make_optimizer(const Hyperparams& hp, std::span<const double> x0,
                                                 const Bounds& bounds, std::uint64_t seed);

}  // namespace orbitcal
