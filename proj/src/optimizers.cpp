#include "orbitcal/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace orbitcal {

namespace {

Eigen::VectorXd to_eigen(std::span<const double> x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

Vector to_std(const Eigen::VectorXd& v) { return Vector(v.data(), v.data() + v.size()); }

double sanitize(double f) { return std::isnan(f) ? std::numeric_limits<double>::infinity() : f; }

std::vector<std::size_t> rank_order(std::span<const double> losses) {
  std::vector<std::size_t> order(losses.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });
  return order;
}

Vector gaussian_step(const Vector& x, double sigma, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + sigma * normal(rng);
  return y;
}

detail::Task<double> evaluate_one(detail::EvalChannel& channel, Vector x) {
  std::vector<Vector> batch;
  batch.push_back(std::move(x));
  const std::vector<double> f = co_await detail::evaluate(channel, std::move(batch));
  co_return f.front();
}

}  // namespace

// ---------------------------------------------------------------- common ---

void Bounds::validate() const {
  if (lower.size() != upper.size() || lower.empty()) {
    throw std::invalid_argument("bounds: dimension mismatch or empty");
  }
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] <= upper[i])) {
      throw std::invalid_argument("bounds: need finite lower <= upper");
    }
  }
}

Vector clamp_to_bounds(std::span<const double> x, const Bounds& b, std::size_t* counter) {
  if (x.size() != b.dimension()) throw std::invalid_argument("clamp: dimension mismatch");
  Vector out(x.begin(), x.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double c = std::clamp(out[i], b.lower[i], b.upper[i]);
    if (c != out[i] && counter) ++*counter;
    out[i] = c;
  }
  return out;
}

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::CmaEs: return "cmaes";
    case Algorithm::NelderMead: return "nelder_mead";
    case Algorithm::Powell: return "powell";
    case Algorithm::OnePlusOneEs: return "one_plus_one";
    case Algorithm::DifferentialEvolution: return "de";
    case Algorithm::SimulatedAnnealing: return "sa";
  }
  throw std::invalid_argument("unknown algorithm");
}

Algorithm algorithm_from_string(std::string_view tag) {
  for (const Algorithm a : kAllAlgorithms) {
    if (to_string(a) == tag) return a;
  }
  throw std::invalid_argument("unknown algorithm tag: " + std::string(tag));
}

std::string_view to_string(CoolingSchedule s) {
  return s == CoolingSchedule::Exponential ? "exponential" : "logarithmic";
}

CoolingSchedule cooling_schedule_from_string(std::string_view s) {
  if (s == "exponential") return CoolingSchedule::Exponential;
  if (s == "logarithmic") return CoolingSchedule::Logarithmic;
  throw std::invalid_argument("unknown cooling schedule: " + std::string(s));
}

Algorithm algorithm_of(const Hyperparams& hp) {
  return static_cast<Algorithm>(hp.index());
}

Hyperparams default_hyperparams(Algorithm a) {
  switch (a) {
    case Algorithm::CmaEs: return CmaEsParams{};
    case Algorithm::NelderMead: return NelderMeadParams{};
    case Algorithm::Powell: return PowellParams{};
    case Algorithm::OnePlusOneEs: return OnePlusOneParams{};
    case Algorithm::DifferentialEvolution: return DifferentialEvolutionParams{};
    case Algorithm::SimulatedAnnealing: return SimulatedAnnealingParams{};
  }
  throw std::invalid_argument("unknown algorithm");
}

void validate(const Hyperparams& hp) {
  auto positive_sigma = [](double s) {
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("initial_sigma must be > 0");
  };
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, CmaEsParams>) {
          positive_sigma(p.initial_sigma);
          if (p.population_size != 0 && p.population_size < 2) {
            throw std::invalid_argument("cmaes: population_size must be >= 2");
          }
        } else if constexpr (std::is_same_v<P, NelderMeadParams> ||
                             std::is_same_v<P, OnePlusOneParams>) {
          positive_sigma(p.initial_sigma);
        } else if constexpr (std::is_same_v<P, DifferentialEvolutionParams>) {
          positive_sigma(p.initial_sigma);
          if (p.population_size < 4) throw std::invalid_argument("de: population_size must be >= 4");
          if (!(p.crossover_rate >= 0.0 && p.crossover_rate <= 1.0)) {
            throw std::invalid_argument("de: crossover_rate must lie in [0, 1]");
          }
          if (!(p.differential_weight >= 0.0 && p.differential_weight <= 2.0)) {
            throw std::invalid_argument("de: differential_weight must lie in [0, 2]");
          }
        } else if constexpr (std::is_same_v<P, SimulatedAnnealingParams>) {
          positive_sigma(p.initial_sigma);
          if (!(p.initial_temperature > 0.0)) {
            throw std::invalid_argument("sa: initial_temperature must be > 0");
          }
          if (!(p.decay_rate > 0.0 && p.decay_rate < 1.0)) {
            throw std::invalid_argument("sa: decay_rate must lie in (0, 1)");
          }
        }
      },
      hp);
}

int cmaes_population(const CmaEsParams& p, std::size_t dim) {
  if (p.population_size > 0) return p.population_size;
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dim))));
}

AskTellOptimizer::AskTellOptimizer(Algorithm algorithm, std::span<const double> x0, Bounds bounds)
    : algorithm_(algorithm), bounds_(std::move(bounds)) {
  bounds_.validate();
  if (x0.size() != bounds_.dimension()) {
    throw std::invalid_argument("optimizer: start point has wrong dimension");
  }
  x0_ = clamp_to_bounds(x0, bounds_, &clamps_);
}

const std::vector<Vector>& AskTellOptimizer::ask() {
  if (awaiting_tell_) throw std::logic_error("ask() called twice without tell()");
  pending_ = next_batch();
  if (pending_.empty()) throw std::logic_error("optimizer produced an empty batch");
  awaiting_tell_ = true;
  return pending_;
}

void AskTellOptimizer::tell(const std::vector<Vector>& candidates, std::span<const double> losses) {
  if (!awaiting_tell_) throw std::logic_error("tell() without a pending ask()");
  if (candidates.size() != pending_.size() || losses.size() != pending_.size()) {
    throw std::invalid_argument("tell(): batch size does not match the asked batch");
  }
  if (candidates != pending_) throw std::invalid_argument("tell(): candidates differ from ask()");
  std::vector<double> clean(losses.begin(), losses.end());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    clean[i] = sanitize(clean[i]);
    if (best_.empty() || clean[i] < best_loss_) {
      best_loss_ = clean[i];
      best_ = pending_[i];
    }
  }
  evals_ += clean.size();
  awaiting_tell_ = false;
  absorb(clean);
}

const Vector& AskTellOptimizer::recommend() const {
  if (best_.empty()) throw std::logic_error("recommend() before any tell()");
  return best_;
}

// ---------------------------------------------------------------- CMA-ES ---

CmaEs::CmaEs(const CmaEsParams& p, std::span<const double> x0, Bounds bounds, std::uint64_t seed)
    : AskTellOptimizer(Algorithm::CmaEs, x0, std::move(bounds)), rng_(seed) {
  validate(p);
  const auto n = static_cast<double>(dimension());
  lambda_ = cmaes_population(p, dimension());
  if (lambda_ < 2) throw std::invalid_argument("cmaes: population_size must be >= 2");
  mu_ = lambda_ / 2;
  weights_.resize(mu_);
  for (int i = 0; i < mu_; ++i) {
    weights_(i) = std::log((lambda_ + 1) / 2.0) - std::log(i + 1.0);
  }
  weights_ /= weights_.sum();
  mu_eff_ = 1.0 / weights_.squaredNorm();
  c_sigma_ = (mu_eff_ + 2.0) / (n + mu_eff_ + 5.0);
  d_sigma_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff_ - 1.0) / (n + 1.0)) - 1.0) + c_sigma_;
  c_c_ = (4.0 + mu_eff_ / n) / (n + 4.0 + 2.0 * mu_eff_ / n);
  c_1_ = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff_);
  c_mu_ = std::min(1.0 - c_1_,
                   2.0 * (mu_eff_ - 2.0 + 1.0 / mu_eff_) / ((n + 2.0) * (n + 2.0) + mu_eff_));
  chi_n_ = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

  const auto d = static_cast<Eigen::Index>(dimension());
  mean_ = to_eigen(start());
  p_sigma_ = Eigen::VectorXd::Zero(d);
  p_c_ = Eigen::VectorXd::Zero(d);
  cov_ = Eigen::MatrixXd::Identity(d, d);
  basis_ = Eigen::MatrixXd::Identity(d, d);
  inv_sqrt_ = Eigen::MatrixXd::Identity(d, d);
  scales_ = Eigen::VectorXd::Ones(d);
  sigma_ = p.initial_sigma;
}

std::vector<Vector> CmaEs::next_batch() {
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(dimension());
  std::vector<Vector> batch;
  samples_.clear();
  for (int k = 0; k < lambda_; ++k) {
    Eigen::VectorXd z(d);
    for (Eigen::Index i = 0; i < d; ++i) z(i) = normal(rng_);
    const Eigen::VectorXd x = mean_ + sigma_ * (basis_ * scales_.cwiseProduct(z));
    Vector clamped = clamp(to_std(x));
    // The update uses the evaluated (repaired) point.
    samples_.push_back(to_eigen(clamped));
    batch.push_back(std::move(clamped));
  }
  return batch;
}

void CmaEs::absorb(std::span<const double> losses) {
  const auto order = rank_order(losses);
  const auto d = static_cast<Eigen::Index>(dimension());
  const double n = static_cast<double>(dimension());

  Eigen::MatrixXd steps(d, mu_);
  for (int i = 0; i < mu_; ++i) steps.col(i) = (samples_[order[i]] - mean_) / sigma_;
  const Eigen::VectorXd y_w = steps * weights_;
  mean_ += sigma_ * y_w;

  p_sigma_ = (1.0 - c_sigma_) * p_sigma_ +
             std::sqrt(c_sigma_ * (2.0 - c_sigma_) * mu_eff_) * (inv_sqrt_ * y_w);
  ++generation_;
  const double ps_norm = p_sigma_.norm();
  const double decay = 1.0 - std::pow(1.0 - c_sigma_, 2.0 * static_cast<double>(generation_));
  const bool h_sigma = ps_norm / std::sqrt(decay) < (1.4 + 2.0 / (n + 1.0)) * chi_n_;
  p_c_ = (1.0 - c_c_) * p_c_ +
         (h_sigma ? std::sqrt(c_c_ * (2.0 - c_c_) * mu_eff_) : 0.0) * y_w;

  const double stall = h_sigma ? 0.0 : c_1_ * c_c_ * (2.0 - c_c_);
  Eigen::MatrixXd rank_mu = steps * weights_.asDiagonal() * steps.transpose();
  cov_ = (1.0 - c_1_ - c_mu_ + stall) * cov_ + c_1_ * (p_c_ * p_c_.transpose()) + c_mu_ * rank_mu;

  sigma_ *= std::exp(std::min(1.0, (c_sigma_ / d_sigma_) * (ps_norm / chi_n_ - 1.0)));
  update_eigensystem();
}

void CmaEs::update_eigensystem() {
  cov_ = 0.5 * (cov_ + cov_.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov_);
  Eigen::VectorXd eig = es.eigenvalues();
  constexpr double kFloor = 1e-14;
  if (eig.minCoeff() < kFloor) {
    flag_warning();
    eig = eig.cwiseMax(kFloor);
    cov_ = es.eigenvectors() * eig.asDiagonal() * es.eigenvectors().transpose();
  }
  basis_ = es.eigenvectors();
  scales_ = eig.cwiseSqrt();
  inv_sqrt_ = basis_ * scales_.cwiseInverse().asDiagonal() * basis_.transpose();
}

Diagnostics CmaEs::diagnostics() const {
  Diagnostics d;
  d.iteration = generation_;
  d.sigma = sigma_;
  const double mx = scales_.maxCoeff();
  const double mn = scales_.minCoeff();
  d.condition_number = (mx * mx) / (mn * mn);
  return d;
}

// ----------------------------------------------------------- Nelder-Mead ---

NelderMead::NelderMead(const NelderMeadParams& p, std::span<const double> x0, Bounds bounds,
                       std::uint64_t /*seed*/)
    : AskTellOptimizer(Algorithm::NelderMead, x0, std::move(bounds)),
      sigma_(p.initial_sigma),
      routine_(run()) {
  validate(p);
}

std::vector<Vector> NelderMead::next_batch() {
  if (!channel_.waiting) {
    routine_.start();
  } else {
    channel_.waiting.resume();
  }
  routine_.rethrow_if_failed();
  if (routine_.done()) throw std::logic_error("nelder-mead routine terminated");
  return channel_.request;
}

void NelderMead::absorb(std::span<const double> losses) {
  channel_.response.assign(losses.begin(), losses.end());
}

detail::Task<void> NelderMead::evaluate_vertices(std::vector<std::size_t> which) {
  std::vector<Vector> pts;
  for (const std::size_t i : which) pts.push_back(vertices_[i]);
  const auto f = co_await detail::evaluate(channel_, std::move(pts));
  for (std::size_t k = 0; k < which.size(); ++k) {
    values_[which[k]] = f[k];
    ages_[which[k]] = next_age_++;
  }
}

double NelderMead::normalized_volume() const {
  // |det E| / prod |e_i| with e_i = v_i - v_0; 1 for an orthogonal simplex.
  const auto n = static_cast<Eigen::Index>(dimension());
  Eigen::MatrixXd e(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      e(j, i) = vertices_[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(j)] -
                vertices_[0][static_cast<std::size_t>(j)];
    }
    const double len = e.col(i).norm();
    if (len == 0.0) return 0.0;
    e.col(i) /= len;
  }
  return std::abs(e.fullPivLu().determinant());
}

detail::Task<void> NelderMead::run() {
  const std::size_t n = dimension();
  const double dn = static_cast<double>(n);
  const double alpha = 1.0;
  const double beta = 1.0 + 2.0 / dn;
  const double gamma = 0.75 - 1.0 / (2.0 * dn);
  const double delta = 1.0 - 1.0 / dn;
  const Bounds& b = bounds();

  auto seed_simplex = [&](const Vector& centre, double scale) {
    vertices_.assign(n + 1, centre);
    for (std::size_t i = 0; i < n; ++i) {
      Vector& v = vertices_[i + 1];
      v[i] = centre[i] + scale;
      if (v[i] > b.upper[i]) v[i] = centre[i] - scale;
      v = clamp(v);
    }
  };

  values_.assign(n + 1, 0.0);
  ages_.assign(n + 1, 0);
  seed_simplex(start(), sigma_);
  last_step_ = Step::Init;
  {
    std::vector<std::size_t> all(n + 1);
    std::iota(all.begin(), all.end(), std::size_t{0});
    co_await evaluate_vertices(all);
  }

  for (;;) {
    ++iteration_;
    std::vector<std::size_t> order(n + 1);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
      if (values_[a] != values_[c]) return values_[a] < values_[c];
      return ages_[a] < ages_[c];
    });
    {
      std::vector<Vector> v;
      std::vector<double> f;
      std::vector<std::uint64_t> g;
      for (const std::size_t i : order) {
        v.push_back(vertices_[i]);
        f.push_back(values_[i]);
        g.push_back(ages_[i]);
      }
      vertices_ = std::move(v);
      values_ = std::move(f);
      ages_ = std::move(g);
    }

    if (normalized_volume() < 1e-300) {
      flag_warning();
      ++reinits_;
      double spread = 0.0;
      for (std::size_t i = 1; i <= n; ++i) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          d2 += (vertices_[i][j] - vertices_[0][j]) * (vertices_[i][j] - vertices_[0][j]);
        }
        spread = std::max(spread, std::sqrt(d2));
      }
      const Vector best = vertices_[0];
      const double best_f = values_[0];
      seed_simplex(best, std::max(spread, 1e-9));
      values_[0] = best_f;
      last_step_ = Step::Reinit;
      std::vector<std::size_t> rest(n);
      std::iota(rest.begin(), rest.end(), std::size_t{1});
      co_await evaluate_vertices(rest);
      continue;
    }

    Vector centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) centroid[j] += vertices_[i][j] / dn;
    }
    auto along = [&](double t) {
      Vector x(n);
      for (std::size_t j = 0; j < n; ++j) x[j] = centroid[j] + t * (vertices_[n][j] - centroid[j]);
      return clamp(x);
    };
    auto replace_worst = [&](Vector x, double f) {
      vertices_[n] = std::move(x);
      values_[n] = f;
      ages_[n] = next_age_++;
    };

    const double f_best = values_[0];
    const double f_second = values_[n - 1];
    const double f_worst = values_[n];

    last_step_ = Step::Reflect;
    Vector xr = along(-alpha);
    const double fr = co_await evaluate_one(channel_, xr);
    if (fr < f_best) {
      last_step_ = Step::Expand;
      Vector xe = along(-alpha * beta);
      const double fe = co_await evaluate_one(channel_, xe);
      if (fe < fr) {
        replace_worst(std::move(xe), fe);
      } else {
        replace_worst(std::move(xr), fr);
      }
      continue;
    }
    if (fr < f_second) {
      replace_worst(std::move(xr), fr);
      continue;
    }
    bool shrink = false;
    if (fr < f_worst) {
      last_step_ = Step::ContractOutside;
      Vector xc = along(-alpha * gamma);
      const double fc = co_await evaluate_one(channel_, xc);
      if (fc <= fr) {
        replace_worst(std::move(xc), fc);
      } else {
        shrink = true;
      }
    } else {
      last_step_ = Step::ContractInside;
      Vector xc = along(gamma);
      const double fc = co_await evaluate_one(channel_, xc);
      if (fc < f_worst) {
        replace_worst(std::move(xc), fc);
      } else {
        shrink = true;
      }
    }
    if (shrink) {
      last_step_ = Step::Shrink;
      for (std::size_t i = 1; i <= n; ++i) {
        Vector x(n);
        for (std::size_t j = 0; j < n; ++j) {
          x[j] = vertices_[0][j] + delta * (vertices_[i][j] - vertices_[0][j]);
        }
        vertices_[i] = clamp(x);
      }
      std::vector<std::size_t> rest(n);
      std::iota(rest.begin(), rest.end(), std::size_t{1});
      co_await evaluate_vertices(rest);
    }
  }
}

Diagnostics NelderMead::diagnostics() const {
  Diagnostics d;
  d.iteration = iteration_;
  if (vertices_.size() == dimension() + 1) {
    const auto n = static_cast<Eigen::Index>(dimension());
    Eigen::MatrixXd e(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        e(j, i) = vertices_[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(j)] -
                  vertices_[0][static_cast<std::size_t>(j)];
      }
    }
    d.simplex_volume = std::abs(e.fullPivLu().determinant()) / std::tgamma(static_cast<double>(n) + 1);
  }
  return d;
}

// ---------------------------------------------------------------- Powell ---

Powell::Powell(std::span<const double> x0, Bounds bounds, std::uint64_t /*seed*/)
    : AskTellOptimizer(Algorithm::Powell, x0, std::move(bounds)), routine_(run()) {}

std::vector<Vector> Powell::next_batch() {
  if (!channel_.waiting) {
    routine_.start();
  } else {
    channel_.waiting.resume();
  }
  routine_.rethrow_if_failed();
  if (routine_.done()) throw std::logic_error("powell routine terminated");
  return channel_.request;
}

void Powell::absorb(std::span<const double> losses) {
  channel_.response.assign(losses.begin(), losses.end());
}

detail::Task<double> Powell::probe(Vector x) {
  co_return co_await evaluate_one(channel_, std::move(x));
}

detail::Task<Powell::LinePoint> Powell::line_minimize(LinePoint from, Vector dir) {
  const std::size_t n = dimension();
  const Bounds& b = bounds();
  const double norm = std::sqrt(std::inner_product(dir.begin(), dir.end(), dir.begin(), 0.0));
  if (norm == 0.0) co_return from;
  for (double& v : dir) v /= norm;

  // Feasible parameter interval keeping from.x + t dir inside the box.
  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    if (dir[j] == 0.0) continue;
    const double a = (b.lower[j] - from.x[j]) / dir[j];
    const double c = (b.upper[j] - from.x[j]) / dir[j];
    t_lo = std::max(t_lo, std::min(a, c));
    t_hi = std::min(t_hi, std::max(a, c));
  }
  t_lo = std::min(t_lo, 0.0);
  t_hi = std::max(t_hi, 0.0);
  const double span = t_hi - t_lo;
  if (!(span > 0.0)) co_return from;

  auto point = [&](double t) {
    Vector x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = from.x[j] + t * dir[j];
    return clamp(x);
  };
  int probes = 0;

  constexpr double kGolden = 1.618033988749895;
  constexpr double kCGold = 0.3819660112501051;
  const double zeps = 1e-12 * span;

  // Bracket a minimum: a < b < c (or reversed) with f(b) <= f(a), f(c).
  double a = 0.0, fa = from.f;
  const double h = 0.1 * span;
  double bt = std::clamp(h, t_lo, t_hi);
  if (bt == 0.0) bt = std::clamp(-h, t_lo, t_hi);
  ++probes;
  double fb = co_await probe(point(bt));
  if (fb > fa) {
    std::swap(a, bt);
    std::swap(fa, fb);
  }
  double c = std::clamp(bt + kGolden * (bt - a), t_lo, t_hi);
  double fc = fb;
  if (c != bt) {
    ++probes;
    fc = co_await probe(point(c));
  }
  while (fc < fb && probes < kMaxLineProbes) {
    if (c == t_lo || c == t_hi) break;  // minimum sits on the boundary
    a = bt;
    fa = fb;
    bt = c;
    fb = fc;
    c = std::clamp(bt + kGolden * (bt - a), t_lo, t_hi);
    ++probes;
    fc = co_await probe(point(c));
  }
  if (fc < fb) co_return LinePoint{point(c), fc};

  // Brent: golden-section with accepted parabolic steps.
  double lo = std::min(a, c), hi = std::max(a, c);
  double x = bt, w = bt, v = bt, fx = fb, fw = fb, fv = fb;
  double d = 0.0, e = 0.0;
  while (probes < kMaxLineProbes) {
    const double xm = 0.5 * (lo + hi);
    const double tol1 = kLineTolerance * std::abs(x) + zeps;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (hi - lo)) break;
    bool golden = true;
    if (std::abs(e) > tol1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double pp = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) pp = -pp;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (!(std::abs(pp) >= std::abs(0.5 * q * etemp) || pp <= q * (lo - x) || pp >= q * (hi - x))) {
        d = pp / q;
        const double u = x + d;
        if (u - lo < tol2 || hi - u < tol2) d = std::copysign(tol1, xm - x);
        golden = false;
      }
    }
    if (golden) {
      e = (x >= xm) ? lo - x : hi - x;
      d = kCGold * e;
    }
    const double u = std::abs(d) >= tol1 ? x + d : x + std::copysign(tol1, d);
    ++probes;
    const double fu = co_await probe(point(u));
    if (fu <= fx) {
      if (u >= x) lo = x; else hi = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) lo = u; else hi = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  if (fx <= from.f) co_return LinePoint{point(x), fx};
  co_return from;
}

detail::Task<void> Powell::run() {
  const std::size_t n = dimension();
  dirs_.assign(n, Vector(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) dirs_[i][i] = 1.0;

  LinePoint cur{start(), 0.0};
  cur.f = co_await probe(cur.x);

  for (;;) {
    ++iteration_;
    const LinePoint origin = cur;
    Cycle cycle;
    for (std::size_t i = 0; i < n; ++i) {
      const double before = cur.f;
      cur = co_await line_minimize(cur, dirs_[i]);
      cycle.decreases.push_back(before - cur.f);
    }
    const auto big = static_cast<std::size_t>(
        std::max_element(cycle.decreases.begin(), cycle.decreases.end()) - cycle.decreases.begin());
    const double biggest = cycle.decreases[big];

    Vector shift(n);
    Vector extrapolated(n);
    for (std::size_t j = 0; j < n; ++j) {
      shift[j] = cur.x[j] - origin.x[j];
      extrapolated[j] = 2.0 * cur.x[j] - origin.x[j];
    }
    const bool moved = std::any_of(shift.begin(), shift.end(), [](double s) { return s != 0.0; });
    if (moved) {
      const double fe = co_await probe(clamp(extrapolated));
      if (fe < origin.f) {
        const double t = 2.0 * (origin.f - 2.0 * cur.f + fe) *
                             (origin.f - cur.f - biggest) * (origin.f - cur.f - biggest) -
                         biggest * (origin.f - fe) * (origin.f - fe);
        if (t < 0.0) {
          cur = co_await line_minimize(cur, shift);
          dirs_.erase(dirs_.begin() + static_cast<std::ptrdiff_t>(big));
          dirs_.push_back(shift);
          cycle.discarded = static_cast<int>(big);
        }
      }
    } else {
      // No progress along any direction: restart from the coordinate basis.
      for (std::size_t i = 0; i < n; ++i) {
        dirs_[i].assign(n, 0.0);
        dirs_[i][i] = 1.0;
      }
    }
    cycles_.push_back(std::move(cycle));
  }
}

Diagnostics Powell::diagnostics() const {
  Diagnostics d;
  d.iteration = iteration_;
  return d;
}

// --------------------------------------------------------------- (1+1)-ES ---

OnePlusOneEs::OnePlusOneEs(const OnePlusOneParams& p, std::span<const double> x0, Bounds bounds,
                           std::uint64_t seed)
    : AskTellOptimizer(Algorithm::OnePlusOneEs, x0, std::move(bounds)),
      rng_(seed),
      sigma_(p.initial_sigma),
      c_(1.0 / std::sqrt(static_cast<double>(dimension()) + 1.0)),
      parent_(start()) {
  validate(p);
}

std::vector<Vector> OnePlusOneEs::next_batch() {
  if (!initialized_) return {parent_};
  child_ = clamp(gaussian_step(parent_, sigma_, rng_));
  return {child_};
}

void OnePlusOneEs::absorb(std::span<const double> losses) {
  if (!initialized_) {
    parent_loss_ = losses[0];
    initialized_ = true;
    return;
  }
  ++steps_;
  if (losses[0] <= parent_loss_) {
    parent_ = child_;
    parent_loss_ = losses[0];
    ++successes_;
    sigma_ *= std::exp(c_);
  } else {
    sigma_ *= std::exp(-c_ / 4.0);
  }
}

Diagnostics OnePlusOneEs::diagnostics() const {
  Diagnostics d;
  d.iteration = steps_;
  d.sigma = sigma_;
  return d;
}

// --------------------------------------------------- Differential evolution ---

DifferentialEvolution::DifferentialEvolution(const DifferentialEvolutionParams& p,
                                             std::span<const double> x0, Bounds bounds,
                                             std::uint64_t seed)
    : AskTellOptimizer(Algorithm::DifferentialEvolution, x0, std::move(bounds)), p_(p), rng_(seed) {
  validate(p);
}

std::vector<Vector> DifferentialEvolution::next_batch() {
  const auto np = static_cast<std::size_t>(p_.population_size);
  if (!initialized_) {
    trials_.clear();
    trials_.push_back(start());
    while (trials_.size() < np) trials_.push_back(clamp(gaussian_step(start(), p_.initial_sigma, rng_)));
    return trials_;
  }
  const std::size_t n = dimension();
  std::uniform_int_distribution<std::size_t> pick(0, np - 1);
  std::uniform_int_distribution<std::size_t> coord(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  trials_.assign(np, Vector(n));
  for (std::size_t i = 0; i < np; ++i) {
    std::size_t r1, r2, r3;
    do { r1 = pick(rng_); } while (r1 == i);
    do { r2 = pick(rng_); } while (r2 == i || r2 == r1);
    do { r3 = pick(rng_); } while (r3 == i || r3 == r1 || r3 == r2);
    const std::size_t forced = coord(rng_);
    Vector& u = trials_[i];
    for (std::size_t j = 0; j < n; ++j) {
      const bool take = unit(rng_) < p_.crossover_rate || j == forced;
      u[j] = take ? population_[r1][j] +
                        p_.differential_weight * (population_[r2][j] - population_[r3][j])
                  : population_[i][j];
    }
    u = clamp(u);
  }
  return trials_;
}

void DifferentialEvolution::absorb(std::span<const double> losses) {
  if (!initialized_) {
    population_ = trials_;
    fitness_.assign(losses.begin(), losses.end());
    initialized_ = true;
    return;
  }
  ++generation_;
  for (std::size_t i = 0; i < population_.size(); ++i) {
    if (losses[i] <= fitness_[i]) {
      population_[i] = trials_[i];
      fitness_[i] = losses[i];
    }
  }
}

Diagnostics DifferentialEvolution::diagnostics() const {
  Diagnostics d;
  d.iteration = generation_;
  return d;
}

// --------------------------------------------------- Simulated annealing ---

bool annealing_accepts(double delta, double temperature, double u) {
  if (delta <= 0.0) return true;
  return u < std::exp(-delta / temperature);
}

SimulatedAnnealing::SimulatedAnnealing(const SimulatedAnnealingParams& p,
                                       std::span<const double> x0, Bounds bounds,
                                       std::uint64_t seed)
    : AskTellOptimizer(Algorithm::SimulatedAnnealing, x0, std::move(bounds)),
      p_(p),
      rng_(seed),
      sigma_(p.initial_sigma),
      current_(start()) {
  validate(p);
}

double SimulatedAnnealing::temperature() const {
  const double k = static_cast<double>(step_);
  if (p_.schedule == CoolingSchedule::Exponential) {
    return p_.initial_temperature * std::pow(p_.decay_rate, k);
  }
  return p_.initial_temperature / std::log(k + 2.0);
}

std::vector<Vector> SimulatedAnnealing::next_batch() {
  if (!initialized_) return {current_};
  proposal_ = clamp(gaussian_step(current_, sigma_, rng_));
  return {proposal_};
}

void SimulatedAnnealing::absorb(std::span<const double> losses) {
  if (!initialized_) {
    current_loss_ = losses[0];
    initialized_ = true;
    return;
  }
  const double delta = losses[0] - current_loss_;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng_);
  if (annealing_accepts(delta, temperature(), u)) {
    if (delta > 0.0) ++worse_accepted_;
    current_ = proposal_;
    current_loss_ = losses[0];
    ++window_accepted_;
  }
  ++step_;
  if (++window_steps_ == kWindow) {
    const double ratio = static_cast<double>(window_accepted_) / kWindow;
    if (ratio > 0.6) {
      sigma_ *= 1.0 + 2.0 * (ratio - 0.6) / 0.4;
    } else if (ratio < 0.4) {
      sigma_ /= 1.0 + 2.0 * (0.4 - ratio) / 0.4;
    }
    window_steps_ = 0;
    window_accepted_ = 0;
  }
}

Diagnostics SimulatedAnnealing::diagnostics() const {
  Diagnostics d;
  d.iteration = step_;
  d.sigma = sigma_;
  d.temperature = temperature();
  return d;
}

// --------------------------------------------------------------- factory ---

std::unique_ptr<AskTellOptimizer> make_optimizer(const Hyperparams& hp, std::span<const double> x0,
                                                 const Bounds& bounds, std::uint64_t seed) {
  validate(hp);
  return std::visit(
      [&](const auto& p) -> std::unique_ptr<AskTellOptimizer> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, CmaEsParams>) {
          return std::make_unique<CmaEs>(p, x0, bounds, seed);
        } else if constexpr (std::is_same_v<P, NelderMeadParams>) {
          return std::make_unique<NelderMead>(p, x0, bounds, seed);
        } else if constexpr (std::is_same_v<P, PowellParams>) {
          return std::make_unique<Powell>(x0, bounds, seed);
        } else if constexpr (std::is_same_v<P, OnePlusOneParams>) {
          return std::make_unique<OnePlusOneEs>(p, x0, bounds, seed);
        } else if constexpr (std::is_same_v<P, DifferentialEvolutionParams>) {
          return std::make_unique<DifferentialEvolution>(p, x0, bounds, seed);
        } else {
          return std::make_unique<SimulatedAnnealing>(p, x0, bounds, seed);
        }
      },
      hp);
}

}  // namespace orbitcal
