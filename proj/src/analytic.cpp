#include "orbitcal/analytic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace orbitcal {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNoisySphereSigma = 1e-3;
}  // namespace

double sphere(std::span<const double> x) {
  double s = 0.0;
  for (const double v : x) s += v * v;
  return s;
}

double rosenbrock(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = 1.0 - x[i];
    s += 100.0 * a * a + b * b;
  }
  return s;
}

double rastrigin(std::span<const double> x) {
  double s = 10.0 * static_cast<double>(x.size());
  for (const double v : x) s += v * v - 10.0 * std::cos(kTwoPi * v);
  return s;
}

double ackley(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double sq = 0.0, cs = 0.0;
  for (const double v : x) {
    sq += v * v;
    cs += std::cos(kTwoPi * v);
  }
  // Grouped so that both halves cancel exactly at the origin.
  return 20.0 * (1.0 - std::exp(-0.2 * std::sqrt(sq / n))) + (std::exp(1.0) - std::exp(cs / n));
}

const std::vector<std::string>& analytic_names() {
  static const std::vector<std::string> names = {"sphere", "rosenbrock", "rastrigin", "ackley",
                                                 "noisy_sphere"};
  return names;
}

AnalyticFunction make_analytic(const std::string& name, std::size_t dim) {
  if (dim < 1) throw std::invalid_argument("analytic: dimension must be >= 1");
  AnalyticFunction f;
  f.name = name;
  f.dimension = dim;
  f.minimum_location = Vector(dim, 0.0);
  if (name == "sphere" || name == "noisy_sphere") {
    f.domain = Bounds::uniform(dim, -5.0, 10.0);
    f.evaluate = sphere;
    if (name == "noisy_sphere") f.noise_sigma = kNoisySphereSigma;
  } else if (name == "rosenbrock") {
    f.domain = Bounds::uniform(dim, -5.0, 10.0);
    f.evaluate = rosenbrock;
    f.minimum_location = Vector(dim, 1.0);
  } else if (name == "rastrigin") {
    f.domain = Bounds::uniform(dim, -5.12, 5.12);
    f.evaluate = rastrigin;
  } else if (name == "ackley") {
    f.domain = Bounds::uniform(dim, -32.768, 32.768);
    f.evaluate = ackley;
  } else {
    throw std::invalid_argument("unknown analytic function: " + name);
  }
  return f;
}

std::vector<AnalyticFunction> analytic_suite() {
  std::vector<AnalyticFunction> out;
  for (const auto& name : analytic_names()) {
    for (const std::size_t dim : {2u, 10u, 82u}) out.push_back(make_analytic(name, dim));
  }
  return out;
}

double evaluate_with_noise(const AnalyticFunction& f, std::span<const double> x,
                           double noise_sigma, Rng& rng) {
  if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
  const double value = f.evaluate(x);
  if (noise_sigma == 0.0) return value;
  std::normal_distribution<double> normal(0.0, 1.0);
  return value + noise_sigma * normal(rng);
}

}  // namespace orbitcal
