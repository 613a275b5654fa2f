#pragma once

// Closed-form test functions for quick optimizer benchmarks.

#include "orbitcal/optimizers.hpp"

#include <functional>
#include <string>
#include <vector>

namespace orbitcal {

struct AnalyticFunction {
  std::string name;
  std::size_t dimension = 0;
  Vector minimum_location;
  double minimum_value = 0.0;
  double noise_sigma = 0.0;  ///< additive Gaussian noise for the noisy variants
  Bounds domain;
  std::function<double(std::span<const double>)> evaluate;  ///< noise-free value
};

double sphere(std::span<const double> x);
double rosenbrock(std::span<const double> x);
double rastrigin(std::span<const double> x);
double ackley(std::span<const double> x);

/// Tags accepted by make_analytic().
const std::vector<std::string>& analytic_names();
/// name is one of sphere, rosenbrock, rastrigin, ackley, noisy_sphere.
AnalyticFunction make_analytic(const std::string& name, std::size_t dim);
/// Every function at dimensions 2, 10 and 82.
std::vector<AnalyticFunction> analytic_suite();

/// f(x) + noise_sigma * N(0, 1).
double evaluate_with_noise(const AnalyticFunction& f, std::span<const double> x,
                           double noise_sigma, Rng& rng);

}  // namespace orbitcal
