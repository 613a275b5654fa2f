#include "orbitcal/problem.hpp"

#include <stdexcept>

namespace orbitcal {

Vector Problem::to_unit(std::span<const double> physical) const {
  Vector u(physical.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double w = upper()[i] - lower()[i];
    u[i] = w > 0.0 ? (physical[i] - lower()[i]) / w : 0.5;
  }
  return u;
}

Vector Problem::from_unit(std::span<const double> unit) const {
  Vector x(unit.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = lower()[i] + unit[i] * (upper()[i] - lower()[i]);
  }
  return x;
}

OrbitProblem::OrbitProblem(std::string name, OrbitLoss loss)
    : name_(std::move(name)), loss_(std::move(loss)) {}

double OrbitProblem::evaluate(std::span<const double> x, std::size_t eval_index,
                              std::uint64_t noise_seed) const {
  return loss_.evaluate(x, eval_index, noise_seed).loss;
}

bool OrbitProblem::offset_parameter(std::size_t i) const {
  return loss_.space().names().at(i) == "detuning";
}

AnalyticProblem::AnalyticProblem(AnalyticFunction f) : f_(std::move(f)) {
  for (std::size_t i = 0; i < f_.dimension; ++i) names_.push_back("x" + std::to_string(i));
}

std::string AnalyticProblem::name() const {
  return "analytic:" + f_.name + ":" + std::to_string(f_.dimension);
}

double AnalyticProblem::evaluate(std::span<const double> x, std::size_t eval_index,
                                 std::uint64_t noise_seed) const {
  if (f_.noise_sigma == 0.0) return f_.evaluate(x);
  Rng rng = make_rng(noise_seed, "analytic_noise", eval_index);
  return evaluate_with_noise(f_, x, f_.noise_sigma, rng);
}

}  // namespace orbitcal
