#pragma once

// A calibration problem as the benchmark harness sees it: a box of physical
// parameters, a nominal point and a (possibly noisy) loss.

#include "orbitcal/analytic.hpp"
#include "orbitcal/orbit_loss.hpp"

#include <memory>
#include <string>
#include <vector>

namespace orbitcal {

class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual const std::vector<std::string>& parameter_names() const = 0;
  virtual const Vector& lower() const = 0;
  virtual const Vector& upper() const = 0;
  /// Calibrated point the detuned starts are derived from.
  virtual const Vector& nominal() const = 0;
  /// Loss at physical parameters x (already inside the box). `noise_seed` and
  /// `eval_index` name the random stream of a noisy evaluation.
  virtual double evaluate(std::span<const double> x, std::size_t eval_index,
                          std::uint64_t noise_seed) const = 0;
  /// True when evaluate() already returns ln(infidelity).
  virtual bool log_scale() const = 0;
  /// Parameters measured from a natural zero (a frequency offset, say) are
  /// detuned additively rather than relative to their nominal value.
  virtual bool offset_parameter(std::size_t /*i*/) const { return false; }

  std::size_t dimension() const { return lower().size(); }
  Vector to_unit(std::span<const double> physical) const;
  Vector from_unit(std::span<const double> unit) const;
};

class OrbitProblem final : public Problem {
 public:
  OrbitProblem(std::string name, OrbitLoss loss);

  std::string name() const override { return name_; }
  const std::vector<std::string>& parameter_names() const override { return loss_.space().names(); }
  const Vector& lower() const override { return loss_.space().lower(); }
  const Vector& upper() const override { return loss_.space().upper(); }
  const Vector& nominal() const override { return loss_.space().nominal(); }
  double evaluate(std::span<const double> x, std::size_t eval_index,
                  std::uint64_t noise_seed) const override;
  bool log_scale() const override { return true; }
  bool offset_parameter(std::size_t i) const override;
  const OrbitLoss& loss() const { return loss_; }

 private:
  std::string name_;
  OrbitLoss loss_;
};

/// Analytic function on its standard domain; the nominal point is the global
/// minimum, so a detuned start sits a fixed fraction of the domain away.
class AnalyticProblem final : public Problem {
 public:
  explicit AnalyticProblem(AnalyticFunction f);

  std::string name() const override;
  const std::vector<std::string>& parameter_names() const override { return names_; }
  const Vector& lower() const override { return f_.domain.lower; }
  const Vector& upper() const override { return f_.domain.upper; }
  const Vector& nominal() const override { return f_.minimum_location; }
  double evaluate(std::span<const double> x, std::size_t eval_index,
                  std::uint64_t noise_seed) const override;
  bool log_scale() const override { return false; }
  const AnalyticFunction& function() const { return f_; }

 private:
  AnalyticFunction f_;
  std::vector<std::string> names_;
};

}  // namespace orbitcal
