#pragma once

// ORBIT loss: ln(1 - mean survival) over N random Clifford sequences executed
// with physical (or idealized) gates on the three-level system.

#include "orbitcal/clifford.hpp"
#include "orbitcal/pulses.hpp"
#include "orbitcal/system.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace orbitcal {

using GateUnitaries = std::array<Unitary, kNumAtomicGates>;

/// Gate propagators in the frame co-rotating with the drive.
class GateModel {
 public:
  virtual ~GateModel() = default;
  virtual GateUnitaries unitaries(const PulseParams& params) const = 0;
};

/// Simulates every pulse on the lab-frame Hamiltonian, then moves the result
/// into the drive frame with exp(+i 2 pi f_d n t_g). Gates that only differ by
/// the sign of the drive share one propagation: U(-c) = P U(c) P, with
/// P = diag(1, -1, 1).
class PulseGateModel final : public GateModel {
 public:
  explicit PulseGateModel(SystemConfig sys);
  GateUnitaries unitaries(const PulseParams& params) const override;
  const SystemConfig& system() const { return sys_; }

 private:
  SystemConfig sys_;
};

/// Perfect gates: the ideal SU(2) on the qubit block, level 2 untouched.
class IdealGateModel final : public GateModel {
 public:
  GateUnitaries unitaries(const PulseParams& params) const override;
};

/// Drive-frame propagator of one pulse.
Unitary drive_frame_propagator(const SystemConfig& sys, const GatePulse& pulse);

/// Average gate fidelity of the qubit block of `actual` against `ideal`;
/// leakage out of the qubit subspace lowers it.
double gate_fidelity(const Unitary& actual, const Matrix2c& ideal);

struct OrbitConfig {
  int num_sequences = 20;
  int sequence_length = 20;
  Target target = Target::Ground;
  int shots = 0;  ///< 0 means exact populations
  std::uint64_t sequence_seed = 1;
  double infidelity_floor = 1e-9;
  /// Draw fresh sequences for every evaluation instead of a fixed set.
  bool resample_sequences = false;

  void validate() const;
};

struct LossEvaluation {
  std::vector<double> x;  ///< physical parameters actually evaluated (after clamping)
  double loss = 0.0;      ///< ln(max(1 - p, floor))
  double mean_population = 0.0;
  std::size_t eval_index = 0;
  std::size_t clamped = 0;  ///< coordinates moved onto the bounds
  double wall_time = 0.0;   ///< s
};

/// |<target|psi>|^2 with target |0> or |1>; leaked population is never counted.
double measure_population(const QuantumState& psi, Target target);

/// k / shots with k ~ Binomial(shots, p).
double sample_shots(double p, int shots, std::mt19937_64& rng);

class OrbitLoss {
 public:
  OrbitLoss(OrbitConfig cfg, ParameterSpace space, std::shared_ptr<const GateModel> model);

  /// Evaluates physical parameters x. `noise_seed` feeds shot sampling and,
  /// in resample mode, the fresh sequence draw.
  LossEvaluation evaluate(std::span<const double> x, std::size_t eval_index = 0,
                          std::uint64_t noise_seed = 0) const;

  /// Mean target population at x for the given sequences (exact, no clamping).
  double mean_population(std::span<const double> x, std::span<const OrbitSequence> seqs) const;

  const OrbitConfig& config() const { return cfg_; }
  const ParameterSpace& space() const { return space_; }
  const std::vector<OrbitSequence>& sequences() const { return sequences_; }
  std::shared_ptr<const GateModel> model() const { return model_; }

  /// Same loss on another parameter space (e.g. widened bounds).
  OrbitLoss with_space(ParameterSpace space) const;

 private:
  OrbitConfig cfg_;
  ParameterSpace space_;
  std::shared_ptr<const GateModel> model_;
  std::vector<OrbitSequence> sequences_;
};

std::vector<OrbitSequence> draw_sequences(const OrbitConfig& cfg, std::uint64_t seed);

/// Losses on an outer-product grid, row-major with a varying slowest.
struct Landscape {
  std::string param_a, param_b;
  std::vector<double> values_a, values_b;
  std::vector<double> loss;

  double at(std::size_t i, std::size_t j) const { return loss[i * values_b.size() + j]; }
  /// CSV "param_a,param_b,loss" with the parameter names in the header.
  void write_csv(std::ostream& os) const;
};

/// Scans two parameters with all others at nominal. Bounds are widened to the
/// grid so no point is clamped. Throws on an empty grid.
Landscape landscape_scan(const OrbitLoss& loss, const std::string& param_a,
                         std::span<const double> values_a, const std::string& param_b,
                         std::span<const double> values_b);

/// Interior local minima of a 1-D slice, detected as sign changes of the
/// finite differences from negative to positive (flat runs are skipped).
int count_local_minima(std::span<const double> values);

}  // namespace orbitcal
