#pragma once

// Driven three-level Duffing oscillator and its piecewise-constant propagator.
//
// Energies are stored in Hz in SystemConfig and converted to angular units
// (rad/s) by the builders. Control samples passed to propagate() are in rad/s.

#include <Eigen/Dense>

#include <span>

namespace orbitcal {

using Matrix3r = Eigen::Matrix3d;
using Matrix3c = Eigen::Matrix3cd;
using Vector3c = Eigen::Vector3cd;

/// 3x3 propagator on the truncated oscillator.
using Unitary = Matrix3c;
/// Amplitudes on |0>, |1>, |2>.
using QuantumState = Vector3c;

struct SystemConfig {
  double qubit_frequency = 4.8e9;  ///< Hz
  /// Hz. Negative (transmon convention); the 1->2 transition sits below 0->1.
  double anharmonicity = -200e6;
  int levels = 3;
  double dt = 1.0 / (64.0 * 4.8e9);  ///< s, integration step

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

/// H0 = w n + (d/2)(n - 1) n in rad/s, diagonal {0, w, 2w + d}.
Matrix3r drift_hamiltonian(const SystemConfig& cfg);

/// (a^dag + a) truncated to three levels.
Matrix3r drive_operator();

/// Time-ordered product of exact step exponentials,
///   U = prod_k exp(-i (H0 + c_k (a^dag + a)) step),
/// where c_k is the control (rad/s) sampled at the step midpoint. Later steps
/// multiply from the left. Throws on an empty grid.
Unitary propagate(const SystemConfig& cfg, std::span<const double> samples, double step);
Unitary propagate(const SystemConfig& cfg, std::span<const double> samples);

/// exp(-i H0 t), the free evolution over a duration t (s).
Unitary drift_evolution(const SystemConfig& cfg, double duration);

/// Returns U psi. No renormalization.
QuantumState apply(const Unitary& u, const QuantumState& psi);

QuantumState basis_state(int level);

/// max |(U^dag U - 1)_ij|
double unitarity_error(const Unitary& u);

}  // namespace orbitcal
