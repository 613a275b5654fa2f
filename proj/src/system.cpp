#include "orbitcal/system.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace orbitcal {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Left-multiplies u by exp(-i M) for a real symmetric M via its
// eigendecomposition M = V diag(lambda) V^T.
void apply_step(const Matrix3r& m, Matrix3c& u) {
  Eigen::SelfAdjointEigenSolver<Matrix3r> es;
  es.computeDirect(m);
  const Matrix3r& v = es.eigenvectors();
  const Eigen::Vector3d& lambda = es.eigenvalues();
  Matrix3c w = v.transpose() * u;
  for (int n = 0; n < 3; ++n) {
    w.row(n) *= std::polar(1.0, -lambda(n));
  }
  u.noalias() = v * w;
}

}  // namespace

void SystemConfig::validate() const {
  if (!(qubit_frequency > 0.0)) {
    throw std::invalid_argument("system: qubit_frequency must be positive");
  }
  if (levels != 3) {
    throw std::invalid_argument("system: levels must be 3, got " + std::to_string(levels));
  }
  if (!(dt > 0.0)) {
    throw std::invalid_argument("system: dt must be positive");
  }
  if (!(qubit_frequency * dt < 0.1)) {
    throw std::invalid_argument("system: dt does not resolve the qubit carrier (need f*dt < 0.1)");
  }
  if (!std::isfinite(anharmonicity)) {
    throw std::invalid_argument("system: anharmonicity must be finite");
  }
}

Matrix3r drift_hamiltonian(const SystemConfig& cfg) {
  const double w = kTwoPi * cfg.qubit_frequency;
  const double d = kTwoPi * cfg.anharmonicity;
  Matrix3r h = Matrix3r::Zero();
  // n = 0, 1, 2: w n + (d / 2) (n - 1) n
  h(1, 1) = w;
  h(2, 2) = 2.0 * w + d;
  return h;
}

Matrix3r drive_operator() {
  Matrix3r x = Matrix3r::Zero();
  x(0, 1) = x(1, 0) = 1.0;
  x(1, 2) = x(2, 1) = std::numbers::sqrt2;
  return x;
}

Unitary propagate(const SystemConfig& cfg, std::span<const double> samples, double step) {
  if (samples.empty()) {
    throw std::invalid_argument("empty control grid");
  }
  if (!(step > 0.0)) {
    throw std::invalid_argument("propagate: step must be positive");
  }
  const Matrix3r h0 = drift_hamiltonian(cfg) * step;
  const Matrix3r x = drive_operator() * step;
  Unitary u = Unitary::Identity();
  for (const double c : samples) {
    apply_step(h0 + c * x, u);
  }
  return u;
}

Unitary propagate(const SystemConfig& cfg, std::span<const double> samples) {
  return propagate(cfg, samples, cfg.dt);
}

Unitary drift_evolution(const SystemConfig& cfg, double duration) {
  const Matrix3r h0 = drift_hamiltonian(cfg);
  Unitary u = Unitary::Zero();
  for (int n = 0; n < 3; ++n) {
    u(n, n) = std::polar(1.0, -h0(n, n) * duration);
  }
  return u;
}

QuantumState apply(const Unitary& u, const QuantumState& psi) { return u * psi; }

QuantumState basis_state(int level) {
  if (level < 0 || level > 2) {
    throw std::out_of_range("basis_state: level must be 0, 1 or 2");
  }
  QuantumState psi = QuantumState::Zero();
  psi(level) = 1.0;
  return psi;
}

double unitarity_error(const Unitary& u) {
  return (u.adjoint() * u - Matrix3c::Identity()).cwiseAbs().maxCoeff();
}

}  // namespace orbitcal
