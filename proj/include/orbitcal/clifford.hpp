#pragma once

// Single-qubit Clifford group on the computational subspace, its decomposition
// into atomic pulse gates, and ORBIT sequence generation.
//
// Axis convention: a drive with carrier phase phi rotates about
// n(phi) = (cos phi, -sin phi, 0) in the frame co-rotating with the drive,
// because c(t)(a^dag + a) with c ~ cos(w_d t + phi) has the resonant part
// (c0/2)(cos phi sigma_x - sin phi sigma_y). The ideal atomic gates use the
// same axes as the physical pulses, so the "Y" gates (phi = pi/2) rotate about
// -sigma_y of the standard Pauli basis.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace orbitcal {

using Matrix2c = Eigen::Matrix2cd;

enum class AtomicGate : std::uint8_t { Id, X90p, X90m, Y90p, Y90m, X180, Y180 };

inline constexpr std::size_t kNumAtomicGates = 7;
inline constexpr std::array<AtomicGate, kNumAtomicGates> kAtomicGates = {
    AtomicGate::Id,   AtomicGate::X90p, AtomicGate::X90m, AtomicGate::Y90p,
    AtomicGate::Y90m, AtomicGate::X180, AtomicGate::Y180};

std::string_view to_string(AtomicGate g);
/// Throws std::invalid_argument on an unknown tag.
AtomicGate atomic_gate_from_string(std::string_view tag);

/// Rotation angle and drive phase realising a gate. Id has angle 0.
struct GateRotation {
  double angle = 0.0;  ///< signed rotation angle, rad
  double phase = 0.0;  ///< carrier phase offset, rad
};
GateRotation rotation_of(AtomicGate g);

/// exp(-i angle/2 (cos phase sigma_x - sin phase sigma_y))
Matrix2c rotation_su2(double angle, double phase);
Matrix2c ideal_su2(AtomicGate g);

/// |tr(A^dag B)| / 2; equals 1 iff A and B agree up to a global phase.
double trace_fidelity(const Matrix2c& a, const Matrix2c& b);
bool same_up_to_phase(const Matrix2c& a, const Matrix2c& b);

struct CliffordElement {
  int index = 0;
  Matrix2c ideal_su2;
  std::vector<AtomicGate> decomposition;
};

enum class Target : std::uint8_t { Ground, Excited };
std::string_view to_string(Target t);
Target target_from_string(std::string_view s);

struct OrbitSequence {
  std::vector<int> clifford_indices;
  Target target = Target::Ground;
};

/// The 24-element group. Built once on first use; immutable afterwards.
class CliffordGroup {
 public:
  static const CliffordGroup& instance();

  static constexpr int kOrder = 24;
  static constexpr int kIdentity = 0;

  const std::vector<CliffordElement>& elements() const { return elements_; }
  const CliffordElement& element(int index) const;

  /// Index of C_a C_b (b applied first).
  int multiply(int a, int b) const;
  int inverse(int a) const;
  /// Table lookup of an arbitrary SU(2) up to phase; -1 when not a Clifford.
  int find(const Matrix2c& u) const;
  /// Lowest index mapping |0> to |1> up to phase.
  int lowest_flip() const { return lowest_flip_; }

  /// Ideal product of a sequence applied in order (first index first).
  Matrix2c ideal_product(std::span<const int> indices) const;

  /// First l-1 elements uniform, final element closes the sequence onto the
  /// target (identity for Ground; for Excited, the lowest-index Clifford that
  /// maps the product onto a |0> -> |1> flip).
  OrbitSequence generate_orbit_sequence(int length, Target target, std::mt19937_64& rng) const;

  /// Concatenated atomic decompositions, in execution order.
  std::vector<AtomicGate> compile(const OrbitSequence& seq) const;

  /// CSV with header "index,gates"; gates are space separated.
  void write_table_csv(std::ostream& os) const;

 private:
  CliffordGroup();

  std::vector<CliffordElement> elements_;
  std::array<std::array<int, kOrder>, kOrder> product_{};
  std::array<int, kOrder> inverse_{};
  int lowest_flip_ = -1;
};

/// Ideal target-state population |<target| U |0>|^2 on the qubit subspace.
double ideal_target_population(const Matrix2c& u, Target target);

}  // namespace orbitcal
