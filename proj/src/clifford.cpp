#include "orbitcal/clifford.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

namespace orbitcal {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr double kMatchTolerance = 1e-10;

// Generators tried when building the table, in preference order.
constexpr std::array<AtomicGate, 6> kGenerators = {AtomicGate::X90p, AtomicGate::X90m,
                                                   AtomicGate::Y90p, AtomicGate::Y90m,
                                                   AtomicGate::X180, AtomicGate::Y180};

}  // namespace

std::string_view to_string(AtomicGate g) {
  switch (g) {
    case AtomicGate::Id: return "Id";
    case AtomicGate::X90p: return "X90p";
    case AtomicGate::X90m: return "X90m";
    case AtomicGate::Y90p: return "Y90p";
    case AtomicGate::Y90m: return "Y90m";
    case AtomicGate::X180: return "X180";
    case AtomicGate::Y180: return "Y180";
  }
  throw std::invalid_argument("unknown gate tag");
}

AtomicGate atomic_gate_from_string(std::string_view tag) {
  for (const AtomicGate g : kAtomicGates) {
    if (to_string(g) == tag) return g;
  }
  throw std::invalid_argument("unknown gate tag: " + std::string(tag));
}

GateRotation rotation_of(AtomicGate g) {
  switch (g) {
    case AtomicGate::Id: return {0.0, 0.0};
    case AtomicGate::X90p: return {kPi / 2, 0.0};
    case AtomicGate::X90m: return {-kPi / 2, 0.0};
    case AtomicGate::Y90p: return {kPi / 2, kPi / 2};
    case AtomicGate::Y90m: return {-kPi / 2, kPi / 2};
    case AtomicGate::X180: return {kPi, 0.0};
    case AtomicGate::Y180: return {kPi, kPi / 2};
  }
  throw std::invalid_argument("unknown gate tag");
}

Matrix2c rotation_su2(double angle, double phase) {
  const double c = std::cos(angle / 2);
  const double s = std::sin(angle / 2);
  // n . sigma with n = (cos phase, -sin phase, 0)
  const cd off = cd(std::cos(phase), std::sin(phase));  // (0,1) element is nx - i ny
  Matrix2c u;
  u(0, 0) = c;
  u(1, 1) = c;
  u(0, 1) = cd(0, -s) * off;
  u(1, 0) = cd(0, -s) * std::conj(off);
  return u;
}

Matrix2c ideal_su2(AtomicGate g) {
  const GateRotation r = rotation_of(g);
  return rotation_su2(r.angle, r.phase);
}

double trace_fidelity(const Matrix2c& a, const Matrix2c& b) {
  return std::abs((a.adjoint() * b).trace()) / 2.0;
}

bool same_up_to_phase(const Matrix2c& a, const Matrix2c& b) {
  return trace_fidelity(a, b) > 1.0 - kMatchTolerance;
}

std::string_view to_string(Target t) { return t == Target::Ground ? "ground" : "excited"; }

Target target_from_string(std::string_view s) {
  if (s == "ground") return Target::Ground;
  if (s == "excited") return Target::Excited;
  throw std::invalid_argument("unknown ORBIT target: " + std::string(s));
}

double ideal_target_population(const Matrix2c& u, Target target) {
  const int row = target == Target::Ground ? 0 : 1;
  return std::norm(u(row, 0));
}

const CliffordGroup& CliffordGroup::instance() {
  static const CliffordGroup group;
  return group;
}

CliffordGroup::CliffordGroup() {
  elements_.push_back({0, Matrix2c::Identity(), {AtomicGate::Id}});

  // Breadth-first over words of increasing length; the first word reaching a
  // new element becomes its decomposition. Words are in execution order.
  std::vector<std::vector<AtomicGate>> frontier{{}};
  for (int length = 1; length <= 3 && static_cast<int>(elements_.size()) < kOrder; ++length) {
    std::vector<std::vector<AtomicGate>> next;
    for (const auto& word : frontier) {
      for (const AtomicGate g : kGenerators) {
        auto extended = word;
        extended.push_back(g);
        Matrix2c u = Matrix2c::Identity();
        for (const AtomicGate step : extended) u = ideal_su2(step) * u;
        if (find(u) < 0) {
          elements_.push_back({static_cast<int>(elements_.size()), u, extended});
        }
        next.push_back(std::move(extended));
      }
    }
    frontier = std::move(next);
  }
  if (static_cast<int>(elements_.size()) != kOrder) {
    throw std::logic_error("Clifford table construction did not reach 24 elements");
  }

  for (int a = 0; a < kOrder; ++a) {
    for (int b = 0; b < kOrder; ++b) {
      const int k = find(elements_[a].ideal_su2 * elements_[b].ideal_su2);
      if (k < 0) throw std::logic_error("Clifford table is not closed");
      product_[a][b] = k;
      if (k == kIdentity) inverse_[a] = b;
    }
  }
  for (int k = 0; k < kOrder; ++k) {
    if (std::abs(std::norm(elements_[k].ideal_su2(1, 0)) - 1.0) < kMatchTolerance) {
      lowest_flip_ = k;
      break;
    }
  }
}

const CliffordElement& CliffordGroup::element(int index) const {
  if (index < 0 || index >= kOrder) {
    throw std::out_of_range("Clifford index out of range: " + std::to_string(index));
  }
  return elements_[index];
}

int CliffordGroup::multiply(int a, int b) const {
  element(a);
  element(b);
  return product_[a][b];
}

int CliffordGroup::inverse(int a) const {
  element(a);
  return inverse_[a];
}

int CliffordGroup::find(const Matrix2c& u) const {
  for (const auto& e : elements_) {
    if (same_up_to_phase(e.ideal_su2, u)) return e.index;
  }
  return -1;
}

Matrix2c CliffordGroup::ideal_product(std::span<const int> indices) const {
  Matrix2c u = Matrix2c::Identity();
  for (const int k : indices) u = element(k).ideal_su2 * u;
  return u;
}

OrbitSequence CliffordGroup::generate_orbit_sequence(int length, Target target,
                                                     std::mt19937_64& rng) const {
  if (length < 1) {
    throw std::invalid_argument("ORBIT sequence length must be >= 1");
  }
  OrbitSequence seq;
  seq.target = target;
  seq.clifford_indices.reserve(static_cast<std::size_t>(length));
  std::uniform_int_distribution<int> pick(0, kOrder - 1);
  int product = kIdentity;
  for (int i = 0; i + 1 < length; ++i) {
    const int k = pick(rng);
    seq.clifford_indices.push_back(k);
    product = product_[k][product];
  }
  const int undo = inverse_[product];
  if (target == Target::Ground) {
    seq.clifford_indices.push_back(undo);
  } else {
    // The closing element c satisfies c * product = flip * r for some flip
    // mapping |0> to |1>; the lowest-index flip candidate is taken.
    int closing = -1;
    for (int c = 0; c < kOrder; ++c) {
      const Matrix2c total = elements_[product_[c][product]].ideal_su2;
      if (std::abs(std::norm(total(1, 0)) - 1.0) < kMatchTolerance) {
        closing = c;
        break;
      }
    }
    seq.clifford_indices.push_back(closing);
  }
  return seq;
}

std::vector<AtomicGate> CliffordGroup::compile(const OrbitSequence& seq) const {
  std::vector<AtomicGate> gates;
  for (const int k : seq.clifford_indices) {
    const auto& d = element(k).decomposition;
    gates.insert(gates.end(), d.begin(), d.end());
  }
  return gates;
}

void CliffordGroup::write_table_csv(std::ostream& os) const {
  os << "index,gates\n";
  for (const auto& e : elements_) {
    os << e.index << ',';
    for (std::size_t i = 0; i < e.decomposition.size(); ++i) {
      if (i) os << ' ';
      os << to_string(e.decomposition[i]);
    }
    os << '\n';
  }
}

}  // namespace orbitcal
