#include "orbitcal/orbit_loss.hpp"

#include "orbitcal/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace orbitcal {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Unitary parity_conjugate(const Unitary& u) {
  Unitary out = u;
  // P = diag(1, -1, 1): flip the sign of entries coupling level 1 to 0 and 2.
  out(0, 1) = -out(0, 1);
  out(1, 0) = -out(1, 0);
  out(1, 2) = -out(1, 2);
  out(2, 1) = -out(2, 1);
  return out;
}

Unitary embed(const Matrix2c& u) {
  Unitary out = Unitary::Identity();
  out.topLeftCorner<2, 2>() = u;
  return out;
}

}  // namespace

Unitary drive_frame_propagator(const SystemConfig& sys, const GatePulse& pulse) {
  const double tg = pulse.duration();
  Unitary lab;
  if (pulse.silent()) {
    lab = drift_evolution(sys, tg);
  } else {
    const SampledSignal s = pulse.sample(sys.dt);
    lab = propagate(sys, s.values, s.step);
  }
  const double theta = kTwoPi * pulse.drive_freq() * tg;
  for (int n = 1; n < 3; ++n) {
    lab.row(n) *= std::polar(1.0, theta * n);
  }
  return lab;
}

PulseGateModel::PulseGateModel(SystemConfig sys) : sys_(sys) { sys_.validate(); }

GateUnitaries PulseGateModel::unitaries(const PulseParams& params) const {
  GateUnitaries out;
  auto idx = [](AtomicGate g) { return static_cast<std::size_t>(g); };
  for (const AtomicGate g : {AtomicGate::Id, AtomicGate::X90p, AtomicGate::Y90p,
                             AtomicGate::X180, AtomicGate::Y180}) {
    out[idx(g)] = drive_frame_propagator(sys_, gate_pulse(g, params));
  }
  out[idx(AtomicGate::X90m)] = parity_conjugate(out[idx(AtomicGate::X90p)]);
  out[idx(AtomicGate::Y90m)] = parity_conjugate(out[idx(AtomicGate::Y90p)]);
  return out;
}

GateUnitaries IdealGateModel::unitaries(const PulseParams&) const {
  GateUnitaries out;
  for (const AtomicGate g : kAtomicGates) {
    out[static_cast<std::size_t>(g)] = embed(ideal_su2(g));
  }
  return out;
}

double gate_fidelity(const Unitary& actual, const Matrix2c& ideal) {
  const Matrix2c m = ideal.adjoint() * actual.topLeftCorner<2, 2>();
  const double d = 2.0;
  return ((m * m.adjoint()).trace().real() + std::norm(m.trace())) / (d * (d + 1.0));
}

void OrbitConfig::validate() const {
  if (num_sequences < 1) throw std::invalid_argument("orbit: num_sequences must be >= 1");
  if (sequence_length < 1) throw std::invalid_argument("orbit: sequence_length must be >= 1");
  if (shots < 0) throw std::invalid_argument("orbit: shots must be >= 1, or 0 for exact");
  if (!(infidelity_floor > 0.0 && infidelity_floor < 1e-3)) {
    throw std::invalid_argument("orbit: infidelity_floor must lie in (0, 1e-3)");
  }
}

double measure_population(const QuantumState& psi, Target target) {
  return std::norm(psi(target == Target::Ground ? 0 : 1));
}

double sample_shots(double p, int shots, std::mt19937_64& rng) {
  if (shots < 1) throw std::invalid_argument("sample_shots: shots must be >= 1");
  std::binomial_distribution<int> draw(shots, std::clamp(p, 0.0, 1.0));
  return static_cast<double>(draw(rng)) / shots;
}

std::vector<OrbitSequence> draw_sequences(const OrbitConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  const auto& group = CliffordGroup::instance();
  std::vector<OrbitSequence> seqs;
  seqs.reserve(static_cast<std::size_t>(cfg.num_sequences));
  for (int n = 0; n < cfg.num_sequences; ++n) {
    seqs.push_back(group.generate_orbit_sequence(cfg.sequence_length, cfg.target, rng));
  }
  return seqs;
}

OrbitLoss::OrbitLoss(OrbitConfig cfg, ParameterSpace space, std::shared_ptr<const GateModel> model)
    : cfg_(cfg), space_(std::move(space)), model_(std::move(model)) {
  cfg_.validate();
  if (!model_) throw std::invalid_argument("orbit: gate model required");
  sequences_ = draw_sequences(cfg_, cfg_.sequence_seed);
}

OrbitLoss OrbitLoss::with_space(ParameterSpace space) const {
  return OrbitLoss(cfg_, std::move(space), model_);
}

double OrbitLoss::mean_population(std::span<const double> x,
                                  std::span<const OrbitSequence> seqs) const {
  const GateUnitaries gates = model_->unitaries(space_.from_vector(x));
  const auto& group = CliffordGroup::instance();
  std::array<Unitary, CliffordGroup::kOrder> cliffords;
  for (const auto& e : group.elements()) {
    Unitary u = Unitary::Identity();
    for (const AtomicGate g : e.decomposition) u = gates[static_cast<std::size_t>(g)] * u;
    cliffords[static_cast<std::size_t>(e.index)] = u;
  }
  double total = 0.0;
  for (const auto& seq : seqs) {
    QuantumState psi = basis_state(0);
    for (const int k : seq.clifford_indices) psi = cliffords[static_cast<std::size_t>(k)] * psi;
    total += measure_population(psi, seq.target);
  }
  return total / static_cast<double>(seqs.size());
}

LossEvaluation OrbitLoss::evaluate(std::span<const double> x, std::size_t eval_index,
                                   std::uint64_t noise_seed) const {
  const auto start = std::chrono::steady_clock::now();
  if (x.size() != space_.dimension()) {
    throw std::invalid_argument("orbit: parameter vector has wrong dimension");
  }
  LossEvaluation ev;
  ev.eval_index = eval_index;
  ev.x.assign(x.begin(), x.end());
  ev.clamped = space_.clamp(ev.x);

  double p = 0.0;
  if (cfg_.resample_sequences) {
    const auto fresh = draw_sequences(cfg_, derive_seed(noise_seed, "sequence", eval_index));
    p = mean_population(ev.x, fresh);
  } else {
    p = mean_population(ev.x, sequences_);
  }
  if (cfg_.shots > 0) {
    Rng rng = make_rng(noise_seed, "shots", eval_index);
    p = sample_shots(p, cfg_.shots, rng);
  }
  ev.mean_population = p;
  ev.loss = std::log(std::max(1.0 - p, cfg_.infidelity_floor));
  ev.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return ev;
}

void Landscape::write_csv(std::ostream& os) const {
  os << param_a << ',' << param_b << ",loss\n";
  char buf[128];
  for (std::size_t i = 0; i < values_a.size(); ++i) {
    for (std::size_t j = 0; j < values_b.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", values_a[i], values_b[j], at(i, j));
      os << buf;
    }
  }
}

Landscape landscape_scan(const OrbitLoss& loss, const std::string& param_a,
                         std::span<const double> values_a, const std::string& param_b,
                         std::span<const double> values_b) {
  if (values_a.empty() || values_b.empty()) {
    throw std::invalid_argument("landscape: grid of size 0");
  }
  const ParameterSpace& base = loss.space();
  const std::size_t ia = base.index_of(param_a);
  const std::size_t ib = base.index_of(param_b);
  auto widen = [](const ParameterSpace& s, std::size_t i, std::span<const double> v) {
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    const double lo = std::min(s.lower()[i], *mn);
    const double hi = std::max(s.upper()[i], *mx);
    return s.with_bounds(i, lo, hi);
  };
  ParameterSpace wide = widen(base, ia, values_a);
  if (ib != ia) wide = widen(wide, ib, values_b);
  const OrbitLoss scan = loss.with_space(wide);

  Landscape out{param_a, param_b, {values_a.begin(), values_a.end()},
                {values_b.begin(), values_b.end()}, {}};
  out.loss.reserve(values_a.size() * values_b.size());
  std::vector<double> x = base.nominal();
  for (const double a : values_a) {
    for (const double b : values_b) {
      x[ia] = a;
      x[ib] = b;
      out.loss.push_back(scan.evaluate(x).loss);
    }
  }
  return out;
}

int count_local_minima(std::span<const double> values) {
  int minima = 0;
  int last_sign = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double d = values[i] - values[i - 1];
    const int sign = d > 0 ? 1 : (d < 0 ? -1 : 0);
    if (sign == 0) continue;
    if (last_sign < 0 && sign > 0) ++minima;
    last_sign = sign;
  }
  return minima;
}

}  // namespace orbitcal
