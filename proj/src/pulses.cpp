#include "orbitcal/pulses.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace orbitcal {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_time(double t, double gate_time) {
  if (!(t >= 0.0 && t <= gate_time)) {
    throw std::out_of_range("pulse time outside [0, gate_time]");
  }
}

double boundary_offset(const DragParams& p) {
  return std::exp(-p.gate_time * p.gate_time / (8.0 * p.gauss_width * p.gauss_width));
}

double carrier_arg(double t, double drive_freq, double phase) {
  return kTwoPi * drive_freq * t + phase;
}

std::string step_name(const char* prefix, int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%02d", prefix, k);
  return buf;
}

}  // namespace

DragParams default_drag_params(double qubit_frequency) {
  DragParams p;
  p.amplitude = 184526821.65384451;
  p.drag_coeff = 3.9199136291903065e-10;
  p.drive_freq = qubit_frequency + 7133.2044076919556;
  return p;
}

void DragParams::validate() const {
  if (!(gate_time > 0.0)) throw std::invalid_argument("drag: gate_time must be positive");
  if (!(gauss_width > 0.0)) throw std::invalid_argument("drag: gauss_width must be positive");
  if (!std::isfinite(amplitude)) throw std::invalid_argument("drag: amplitude must be finite");
  if (!std::isfinite(drag_coeff) || !std::isfinite(drive_freq) || !std::isfinite(phase)) {
    throw std::invalid_argument("drag: parameters must be finite");
  }
}

void PwcParams::validate() const {
  if (!(gate_time > 0.0)) throw std::invalid_argument("pwc: gate_time must be positive");
  for (int k = 0; k < kPwcSteps; ++k) {
    if (!std::isfinite(inphase[k]) || !std::isfinite(quadrature[k])) {
      throw std::invalid_argument("pwc: step values must be finite");
    }
  }
}

double gaussian_envelope(double t, const DragParams& p) {
  check_time(t, p.gate_time);
  const double u = t - p.gate_time / 2;
  const double g = std::exp(-u * u / (2.0 * p.gauss_width * p.gauss_width));
  const double o = boundary_offset(p);
  return (g - o) / (1.0 - o);
}

double gaussian_envelope_derivative(double t, const DragParams& p) {
  check_time(t, p.gate_time);
  const double s2 = p.gauss_width * p.gauss_width;
  const double u = t - p.gate_time / 2;
  const double g = std::exp(-u * u / (2.0 * s2));
  return -g * u / s2 / (1.0 - boundary_offset(p));
}

double drag_signal(double t, const DragParams& p) {
  const double arg = carrier_arg(t, p.drive_freq, p.phase);
  return p.amplitude * gaussian_envelope(t, p) * std::cos(arg) +
         p.drag_coeff * p.amplitude * gaussian_envelope_derivative(t, p) * std::sin(arg);
}

int pwc_step_index(double t, double gate_time) {
  const int k = static_cast<int>(std::floor(kPwcSteps * t / gate_time));
  return std::clamp(k, 0, kPwcSteps - 1);
}

double pwc_signal(double t, const PwcParams& p) {
  check_time(t, p.gate_time);
  const int k = pwc_step_index(t, p.gate_time);
  const double arg = carrier_arg(t, p.drive_freq, p.phase);
  return p.inphase[k] * std::cos(arg) + p.quadrature[k] * std::sin(arg);
}

PwcParams discretize_drag(const DragParams& p) {
  PwcParams out;
  out.drive_freq = p.drive_freq;
  out.phase = p.phase;
  out.gate_time = p.gate_time;
  for (int k = 0; k < kPwcSteps; ++k) {
    const double mid = (k + 0.5) * p.gate_time / kPwcSteps;
    out.inphase[k] = p.amplitude * gaussian_envelope(mid, p);
    out.quadrature[k] = p.drag_coeff * p.amplitude * gaussian_envelope_derivative(mid, p);
  }
  return out;
}

GatePulse::GatePulse(PulseParams params, bool silent) : params_(std::move(params)), silent_(silent) {
  std::visit([](const auto& p) { p.validate(); }, params_);
}

double GatePulse::duration() const {
  return std::visit([](const auto& p) { return p.gate_time; }, params_);
}

double GatePulse::drive_freq() const {
  return std::visit([](const auto& p) { return p.drive_freq; }, params_);
}

double GatePulse::operator()(double t) const {
  check_time(t, duration());
  if (silent_) return 0.0;
  return std::visit(
      [t](const auto& p) {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, DragParams>) {
          return drag_signal(t, p);
        } else {
          return pwc_signal(t, p);
        }
      },
      params_);
}

SampledSignal GatePulse::sample(double max_step) const {
  if (!(max_step > 0.0)) throw std::invalid_argument("sample: step must be positive");
  const double d = duration();
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(d / max_step - 1e-9)));
  SampledSignal s;
  s.step = d / static_cast<double>(n);
  s.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    s.values[k] = silent_ ? 0.0 : (*this)((static_cast<double>(k) + 0.5) * s.step);
  }
  return s;
}

GatePulse gate_pulse(AtomicGate gate, const PulseParams& base) {
  const GateRotation rot = rotation_of(gate);
  if (gate == AtomicGate::Id) return GatePulse(base, true);
  // Pulses are calibrated as +pi/2 rotations.
  const double scale = rot.angle / (std::numbers::pi / 2);
  PulseParams p = base;
  std::visit(
      [&](auto& q) {
        q.phase += rot.phase;
        if constexpr (std::is_same_v<std::decay_t<decltype(q)>, DragParams>) {
          q.amplitude *= scale;
        } else {
          for (double& v : q.inphase) v *= scale;
          for (double& v : q.quadrature) v *= scale;
        }
      },
      p);
  return GatePulse(std::move(p), false);
}

void write_pulse_csv(std::ostream& os, const PulseParams& p, int points) {
  if (points < 2) throw std::invalid_argument("write_pulse_csv: need at least 2 points");
  const double tg = std::visit([](const auto& q) { return q.gate_time; }, p);
  os << "time_s,inphase,quadrature,signal\n";
  char buf[160];
  for (int i = 0; i < points; ++i) {
    const double t = tg * i / (points - 1);
    double in = 0, quad = 0, sig = 0;
    if (const auto* d = std::get_if<DragParams>(&p)) {
      in = d->amplitude * gaussian_envelope(t, *d);
      quad = d->drag_coeff * d->amplitude * gaussian_envelope_derivative(t, *d);
      sig = drag_signal(t, *d);
    } else {
      const auto& w = std::get<PwcParams>(p);
      const int k = pwc_step_index(t, w.gate_time);
      in = w.inphase[k];
      quad = w.quadrature[k];
      sig = pwc_signal(t, w);
    }
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", t, in, quad, sig);
    os << buf;
  }
}

std::string_view to_string(PulseMode m) { return m == PulseMode::Drag ? "drag" : "pwc"; }

PulseMode pulse_mode_from_string(std::string_view s) {
  if (s == "drag") return PulseMode::Drag;
  if (s == "pwc") return PulseMode::Pwc;
  throw std::invalid_argument("unknown pulse mode: " + std::string(s));
}

ParameterSpace::ParameterSpace(PulseMode mode, std::vector<std::string> names,
                               std::vector<double> lower, std::vector<double> upper,
                               std::vector<double> nominal, PulseParams reference,
                               double qubit_frequency)
    : mode_(mode),
      names_(std::move(names)),
      lower_(std::move(lower)),
      upper_(std::move(upper)),
      nominal_(std::move(nominal)),
      reference_(std::move(reference)),
      qubit_frequency_(qubit_frequency) {
  const std::size_t n = names_.size();
  if (lower_.size() != n || upper_.size() != n || nominal_.size() != n) {
    throw std::invalid_argument("parameter space: inconsistent dimensions");
  }
  if (mode_ == PulseMode::Pwc && n != 2 * kPwcSteps) {
    throw std::invalid_argument("parameter space: PWC mode needs 82 parameters");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lower_[i] < upper_[i]) || !std::isfinite(lower_[i]) || !std::isfinite(upper_[i])) {
      throw std::invalid_argument("parameter space: bad bounds for " + names_[i]);
    }
  }
}

std::size_t ParameterSpace::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw std::out_of_range("unknown parameter: " + std::string(name));
}

std::vector<double> ParameterSpace::to_unit(std::span<const double> physical) const {
  std::vector<double> u(physical.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = (physical[i] - lower_[i]) / (upper_[i] - lower_[i]);
  }
  return u;
}

std::vector<double> ParameterSpace::from_unit(std::span<const double> unit) const {
  std::vector<double> x(unit.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = lower_[i] + unit[i] * (upper_[i] - lower_[i]);
  }
  return x;
}

std::size_t ParameterSpace::clamp(std::vector<double>& physical) const {
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < physical.size(); ++i) {
    const double c = std::clamp(physical[i], lower_[i], upper_[i]);
    if (c != physical[i]) ++clamped;
    physical[i] = c;
  }
  return clamped;
}

bool ParameterSpace::contains(std::span<const double> physical) const {
  for (std::size_t i = 0; i < physical.size(); ++i) {
    if (physical[i] < lower_[i] || physical[i] > upper_[i]) return false;
  }
  return true;
}

std::vector<double> ParameterSpace::to_vector(const PulseParams& p) const {
  if (mode_ == PulseMode::Drag) {
    const auto& d = std::get<DragParams>(p);
    return {d.amplitude, d.drag_coeff, d.drive_freq - qubit_frequency_};
  }
  const auto& w = std::get<PwcParams>(p);
  std::vector<double> x(w.inphase.begin(), w.inphase.end());
  x.insert(x.end(), w.quadrature.begin(), w.quadrature.end());
  return x;
}

PulseParams ParameterSpace::from_vector(std::span<const double> physical) const {
  if (physical.size() != dimension()) {
    throw std::invalid_argument("parameter vector has wrong dimension");
  }
  if (mode_ == PulseMode::Drag) {
    DragParams d = std::get<DragParams>(reference_);
    d.amplitude = physical[0];
    d.drag_coeff = physical[1];
    d.drive_freq = qubit_frequency_ + physical[2];
    return d;
  }
  PwcParams w = std::get<PwcParams>(reference_);
  std::copy_n(physical.begin(), kPwcSteps, w.inphase.begin());
  std::copy_n(physical.begin() + kPwcSteps, kPwcSteps, w.quadrature.begin());
  return w;
}

ParameterSpace ParameterSpace::with_bounds(std::size_t index, double lo, double hi) const {
  ParameterSpace copy = *this;
  copy.lower_.at(index) = lo;
  copy.upper_.at(index) = hi;
  if (!(lo < hi)) throw std::invalid_argument("with_bounds: empty interval");
  return copy;
}

ParameterSpace make_drag_space(const DragParams& nominal, double qubit_frequency,
                               const DragBounds& bounds) {
  nominal.validate();
  const double a = nominal.amplitude;
  const double eta = nominal.drag_coeff;
  const double det = nominal.drive_freq - qubit_frequency;
  const double wa = bounds.amplitude_rel * std::abs(a);
  // A zero DRAG coefficient gets a box scaled to the gate time.
  const double we = eta != 0.0 ? bounds.drag_coeff_rel * std::abs(eta)
                               : bounds.drag_coeff_rel * nominal.gate_time / 16.0;
  return ParameterSpace(PulseMode::Drag, {"amplitude", "drag_coeff", "detuning"},
                        {a - wa, eta - we, det - bounds.detuning_abs},
                        {a + wa, eta + we, det + bounds.detuning_abs}, {a, eta, det}, nominal,
                        qubit_frequency);
}

ParameterSpace make_pwc_space(const PwcParams& nominal, double qubit_frequency,
                              const PwcBounds& bounds) {
  nominal.validate();
  double max_in = 0, max_q = 0;
  for (int k = 0; k < kPwcSteps; ++k) {
    max_in = std::max(max_in, std::abs(nominal.inphase[k]));
    max_q = std::max(max_q, std::abs(nominal.quadrature[k]));
  }
  const double wi = bounds.inphase_rel * (max_in > 0 ? max_in : 1.0);
  const double wq = bounds.quadrature_rel * (max_q > 0 ? max_q : wi / bounds.inphase_rel);
  std::vector<std::string> names;
  std::vector<double> lo, hi, nom;
  for (int k = 0; k < kPwcSteps; ++k) {
    names.push_back(step_name("inphase", k));
    nom.push_back(nominal.inphase[k]);
    lo.push_back(nominal.inphase[k] - wi);
    hi.push_back(nominal.inphase[k] + wi);
  }
  for (int k = 0; k < kPwcSteps; ++k) {
    names.push_back(step_name("quadrature", k));
    nom.push_back(nominal.quadrature[k]);
    lo.push_back(nominal.quadrature[k] - wq);
    hi.push_back(nominal.quadrature[k] + wq);
  }
  return ParameterSpace(PulseMode::Pwc, std::move(names), std::move(lo), std::move(hi),
                        std::move(nom), nominal, qubit_frequency);
}

}  // namespace orbitcal
