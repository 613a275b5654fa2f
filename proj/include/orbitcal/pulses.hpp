#pragma once

// DRAG and piecewise-constant control pulses, per-gate pulse variants and the
// flat parameter vector seen by the optimizers.
//
// Signal values are in rad/s (the coefficient c(t) multiplying a^dag + a).

#include "orbitcal/clifford.hpp"
#include "orbitcal/system.hpp"

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace orbitcal {

struct DragParams {
  double amplitude = 0.0;    ///< rad/s, peak of the in-phase envelope
  double drag_coeff = 0.0;   ///< s; weight of the derivative quadrature
  double drive_freq = 0.0;   ///< Hz
  double phase = 0.0;        ///< rad
  double gate_time = 16e-9;  ///< s
  double gauss_width = 4e-9; ///< s

  void validate() const;
};

/// Nominal DRAG pulse for the default system (4.8 GHz, -200 MHz): the point
/// minimizing the mean infidelity of X90p, Y90p, X180 and Y180, as found by
/// tools/reference_calibration.cpp. The drive sits 7.13 kHz above the qubit.
DragParams default_drag_params(double qubit_frequency = 4.8e9);

inline constexpr int kPwcSteps = 41;

struct PwcParams {
  std::array<double, kPwcSteps> inphase{};     ///< rad/s
  std::array<double, kPwcSteps> quadrature{};  ///< rad/s
  double drive_freq = 0.0;
  double phase = 0.0;
  double gate_time = 16e-9;

  void validate() const;
};

using PulseParams = std::variant<DragParams, PwcParams>;

/// Gaussian nulled at both ends and scaled to 1 at t_g/2. Throws outside [0, t_g].
double gaussian_envelope(double t, const DragParams& p);
/// Analytic time derivative of gaussian_envelope (1/s).
double gaussian_envelope_derivative(double t, const DragParams& p);

/// A Omega(t) cos(w_d t + phi) + eta A dOmega/dt(t) sin(w_d t + phi)
double drag_signal(double t, const DragParams& p);

/// Index floor(41 t / t_g) clamped to [0, 40].
int pwc_step_index(double t, double gate_time);
double pwc_signal(double t, const PwcParams& p);

/// Samples the DRAG in-phase and quadrature envelopes at the 41 step midpoints.
PwcParams discretize_drag(const DragParams& p);

/// A uniformly sampled control: values[k] = c((k + 1/2) step).
struct SampledSignal {
  double step = 0.0;
  std::vector<double> values;

  double duration() const { return step * static_cast<double>(values.size()); }
};

/// Continuous control for one atomic gate.
class GatePulse {
 public:
  GatePulse(PulseParams params, bool silent);

  double duration() const;
  bool silent() const { return silent_; }
  double drive_freq() const;
  /// Throws outside [0, duration()].
  double operator()(double t) const;
  /// Midpoint samples on ceil(duration / max_step) equal steps.
  SampledSignal sample(double max_step) const;
  const PulseParams& params() const { return params_; }

 private:
  PulseParams params_;
  bool silent_ = false;
};

/// Phase offset {X: 0, Y: pi/2}, sign flip for negative rotations, doubled
/// amplitude for 180-degree gates; Id is a silent pulse of the same length.
GatePulse gate_pulse(AtomicGate gate, const PulseParams& base);

/// Two-column CSV (time_s, inphase, quadrature, signal) on a uniform grid.
void write_pulse_csv(std::ostream& os, const PulseParams& p, int points);

enum class PulseMode { Drag, Pwc };
std::string_view to_string(PulseMode m);
PulseMode pulse_mode_from_string(std::string_view s);

/// Affine map between the optimizer's unit box and physical pulse parameters.
///
/// DRAG mode exposes {amplitude, drag_coeff, detuning}, detuning being
/// drive_freq - qubit_frequency in Hz; phase, gate time and width stay fixed.
/// PWC mode exposes the 41 in-phase then 41 quadrature step heights with the
/// carrier inherited from the DRAG reference.
class ParameterSpace {
 public:
  ParameterSpace(PulseMode mode, std::vector<std::string> names, std::vector<double> lower,
                 std::vector<double> upper, std::vector<double> nominal, PulseParams reference,
                 double qubit_frequency);

  PulseMode mode() const { return mode_; }
  std::size_t dimension() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<double>& nominal() const { return nominal_; }
  /// Throws std::out_of_range for an unknown identifier.
  std::size_t index_of(std::string_view name) const;

  std::vector<double> to_unit(std::span<const double> physical) const;
  std::vector<double> from_unit(std::span<const double> unit) const;
  /// Clamps into [lower, upper]; returns the number of clamped coordinates.
  std::size_t clamp(std::vector<double>& physical) const;
  bool contains(std::span<const double> physical) const;

  std::vector<double> to_vector(const PulseParams& p) const;
  PulseParams from_vector(std::span<const double> physical) const;

  /// Copy with the bounds of one coordinate replaced.
  ParameterSpace with_bounds(std::size_t index, double lo, double hi) const;

 private:
  PulseMode mode_;
  std::vector<std::string> names_;
  std::vector<double> lower_, upper_, nominal_;
  PulseParams reference_;
  double qubit_frequency_;
};

/// Relative/absolute half-widths of the DRAG search box around the nominal.
struct DragBounds {
  double amplitude_rel = 0.2;
  double drag_coeff_rel = 1.0;
  double detuning_abs = 5e6;  ///< Hz
};

/// Half-widths of each PWC step box as fractions of the largest in-phase or
/// quadrature step of the reference.
struct PwcBounds {
  double inphase_rel = 0.2;
  double quadrature_rel = 0.2;
};

ParameterSpace make_drag_space(const DragParams& nominal, double qubit_frequency,
                               const DragBounds& bounds = {});
ParameterSpace make_pwc_space(const PwcParams& nominal, double qubit_frequency,
                              const PwcBounds& bounds = {});

}  // namespace orbitcal
