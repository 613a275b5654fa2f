#pragma once

// Toolkit configuration: one TOML file with a table per module. Unknown keys
// are errors. Campaign manifests are written in the same format (plus a
// [manifest] table) so any manifest can be fed back as a config.

#include "orbitcal/hyperopt.hpp"
#include "orbitcal/orbit_loss.hpp"
#include "orbitcal/pulses.hpp"
#include "orbitcal/system.hpp"

#include <array>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace orbitcal {

/// Parse or validation failure; the message carries source, line and key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PulseSettings {
  PulseMode mode = PulseMode::Drag;
  DragParams drag = default_drag_params();
  DragBounds drag_bounds;
  PwcBounds pwc_bounds;
};

struct CampaignSettings {
  std::string problem = "drag";  ///< drag | pwc | analytic:<name>:<dim>
  std::vector<Algorithm> optimizers{kAllAlgorithms.begin(), kAllAlgorithms.end()};
  std::size_t num_seeds = 20;
  std::size_t eval_budget = 1000;
  double detuning_fraction = 0.05;
  std::string output_dir = "results";
};

struct HyperoptSettings {
  std::string problem = "drag";
  RatingConfig rating;
  std::size_t meta_budget = 30;
  std::uint64_t base_seed = 1;
};

struct LandscapeSettings {
  std::string param_a = "amplitude";
  std::string param_b = "drag_coeff";
  /// Scan range as multiples of the nominal value (offsets in Hz for detuning).
  double a_min = 0.0, a_max = 4.0;
  double b_min = -3.0, b_max = 3.0;
  std::size_t a_points = 101, b_points = 41;
  int num_sequences = 1;
  int sequence_length = 80;
};

struct ToolkitConfig {
  std::uint64_t seed = 1;
  std::size_t workers = 0;  ///< 0 = all available cores
  SystemConfig system;
  PulseSettings pulse;
  OrbitConfig orbit;
  CampaignSettings campaign;
  HyperoptSettings hyperopt;
  LandscapeSettings landscape;
  /// Hyperparameters per algorithm, indexed by Algorithm.
  std::array<Hyperparams, 6> hyperparams = {
      CmaEsParams{}, NelderMeadParams{}, PowellParams{}, OnePlusOneParams{},
      DifferentialEvolutionParams{}, SimulatedAnnealingParams{}};

  const Hyperparams& hyperparams_for(Algorithm a) const {
    return hyperparams[static_cast<std::size_t>(a)];
  }
  std::size_t effective_workers() const;
  void validate() const;
};

ToolkitConfig parse_config(std::string_view text, const std::string& source = "<config>");
ToolkitConfig load_config(const std::filesystem::path& path);

/// Full config as TOML; every double is written with round-trip precision.
std::string to_toml(const ToolkitConfig& cfg);

/// Config plus a [manifest] table recording the command and run seeds.
std::string manifest_toml(const ToolkitConfig& cfg, const std::string& command,
                          const std::vector<std::uint64_t>& run_seeds);

/// Builds the problem named by `spec` (drag, pwc, analytic:<name>:<dim>).
std::unique_ptr<Problem> make_problem(const ToolkitConfig& cfg, const std::string& spec);
/// Problem for the configured pulse mode.
std::unique_ptr<Problem> make_pulse_problem(const ToolkitConfig& cfg);
/// The configured nominal pulse in the configured mode.
PulseParams nominal_pulse(const ToolkitConfig& cfg);

/// Campaign settings of `cfg` with the configured hyperparameters per optimizer.
CampaignConfig campaign_config(const ToolkitConfig& cfg);

/// DRAG loss with the landscape's sequence count and length.
OrbitLoss landscape_loss(const ToolkitConfig& cfg);
/// `n` grid points for a landscape axis: nominal times multipliers spanning
/// [lo, hi], or nominal plus an offset in [lo, hi] Hz for detuning.
std::vector<double> landscape_axis(const ParameterSpace& space, const std::string& name, double lo,
                                   double hi, std::size_t n);

}  // namespace orbitcal
