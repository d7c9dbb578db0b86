#pragma once

// Scenario configuration shared by the command-line tool and the acceptance suite.

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>

#include "json.hpp"

#include "cvpol/gaussian_state.hpp"
#include "cvpol/stokes.hpp"

namespace cvpol {

struct ScanGrid {
  std::size_t points = 64;
  double start = 0;
  double stop = std::numbers::pi;
  std::size_t samples_per_bin = 10000;
  std::string basis = "pm45";  // Duan criterion measured: "pm45" or "xy"
};

/// Built-in defaults describe the cold-atom experiment: both polarization modes squeezed
/// by 5% along orthogonal quadratures, minimum-uncertainty, 5 MHz analysis frequency.
struct ScenarioConfig {
  std::array<double, 2> v_min{0.95, 0.95};
  std::optional<std::array<double, 2>> v_max;  // unset: minimum-uncertainty, v_max = 1 / v_min
  double theta_sq = 0;
  bool orthogonal = true;  // mode y squeezed along theta_sq + pi/2
  double efficiency = 5.0 / 7.0;
  double alpha_b = 1e4;
  std::string theta_b_policy = "locked";  // "locked" or "explicit"
  double theta_b = 0;
  double regime_factor = 1e3;
  bool coherent_b_noise = false;
  double jitter_sigma = 0;
  std::size_t jitter_draws = 10000;
  ScanGrid scan;
  std::uint64_t seed = 20040601;
  double analysis_frequency_mhz = 5.0;
  nlohmann::json metadata = nlohmann::json::object();

  static ScenarioConfig cold_atom_defaults();
};

/// Reads fields present in `j` over `base`; validates all values with field-level diagnostics.
ScenarioConfig scenario_from_json(const nlohmann::json& j, ScenarioConfig base = ScenarioConfig::cold_atom_defaults());
nlohmann::json scenario_to_json(const ScenarioConfig& c);

/// Throws PreconditionError naming the offending field.
void validate(const ScenarioConfig& c);

std::array<SqueezingParams, 2> squeezing_params(const ScenarioConfig& c);

/// Field fluctuations leaving the cavity, in the (x, y) basis.
GaussianState scenario_state_xy(const ScenarioConfig& c);

/// (+45, -45) modes: the (x, y) state after a half-wave plate at 22.5 degrees.
GaussianState to_pm45(const GaussianState& s_xy);

/// True when the rows of `t` are the +45 and -45 modes of the (x, y) basis, up to
/// mode phases and ordering.
bool matches_pm45_modes(const Transform& t, double tolerance = 1e-8);

/// Bright-beam configuration; theta_b follows the policy (locked: Duan-minimizing angle).
BrightBeamPair scenario_beam_pair(const ScenarioConfig& c);

}  // namespace cvpol
