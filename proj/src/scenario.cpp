#include "cvpol/scenario.hpp"

#include <cmath>

#include "cvpol/entanglement.hpp"
#include "cvpol/errors.hpp"

namespace cvpol {

using nlohmann::json;

ScenarioConfig ScenarioConfig::cold_atom_defaults() {
  ScenarioConfig c;
  // Descriptive context of the apparatus; not used by any computation.
  c.metadata = json{{"coupling_mirror_transmission", 0.1},
                    {"probe_detuning_mhz", -50.0},
                    {"probe_power_uw", json::array({5.0, 15.0})},
                    {"squeezing_band_mhz", json::array({3.0, 12.0})}};
  return c;
}

namespace {

double get_number(const json& j, const std::string& field) {
  if (!j.is_number()) throw PreconditionError("config field '" + field + "': expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw PreconditionError("config field '" + field + "': value must be finite");
  return v;
}

std::size_t get_count(const json& j, const std::string& field) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw PreconditionError("config field '" + field + "': expected a non-negative integer");
  return j.get<std::size_t>();
}

bool get_bool(const json& j, const std::string& field) {
  if (!j.is_boolean()) throw PreconditionError("config field '" + field + "': expected true/false");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& field) {
  if (!j.is_string()) throw PreconditionError("config field '" + field + "': expected a string");
  return j.get<std::string>();
}

std::array<double, 2> get_pair(const json& j, const std::string& field) {
  if (j.is_number()) {
    const double v = get_number(j, field);
    return {v, v};
  }
  if (!j.is_array() || j.size() != 2)
    throw PreconditionError("config field '" + field + "': expected a number or a two-element array");
  return {get_number(j[0], field + "[0]"), get_number(j[1], field + "[1]")};
}

}  // namespace

ScenarioConfig scenario_from_json(const json& j, ScenarioConfig c) {
  if (!j.is_object()) throw PreconditionError("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "v_min") {
      c.v_min = get_pair(value, key);
    } else if (key == "v_max") {
      if (value.is_null()) c.v_max.reset();
      else c.v_max = get_pair(value, key);
    } else if (key == "pure") {
      if (get_bool(value, key)) c.v_max.reset();
    } else if (key == "theta_sq") {
      c.theta_sq = get_number(value, key);
    } else if (key == "orthogonal") {
      c.orthogonal = get_bool(value, key);
    } else if (key == "efficiency" || key == "eta") {
      c.efficiency = get_number(value, key);
    } else if (key == "alpha_b") {
      c.alpha_b = get_number(value, key);
    } else if (key == "theta_b_policy") {
      c.theta_b_policy = get_string(value, key);
    } else if (key == "theta_b") {
      c.theta_b = get_number(value, key);
    } else if (key == "regime_factor") {
      c.regime_factor = get_number(value, key);
    } else if (key == "coherent_b_noise") {
      c.coherent_b_noise = get_bool(value, key);
    } else if (key == "jitter_sigma") {
      c.jitter_sigma = get_number(value, key);
    } else if (key == "jitter_draws") {
      c.jitter_draws = get_count(value, key);
    } else if (key == "seed") {
      if (!value.is_number_integer() || value.get<long long>() < 0)
        throw PreconditionError("config field 'seed': expected a non-negative integer");
      c.seed = value.get<std::uint64_t>();
    } else if (key == "analysis_frequency_mhz") {
      c.analysis_frequency_mhz = get_number(value, key);
    } else if (key == "metadata") {
      c.metadata = value;
    } else if (key == "scan") {
      if (!value.is_object()) throw PreconditionError("config field 'scan': expected an object");
      for (const auto& [skey, svalue] : value.items()) {
        const std::string name = "scan." + skey;
        if (skey == "points") c.scan.points = get_count(svalue, name);
        else if (skey == "start") c.scan.start = get_number(svalue, name);
        else if (skey == "stop") c.scan.stop = get_number(svalue, name);
        else if (skey == "samples_per_bin") c.scan.samples_per_bin = get_count(svalue, name);
        else if (skey == "basis") c.scan.basis = get_string(svalue, name);
        else throw PreconditionError("config: unknown field '" + name + "'");
      }
    } else {
      throw PreconditionError("config: unknown field '" + key + "'");
    }
  }
  validate(c);
  return c;
}

json scenario_to_json(const ScenarioConfig& c) {
  json j{{"v_min", c.v_min},
         {"theta_sq", c.theta_sq},
         {"orthogonal", c.orthogonal},
         {"efficiency", c.efficiency},
         {"alpha_b", c.alpha_b},
         {"theta_b_policy", c.theta_b_policy},
         {"theta_b", c.theta_b},
         {"regime_factor", c.regime_factor},
         {"coherent_b_noise", c.coherent_b_noise},
         {"jitter_sigma", c.jitter_sigma},
         {"jitter_draws", c.jitter_draws},
         {"seed", c.seed},
         {"analysis_frequency_mhz", c.analysis_frequency_mhz},
         {"metadata", c.metadata},
         {"scan",
          {{"points", c.scan.points},
           {"start", c.scan.start},
           {"stop", c.scan.stop},
           {"samples_per_bin", c.scan.samples_per_bin},
           {"basis", c.scan.basis}}}};
  j["v_max"] = c.v_max ? json(*c.v_max) : json(nullptr);
  return j;
}

void validate(const ScenarioConfig& c) {
  const auto params = [&] {
    try {
      return squeezing_params(c);
    } catch (const PreconditionError& e) {
      throw PreconditionError(std::string("config field 'v_min'/'v_max': ") + e.what());
    }
  }();
  for (int i = 0; i < 2; ++i) {
    try {
      cvpol::validate(params[i]);
    } catch (const PreconditionError& e) {
      throw PreconditionError("config field 'v_min'/'v_max' (mode " + std::to_string(i) + "): " + e.what());
    }
  }
  if (!(c.efficiency > 0 && c.efficiency <= 1))
    throw PreconditionError("config field 'efficiency': must lie in (0, 1]");
  if (!(c.alpha_b > 0)) throw PreconditionError("config field 'alpha_b': must be > 0");
  if (c.theta_b_policy != "locked" && c.theta_b_policy != "explicit")
    throw PreconditionError("config field 'theta_b_policy': expected \"locked\" or \"explicit\"");
  if (!(c.regime_factor > 0)) throw PreconditionError("config field 'regime_factor': must be > 0");
  if (c.jitter_sigma < 0) throw PreconditionError("config field 'jitter_sigma': must be >= 0");
  if (c.scan.points < 3) throw PreconditionError("config field 'scan.points': need at least 3 bins");
  if (!(c.scan.stop > c.scan.start)) throw PreconditionError("config field 'scan.stop': must exceed scan.start");
  if (c.scan.samples_per_bin < 2) throw PreconditionError("config field 'scan.samples_per_bin': must be >= 2");
  if (c.scan.basis != "pm45" && c.scan.basis != "xy")
    throw PreconditionError("config field 'scan.basis': expected \"pm45\" or \"xy\"");
}

std::array<SqueezingParams, 2> squeezing_params(const ScenarioConfig& c) {
  std::array<SqueezingParams, 2> p;
  for (int i = 0; i < 2; ++i) {
    if (!(c.v_min[i] > 0)) throw PreconditionError("v_min must be > 0");
    p[i].v_min = c.v_min[i];
    p[i].v_max = c.v_max ? (*c.v_max)[i] : 1.0 / c.v_min[i];
    p[i].theta_sq = c.theta_sq;
  }
  if (c.orthogonal) p[1].theta_sq = c.theta_sq + std::numbers::pi / 2;
  return p;
}

GaussianState scenario_state_xy(const ScenarioConfig& c) {
  const auto p = squeezing_params(c);
  return make_independent_squeezed_pair(p[0], p[1], "xy");
}

bool matches_pm45_modes(const Transform& t, double tolerance) {
  const double r = 1.0 / std::numbers::sqrt2;
  bool plus = false, minus = false;
  for (int row = 0; row < 2; ++row) {
    const std::complex<double> a = t.matrix()(row, 0), b = t.matrix()(row, 1);
    if (std::abs(std::abs(a) - r) > tolerance || std::abs(std::abs(b) - r) > tolerance) return false;
    const std::complex<double> ratio = b / a;  // +1 for the +45 mode, -1 for the -45 mode
    if (std::abs(ratio - 1.0) <= tolerance) plus = true;
    else if (std::abs(ratio + 1.0) <= tolerance) minus = true;
    else return false;
  }
  return plus && minus;
}

GaussianState to_pm45(const GaussianState& s_xy) {
  return apply_transform(s_xy, half_wave_plate(std::numbers::pi / 8), "pm45");
}

BrightBeamPair scenario_beam_pair(const ScenarioConfig& c) {
  BrightBeamPair pair;
  pair.state_pm45 = to_pm45(scenario_state_xy(c));
  pair.alpha_b = c.alpha_b;
  pair.regime_factor = c.regime_factor;
  pair.coherent_b_noise = c.coherent_b_noise;
  pair.theta_b = c.theta_b;
  if (c.theta_b_policy == "locked") return lock_phase_to_squeezing(pair, maximally_correlated_modes(pair.state_pm45));
  return pair;
}

}  // namespace cvpol
