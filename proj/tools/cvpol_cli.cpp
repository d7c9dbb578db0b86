// cvpol: command-line front end.
//
// Exit codes: 0 entangled / success, 1 separable result or out-of-band value,
// 2 input error, 3 numerical non-convergence.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cvpol/entanglement.hpp"
#include "cvpol/errors.hpp"
#include "cvpol/homodyne.hpp"
#include "cvpol/io.hpp"
#include "cvpol/scenario.hpp"
#include "cvpol/stokes.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kSeparable = 1, kInputError = 2, kNonConvergence = 3 };

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<double> eta;
  std::string format = "text";
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "Scenario JSON file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Random seed (overrides config)");
  cmd->add_option("--out", f.out_dir, "Output directory");
  cmd->add_option("--eta", f.eta, "Detection efficiency in (0, 1] (overrides config)");
  cmd->add_option("--format", f.format, "Output format")->check(CLI::IsMember({"text", "json", "csv"}));
}

// File fields first, then command-line flags.
cvpol::ScenarioConfig load_config(const CommonFlags& f) {
  json overrides = json::object();
  if (!f.config_path.empty()) {
    try {
      overrides = cvpol::parse_json_text(cvpol::read_text_file(f.config_path));
    } catch (const cvpol::FormatError& e) {
      throw cvpol::FormatError(f.config_path + ": " + e.what());
    }
  }
  if (f.seed) overrides["seed"] = *f.seed;
  if (f.eta) overrides["efficiency"] = *f.eta;
  try {
    return cvpol::scenario_from_json(overrides);
  } catch (const cvpol::PreconditionError& e) {
    throw cvpol::PreconditionError((f.config_path.empty() ? std::string("flags") : f.config_path) + ": " + e.what());
  }
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string fmt(double v, int digits = 12) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

struct Check {
  std::string name;
  double value;
  double lo;
  double hi;
  bool ok() const { return value >= lo && value <= hi; }
};

int cmd_replicate(const CommonFlags& f) {
  const cvpol::ScenarioConfig c = load_config(f);
  const cvpol::GaussianState xy = cvpol::scenario_state_xy(c);
  const cvpol::GaussianState pm45 = cvpol::to_pm45(xy);

  const double i_min = cvpol::duan_minimize_theta(pm45).value;
  const cvpol::EntanglementReport report = cvpol::maximally_correlated_modes(xy);
  const double corrected = cvpol::correct_losses(i_min, c.efficiency);
  const double eof = cvpol::eof_symmetric(corrected);
  const cvpol::StokesReport stokes = cvpol::stokes_sum_variances(cvpol::scenario_beam_pair(c));
  const bool pm45_optimal = cvpol::matches_pm45_modes(report.basis_star);

  const std::vector<Check> checks{
      {"I_pm45_min", i_min, 1.9 - 1e-9, 1.9 + 1e-9},
      {"I_star", report.i_star, 1.9 - 1e-9, 1.9 + 1e-9},
      {"I_loss_corrected", corrected, 1.86 - 0.02, 1.86 + 0.02},
      {"eof", eof, 0.011, 0.017},
      {"I_stokes_normalized", stokes.i_stokes_normalized, 1.9 - 1e-9, 1.9 + 1e-9},
  };
  bool all_ok = pm45_optimal;
  for (const auto& k : checks) all_ok = all_ok && k.ok();

  json j{{"convention", cvpol::kConventionTag}, {"efficiency", c.efficiency}, {"pm45_basis_optimal", pm45_optimal},
         {"theta_sq", report.theta_star}, {"passed", all_ok}, {"quantities", json::array()}};
  for (const auto& k : checks)
    j["quantities"].push_back({{"name", k.name}, {"value", k.value}, {"lo", k.lo}, {"hi", k.hi}, {"ok", k.ok()}});

  if (!f.out_dir.empty()) write_file(prepare_out(f.out_dir) / "replicate.json", j.dump(2) + "\n");
  if (f.format == "json") {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "scenario: v_min = (" << c.v_min[0] << ", " << c.v_min[1] << "), "
              << (c.v_max ? "impure" : "minimum uncertainty") << ", "
              << (c.orthogonal ? "orthogonal" : "parallel") << " squeezed quadratures\n";
    std::cout << "maximally correlated modes are the +/-45 modes: " << (pm45_optimal ? "yes" : "NO") << "\n";
    for (const auto& k : checks) {
      std::cout << "  " << k.name << " = " << fmt(k.value) << "  [" << fmt(k.lo, 6) << ", " << fmt(k.hi, 6) << "]  "
                << (k.ok() ? "ok" : "OUT OF BAND") << "\n";
    }
    std::cout << "efficiency used for loss correction: " << fmt(c.efficiency) << "\n";
  }
  if (!all_ok) {
    for (const auto& k : checks)
      if (!k.ok()) std::cerr << "replicate: " << k.name << " = " << fmt(k.value) << " outside expected band\n";
    if (!pm45_optimal) std::cerr << "replicate: optimal basis is not the +/-45 pair\n";
    return kSeparable;
  }
  return kOk;
}

int cmd_optimize(const CommonFlags& f, const std::string& state_path) {
  const cvpol::GaussianState s = cvpol::read_state_file(state_path);
  const cvpol::EntanglementReport r = cvpol::maximally_correlated_modes(s);
  const std::string text = cvpol::report_to_json(r).dump(2) + "\n";
  if (!f.out_dir.empty()) write_file(prepare_out(f.out_dir) / "report.json", text);
  std::cout << text;
  return r.entangled() ? kOk : kSeparable;
}

int cmd_eof(const CommonFlags& f, double i_value) {
  const double corrected = f.eta ? cvpol::correct_losses(i_value, *f.eta) : i_value;
  const double eof = cvpol::eof_symmetric(corrected);
  if (f.format == "json") {
    std::cout << json{{"i_value", i_value}, {"i_corrected", corrected}, {"eof", eof}}.dump(2) << "\n";
  } else {
    if (f.eta) std::cout << "I (loss corrected, eta=" << fmt(*f.eta) << ") = " << fmt(corrected) << "\n";
    std::cout << "EOF = " << fmt(eof) << "\n";
  }
  return corrected < 2 ? kOk : kSeparable;
}

void print_scan_summary(const cvpol::ScanEstimate& est, std::ostream& os) {
  const auto best = std::min_element(est.bins.begin(), est.bins.end(), [](const auto& a, const auto& b) {
    return a.i_plus_estimate < b.i_plus_estimate;
  });
  const cvpol::FlatnessTest flat = cvpol::flatness_test(est);
  const cvpol::PeriodicFit fit = cvpol::fit_periodic(est);
  os << "fitted min I = " << fmt(fit.min_value, 6) << " at theta = " << fmt(fit.theta_min, 6) << " rad\n";
  os << "min binned I = " << fmt(best->i_plus_estimate, 6) << " +/- " << fmt(best->stderr_i, 2)
     << " at theta = " << fmt(best->theta_center, 6) << " rad; slope = " << fmt(flat.slope, 4)
     << " (t = " << fmt(flat.t_statistic, 3) << ", " << (flat.flat ? "flat" : "theta-dependent") << " at 95%)\n";
  for (const auto& w : est.warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_scan(const CommonFlags& f) {
  const cvpol::ScenarioConfig c = load_config(f);
  const cvpol::GaussianState xy = cvpol::scenario_state_xy(c);
  const cvpol::GaussianState analyzed = c.scan.basis == "pm45" ? cvpol::to_pm45(xy) : xy;
  const cvpol::GaussianState detected = cvpol::duan_detection_state(analyzed);

  const auto ramp = cvpol::uniform_ramp(c.scan.points, c.scan.start, c.scan.stop);
  cvpol::HomodyneTrace trace = cvpol::simulate_scan(detected, ramp, c.scan.samples_per_bin, c.seed,
                                                    c.analysis_frequency_mhz);
  trace.state_ref = "state.json";
  const cvpol::ScanEstimate est = cvpol::estimate_scan(trace);

  const fs::path out = prepare_out(f.out_dir.empty() ? "." : f.out_dir);
  cvpol::emit_trace_csv(trace, (out / "trace.csv").string());
  write_file(out / "trace.json", cvpol::trace_sidecar_json(trace).dump(2) + "\n");
  write_file(out / "state.json", cvpol::state_to_json(analyzed).dump(2) + "\n");
  std::ostringstream est_csv;
  cvpol::emit_estimate_csv(est, est_csv);
  write_file(out / "estimate.csv", est_csv.str());

  std::cout << "analyzed basis " << c.scan.basis << ", analytic min I = "
            << fmt(cvpol::duan_minimize_theta(analyzed).value, 6) << "\n";
  print_scan_summary(est, std::cout);
  return kOk;
}

int cmd_stokes(const CommonFlags& f) {
  const cvpol::ScenarioConfig c = load_config(f);
  const cvpol::BrightBeamPair pair = cvpol::scenario_beam_pair(c);
  cvpol::StokesReport r = cvpol::stokes_sum_variances(pair);
  json j = cvpol::stokes_report_to_json(r);
  j["theta_b"] = pair.theta_b;
  j["alpha_b"] = pair.alpha_b;
  if (c.jitter_sigma > 0) {
    cvpol::CounterRng rng(c.seed, 0);
    const double averaged =
        cvpol::jittered_stokes_criterion(pair, c.jitter_sigma, static_cast<int>(c.jitter_draws), rng);
    j["jitter_sigma"] = c.jitter_sigma;
    j["i_stokes_normalized_jitter_avg"] = averaged;
  }
  const std::string text = j.dump(2) + "\n";
  if (!f.out_dir.empty()) write_file(prepare_out(f.out_dir) / "stokes.json", text);
  if (f.format == "json") {
    std::cout << text;
  } else {
    std::cout << "I^S / |alpha_B|^2 = " << fmt(r.i_stokes_normalized) << " at theta_B = " << fmt(pair.theta_b, 6)
              << " -> " << (r.entangled ? "entangled" : "not entangled") << "\n";
    if (j.contains("i_stokes_normalized_jitter_avg"))
      std::cout << "with lock jitter sigma = " << fmt(c.jitter_sigma, 4) << " rad: "
                << fmt(j["i_stokes_normalized_jitter_avg"].get<double>()) << "\n";
  }
  return r.entangled ? kOk : kSeparable;
}

int cmd_analyze(const CommonFlags& f, const std::string& trace_path, const std::string& sidecar_path) {
  cvpol::HomodyneTrace trace = [&] {
    try {
      return cvpol::parse_trace_csv(trace_path);
    } catch (const cvpol::FormatError& e) {
      throw cvpol::FormatError(trace_path + ": " + e.what());
    }
  }();
  if (!sidecar_path.empty())
    cvpol::apply_trace_sidecar(cvpol::parse_json_text(cvpol::read_text_file(sidecar_path)), trace);
  const cvpol::ScanEstimate est = cvpol::estimate_scan(trace);
  if (est.bins.size() < 3) throw cvpol::PreconditionError(trace_path + ": need at least three bins with >= 2 samples");

  std::ostringstream csv;
  cvpol::emit_estimate_csv(est, csv);
  if (!f.out_dir.empty()) {
    write_file(prepare_out(f.out_dir) / "estimate.csv", csv.str());
  } else if (f.format == "csv") {
    std::cout << csv.str();
  }
  print_scan_summary(est, f.format == "csv" && f.out_dir.empty() ? std::cerr : std::cout);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-mode Gaussian polarization entanglement toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string state_path, trace_path, sidecar_path;
  double i_value = 0;

  auto* replicate = app.add_subcommand("replicate", "Check the built-in cold-atom scenario against its reference values");
  add_common(replicate, flags);
  auto* optimize = app.add_subcommand("optimize", "Find the maximally correlated modes of a state file");
  add_common(optimize, flags);
  optimize->add_option("state", state_path, "State JSON file")->required();
  auto* eof = app.add_subcommand("eof", "Entanglement of formation from a Duan criterion value");
  add_common(eof, flags);
  eof->add_option("value", i_value, "Duan criterion value (vacuum = 2)")->required();
  auto* scan = app.add_subcommand("scan", "Simulate a homodyne phase scan and estimate the criterion");
  add_common(scan, flags);
  auto* stokes = app.add_subcommand("stokes", "Stokes-operator polarization entanglement criterion");
  add_common(stokes, flags);
  auto* analyze = app.add_subcommand("analyze", "Estimate the criterion from a recorded trace CSV");
  add_common(analyze, flags);
  analyze->add_option("trace", trace_path, "Trace CSV (theta_rad,x_a,x_b)")->required();
  analyze->add_option("--sidecar", sidecar_path, "Trace metadata JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*replicate) return cmd_replicate(flags);
    if (*optimize) return cmd_optimize(flags, state_path);
    if (*eof) return cmd_eof(flags, i_value);
    if (*scan) return cmd_scan(flags);
    if (*stokes) return cmd_stokes(flags);
    if (*analyze) return cmd_analyze(flags, trace_path, sidecar_path);
  } catch (const cvpol::NonConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
