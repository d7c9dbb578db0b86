#pragma once

// Synthetic balanced-homodyne scans with a ramped local-oscillator phase,
// per-bin variance estimation and the trace CSV format.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "cvpol/gaussian_state.hpp"

namespace cvpol {

/// Counter-based generator: output k of stream `key` is splitmix64(key + (k + 1) * 0x9e3779b97f4a7c15).
/// Streams for (seed, bin) are keyed by splitmix64(seed ^ splitmix64(bin)), so every bin
/// is reproducible on its own regardless of evaluation order.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix(seed ^ mix(stream))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

struct HomodyneSample {
  double theta = 0;  // LO phase, radians
  double x_a = 0;    // shot-noise-normalized quadrature, detector a
  double x_b = 0;    // detector b
};

struct HomodyneTrace {
  std::vector<HomodyneSample> samples;
  double analysis_frequency_mhz = 5.0;
  std::uint64_t seed = 0;
  std::string state_ref;
};

struct ScanBin {
  double theta_center = 0;
  double var_a = 0;
  double var_b = 0;
  double cov_ab = 0;
  double i_plus_estimate = 0;  // var_a + var_b
  std::size_t sample_count = 0;
  double stderr_a = 0;
  double stderr_b = 0;
  double stderr_i = 0;
};

struct ScanEstimate {
  std::vector<ScanBin> bins;
  std::vector<std::string> warnings;
};

/// `points` angles evenly spaced on [start, stop).
std::vector<double> uniform_ramp(std::size_t points, double start, double stop);

/// State whose two homodyne channels, measured at a common LO phase theta, have
/// variances summing to the Duan value I_{a,b}(theta) of `s_ab`: a half-wave plate at
/// 22.5 degrees followed by a quarter-wave retardation on the second mode.
GaussianState duan_detection_state(const GaussianState& s_ab);

/// Draws `n_per_bin` joint samples of (X_0(theta), X_1(theta)) for every theta of `ramp`.
HomodyneTrace simulate_scan(const GaussianState& s, const std::vector<double>& ramp, std::size_t n_per_bin,
                            std::uint64_t seed, double analysis_frequency_mhz = 5.0);

/// Groups consecutive samples sharing the same theta into bins and estimates their
/// (unbiased) variances. Bins with fewer than two samples are skipped with a warning.
ScanEstimate estimate_scan(const HomodyneTrace& trace);

struct FlatnessTest {
  double slope = 0;
  double slope_stderr = 0;
  double t_statistic = 0;
  double critical_value = 0;
  bool flat = false;  // slope consistent with zero at the given confidence
};

/// Least-squares regression of i_plus_estimate on theta_center with a two-sided t test.
FlatnessTest flatness_test(const ScanEstimate& estimate, double confidence = 0.95);

/// Least-squares fit i_plus(theta) = offset + c cos 2theta + s sin 2theta over all bins.
/// Unlike the smallest single bin, min_value is not biased low by bin-to-bin scatter.
struct PeriodicFit {
  double offset = 0;
  double amplitude = 0;    // sqrt(c^2 + s^2)
  double theta_min = 0;    // in [0, pi)
  double min_value = 0;    // offset - amplitude
  double residual_rms = 0;
};

PeriodicFit fit_periodic(const ScanEstimate& estimate);

void emit_trace_csv(const HomodyneTrace& trace, std::ostream& out);
void emit_trace_csv(const HomodyneTrace& trace, const std::string& path);
HomodyneTrace parse_trace_csv(std::istream& in);
HomodyneTrace parse_trace_csv(const std::string& path);

void emit_estimate_csv(const ScanEstimate& estimate, std::ostream& out);

}  // namespace cvpol
