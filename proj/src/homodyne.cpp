#include "cvpol/homodyne.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <string_view>

#include <boost/math/distributions/students_t.hpp>

#include "cvpol/errors.hpp"

namespace cvpol {

std::vector<double> uniform_ramp(std::size_t points, double start, double stop) {
  if (points == 0) throw PreconditionError("uniform_ramp: need at least one point");
  std::vector<double> ramp(points);
  const double step = (stop - start) / static_cast<double>(points);
  for (std::size_t i = 0; i < points; ++i) ramp[i] = start + step * static_cast<double>(i);
  return ramp;
}

GaussianState duan_detection_state(const GaussianState& s_ab) {
  const Transform optics = quarter_wave_on_second<double>() * half_wave_plate(std::numbers::pi / 8);
  return apply_transform(s_ab, optics, s_ab.basis_label() + ":detect");
}

HomodyneTrace simulate_scan(const GaussianState& s, const std::vector<double>& ramp, std::size_t n_per_bin,
                            std::uint64_t seed, double analysis_frequency_mhz) {
  if (n_per_bin < 2) throw PreconditionError("simulate_scan: n_per_bin must be >= 2");
  if (!is_physical(s)) throw PreconditionError("simulate_scan: state violates the Heisenberg condition");

  HomodyneTrace trace;
  trace.seed = seed;
  trace.analysis_frequency_mhz = analysis_frequency_mhz;
  trace.state_ref = s.basis_label();
  trace.samples.reserve(ramp.size() * n_per_bin);

  for (std::size_t bin = 0; bin < ramp.size(); ++bin) {
    const double theta = ramp[bin];
    const double var_a = quadrature_variance(s, 0, theta);
    const double var_b = quadrature_variance(s, 1, theta);
    const double cov = quadrature_covariance(s, 0, theta, 1, theta);

    // Cholesky factor of [[var_a, cov], [cov, var_b]], tolerant of rank deficiency.
    const double l00 = std::sqrt(var_a);
    const double l10 = l00 > 0 ? cov / l00 : 0.0;
    const double l11 = std::sqrt(std::max(var_b - l10 * l10, 0.0));

    CounterRng rng(seed, bin);
    std::normal_distribution<double> normal;
    for (std::size_t i = 0; i < n_per_bin; ++i) {
      const double z0 = normal(rng);
      const double z1 = normal(rng);
      trace.samples.push_back({theta, l00 * z0, l10 * z0 + l11 * z1});
    }
  }
  return trace;
}

namespace {

ScanBin estimate_bin(const std::vector<HomodyneSample>& samples, std::size_t begin, std::size_t end) {
  const std::size_t n = end - begin;
  double mean_a = 0, mean_b = 0;
  for (std::size_t i = begin; i < end; ++i) {
    mean_a += samples[i].x_a;
    mean_b += samples[i].x_b;
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);

  double ss_a = 0, ss_b = 0, ss_ab = 0;
  for (std::size_t i = begin; i < end; ++i) {
    const double da = samples[i].x_a - mean_a;
    const double db = samples[i].x_b - mean_b;
    ss_a += da * da;
    ss_b += db * db;
    ss_ab += da * db;
  }
  const double dof = static_cast<double>(n - 1);

  ScanBin bin;
  bin.theta_center = samples[begin].theta;
  bin.sample_count = n;
  bin.var_a = ss_a / dof;
  bin.var_b = ss_b / dof;
  bin.cov_ab = ss_ab / dof;
  bin.i_plus_estimate = bin.var_a + bin.var_b;
  const double rel = std::sqrt(2.0 / dof);
  bin.stderr_a = bin.var_a * rel;
  bin.stderr_b = bin.var_b * rel;
  bin.stderr_i = rel * std::sqrt(bin.var_a * bin.var_a + bin.var_b * bin.var_b + 2 * bin.cov_ab * bin.cov_ab);
  return bin;
}

}  // namespace

ScanEstimate estimate_scan(const HomodyneTrace& trace) {
  ScanEstimate out;
  const auto& samples = trace.samples;
  std::size_t begin = 0;
  while (begin < samples.size()) {
    std::size_t end = begin + 1;
    while (end < samples.size() && samples[end].theta == samples[begin].theta) ++end;
    if (end - begin < 2) {
      out.warnings.push_back("skipped bin at theta=" + std::to_string(samples[begin].theta) + ": " +
                             std::to_string(end - begin) + " sample(s), need >= 2");
    } else {
      out.bins.push_back(estimate_bin(samples, begin, end));
    }
    begin = end;
  }
  return out;
}

FlatnessTest flatness_test(const ScanEstimate& estimate, double confidence) {
  const std::size_t n = estimate.bins.size();
  if (n < 3) throw PreconditionError("flatness_test: need at least three bins");
  double mean_t = 0, mean_i = 0;
  for (const auto& b : estimate.bins) {
    mean_t += b.theta_center;
    mean_i += b.i_plus_estimate;
  }
  mean_t /= static_cast<double>(n);
  mean_i /= static_cast<double>(n);
  double stt = 0, sti = 0;
  for (const auto& b : estimate.bins) {
    stt += (b.theta_center - mean_t) * (b.theta_center - mean_t);
    sti += (b.theta_center - mean_t) * (b.i_plus_estimate - mean_i);
  }
  if (stt <= 0) throw PreconditionError("flatness_test: bins must span more than one angle");

  FlatnessTest t;
  t.slope = sti / stt;
  double sse = 0;
  for (const auto& b : estimate.bins) {
    const double fit = mean_i + t.slope * (b.theta_center - mean_t);
    sse += (b.i_plus_estimate - fit) * (b.i_plus_estimate - fit);
  }
  const double dof = static_cast<double>(n - 2);
  t.slope_stderr = std::sqrt(sse / dof / stt);
  t.t_statistic = t.slope_stderr > 0 ? t.slope / t.slope_stderr : 0.0;
  const boost::math::students_t dist(dof);
  t.critical_value = boost::math::quantile(boost::math::complement(dist, (1 - confidence) / 2));
  t.flat = std::abs(t.t_statistic) < t.critical_value;
  return t;
}

PeriodicFit fit_periodic(const ScanEstimate& estimate) {
  const auto n = static_cast<Eigen::Index>(estimate.bins.size());
  if (n < 3) throw PreconditionError("fit_periodic: need at least three bins");
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& b = estimate.bins[static_cast<std::size_t>(i)];
    design(i, 0) = 1;
    design(i, 1) = std::cos(2 * b.theta_center);
    design(i, 2) = std::sin(2 * b.theta_center);
    y(i) = b.i_plus_estimate;
  }
  const Eigen::Vector3d coef = design.colPivHouseholderQr().solve(y);
  PeriodicFit fit;
  fit.offset = coef(0);
  fit.amplitude = std::hypot(coef(1), coef(2));
  fit.min_value = fit.offset - fit.amplitude;
  fit.theta_min = reduce_angle((std::atan2(coef(2), coef(1)) + std::numbers::pi) / 2);
  fit.residual_rms = std::sqrt((design * coef - y).squaredNorm() / static_cast<double>(n));
  return fit;
}

namespace {

constexpr std::string_view kTraceHeader = "theta_rad,x_a,x_b";

void write_double(std::ostream& out, double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.write(buf, len);
}

}  // namespace

void emit_trace_csv(const HomodyneTrace& trace, std::ostream& out) {
  out << kTraceHeader << '\n';
  for (const auto& s : trace.samples) {
    write_double(out, s.theta);
    out << ',';
    write_double(out, s.x_a);
    out << ',';
    write_double(out, s.x_b);
    out << '\n';
  }
}

void emit_trace_csv(const HomodyneTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  emit_trace_csv(trace, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

HomodyneTrace parse_trace_csv(std::istream& in) {
  HomodyneTrace trace;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty trace file: missing header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader)
    throw FormatError("bad header '" + line + "', expected '" + std::string(kTraceHeader) + "'", 1);

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    double values[3];
    std::size_t pos = 0;
    for (int col = 0; col < 3; ++col) {
      const std::size_t stop = col < 2 ? line.find(',', pos) : line.size();
      if (stop == std::string::npos) throw FormatError("expected 3 comma-separated fields", line_no, col + 1);
      const char* first = line.data() + pos;
      const char* last = line.data() + stop;
      const auto [ptr, ec] = std::from_chars(first, last, values[col]);
      if (ec != std::errc() || ptr != last || first == last)
        throw FormatError("not a decimal number: '" + std::string(first, last) + "'", line_no, col + 1);
      if (!std::isfinite(values[col])) throw FormatError("non-finite sample value", line_no, col + 1);
      pos = stop + 1;
    }
    trace.samples.push_back({values[0], values[1], values[2]});
  }
  return trace;
}

HomodyneTrace parse_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_trace_csv(in);
}

void emit_estimate_csv(const ScanEstimate& estimate, std::ostream& out) {
  out << "theta_rad,var_a,var_b,cov_ab,i_plus,sample_count,stderr_a,stderr_b,stderr_i\n";
  for (const auto& b : estimate.bins) {
    for (double v : {b.theta_center, b.var_a, b.var_b, b.cov_ab, b.i_plus_estimate}) {
      write_double(out, v);
      out << ',';
    }
    out << b.sample_count;
    for (double v : {b.stderr_a, b.stderr_b, b.stderr_i}) {
      out << ',';
      write_double(out, v);
    }
    out << '\n';
  }
}

}  // namespace cvpol
