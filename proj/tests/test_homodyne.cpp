#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "cvpol/entanglement.hpp"
#include "cvpol/errors.hpp"
#include "cvpol/homodyne.hpp"
#include "cvpol/scenario.hpp"
#include "test_support.hpp"

using namespace cvpol;
using cvpol::testing::kPi;

namespace {

GaussianState reference_pm45(double theta_sq = 0.0) {
  ScenarioConfig c = ScenarioConfig::cold_atom_defaults();
  c.theta_sq = theta_sq;
  return to_pm45(scenario_state_xy(c));
}

}  // namespace

TEST_SUITE("homodyne_sim") {

TEST_CASE("counter-based generator") {
  CounterRng a(42, 3), b(42, 3), c(42, 4), d(43, 3);
  bool differs_stream = false, differs_seed = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a(), vb = b(), vc = c(), vd = d();
    CHECK(va == vb);
    differs_stream |= va != vc;
    differs_seed |= va != vd;
  }
  CHECK(differs_stream);
  CHECK(differs_seed);
}

TEST_CASE("uniform ramp is half-open") {
  const auto r = uniform_ramp(4, 0.0, kPi);
  REQUIRE(r.size() == 4);
  CHECK(r[0] == 0.0);
  CHECK(r[3] == doctest::Approx(0.75 * kPi));
  CHECK_THROWS_AS(uniform_ramp(0, 0.0, 1.0), PreconditionError);
}

TEST_CASE("simulation is deterministic per seed") {
  const GaussianState s = duan_detection_state(reference_pm45());
  const auto ramp = uniform_ramp(8, 0, kPi);
  const HomodyneTrace t1 = simulate_scan(s, ramp, 500, 7);
  const HomodyneTrace t2 = simulate_scan(s, ramp, 500, 7);
  const HomodyneTrace t3 = simulate_scan(s, ramp, 500, 8);
  REQUIRE(t1.samples.size() == 8 * 500);
  bool identical = true, any_diff = false;
  for (std::size_t i = 0; i < t1.samples.size(); ++i) {
    identical &= t1.samples[i].x_a == t2.samples[i].x_a && t1.samples[i].x_b == t2.samples[i].x_b;
    any_diff |= t1.samples[i].x_a != t3.samples[i].x_a;
  }
  CHECK(identical);
  CHECK(any_diff);

  // A bin depends only on (seed, bin index), not on the rest of the ramp.
  const HomodyneTrace single = simulate_scan(s, {ramp[0]}, 500, 7);
  CHECK(single.samples[499].x_b == t1.samples[499].x_b);
}

TEST_CASE("vacuum bins sit at shot noise") {
  const auto ramp = uniform_ramp(32, 0, kPi);
  const ScanEstimate e = estimate_scan(simulate_scan(make_vacuum(), ramp, 20000, 3));
  REQUIRE(e.bins.size() == 32);
  int within = 0;
  for (const auto& b : e.bins) {
    within += std::abs(b.var_a - 1) < 3 * b.stderr_a;
    within += std::abs(b.var_b - 1) < 3 * b.stderr_b;
    CHECK(std::abs(b.var_a - 1) < 5 * b.stderr_a);
    CHECK(std::abs(b.i_plus_estimate - 2) < 5 * b.stderr_i);
  }
  CHECK(within >= 61);
  CHECK(flatness_test(e).flat);
}

TEST_CASE("sample variances follow the analytic curves") {
  const GaussianState s = duan_detection_state(reference_pm45(0.3));
  const auto ramp = uniform_ramp(24, 0, kPi);
  const ScanEstimate e = estimate_scan(simulate_scan(s, ramp, 40000, 11));
  int within = 0;
  for (const auto& b : e.bins) {
    const double ea = quadrature_variance(s, 0, b.theta_center);
    const double eb = quadrature_variance(s, 1, b.theta_center);
    within += std::abs(b.var_a - ea) < 3 * b.stderr_a;
    within += std::abs(b.var_b - eb) < 3 * b.stderr_b;
  }
  CHECK(within >= 45);
}

TEST_CASE("estimated variances converge as samples grow") {
  const GaussianState s = duan_detection_state(reference_pm45());
  const auto ramp = uniform_ramp(16, 0, kPi);
  double prev = 1e300;
  for (std::size_t n : {100u, 1000u, 10000u, 100000u}) {
    const ScanEstimate e = estimate_scan(simulate_scan(s, ramp, n, 17));
    double err = 0;
    for (const auto& b : e.bins) err += std::abs(b.i_plus_estimate - duan_value(reference_pm45(), b.theta_center));
    err /= 16;
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 0.01);
}

TEST_CASE("standard errors shrink like 1/sqrt(n-1)") {
  const auto ramp = uniform_ramp(4, 0, kPi);
  const ScanEstimate small = estimate_scan(simulate_scan(make_vacuum(), ramp, 401, 1));
  const ScanEstimate large = estimate_scan(simulate_scan(make_vacuum(), ramp, 40001, 1));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(small.bins[i].stderr_a / small.bins[i].var_a == doctest::Approx(std::sqrt(2.0 / 400)).epsilon(1e-12));
    CHECK(large.bins[i].stderr_a / large.bins[i].var_a == doctest::Approx(std::sqrt(2.0 / 40000)).epsilon(1e-12));
  }
}

TEST_CASE("cross covariance between channels") {
  // The undetected pm45 modes are correlated at theta_sq.
  const GaussianState s = reference_pm45(0.0);
  const auto ramp = uniform_ramp(8, 0, kPi);
  const ScanEstimate e = estimate_scan(simulate_scan(s, ramp, 50000, 23));
  for (const auto& b : e.bins) {
    const double c = quadrature_covariance(s, 0, b.theta_center, 1, b.theta_center);
    const double va = quadrature_variance(s, 0, b.theta_center);
    const double vb = quadrature_variance(s, 1, b.theta_center);
    const double se = std::sqrt((va * vb + c * c) / static_cast<double>(b.sample_count - 1));
    CHECK(std::abs(b.cov_ab - c) < 5 * se);
  }
  CHECK(std::abs(quadrature_covariance(s, 0, 0.0, 1, 0.0)) > 0.02);
}

TEST_CASE("channel sum reproduces the Duan value") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const GaussianState s = testing::random_physical_state(rng);
    const GaussianState d = duan_detection_state(s);
    for (double theta = 0; theta < kPi; theta += 0.35)
      CHECK(quadrature_variance(d, 0, theta) + quadrature_variance(d, 1, theta) ==
            doctest::Approx(duan_value(s, theta)).epsilon(1e-12));
  }
}

TEST_CASE("scan of the pm45 modes") {
  const GaussianState pm = reference_pm45(0.0);
  const auto ramp = uniform_ramp(64, 0, kPi);
  const ScanEstimate e = estimate_scan(simulate_scan(duan_detection_state(pm), ramp, 10000, 20040601));
  const PeriodicFit fit = fit_periodic(e);
  CHECK(fit.min_value >= 1.88);
  CHECK(fit.min_value <= 1.92);
  CHECK(std::abs(std::remainder(fit.theta_min, kPi)) < 0.1);

  const ScanBin& at_sq = e.bins.front();
  CHECK(std::abs(at_sq.i_plus_estimate - 1.9) < 3 * at_sq.stderr_i);
}

TEST_CASE("scan of the xy modes is flat") {
  ScenarioConfig c = ScenarioConfig::cold_atom_defaults();
  const GaussianState xy = scenario_state_xy(c);
  const auto ramp = uniform_ramp(64, 0, kPi);
  const ScanEstimate e = estimate_scan(simulate_scan(duan_detection_state(xy), ramp, 10000, 20040601));
  const FlatnessTest t = flatness_test(e);
  CHECK(t.flat);
  CHECK(t.critical_value == doctest::Approx(1.999).epsilon(1e-3));
  CHECK(std::abs(fit_periodic(e).offset - duan_base(xy)) < 0.01);
}

TEST_CASE("pi periodicity of the binned variances") {
  const GaussianState s = duan_detection_state(reference_pm45(0.2));
  const auto ramp = uniform_ramp(32, 0, 2 * kPi);
  const ScanEstimate e = estimate_scan(simulate_scan(s, ramp, 20000, 41));
  for (std::size_t i = 0; i < 16; ++i) {
    const ScanBin& a = e.bins[i];
    const ScanBin& b = e.bins[i + 16];
    CHECK(b.theta_center - a.theta_center == doctest::Approx(kPi));
    CHECK(std::abs(a.i_plus_estimate - b.i_plus_estimate) < 5 * std::hypot(a.stderr_i, b.stderr_i));
  }
}

TEST_CASE("bins with too few samples are skipped") {
  HomodyneTrace t;
  t.samples = {{0.0, 1, 2}, {0.0, 2, 1}, {0.0, 0, 0}, {0.5, 1, 1}, {1.0, 1, 0}, {1.0, -1, 0}};
  const ScanEstimate e = estimate_scan(t);
  REQUIRE(e.bins.size() == 2);
  REQUIRE(e.warnings.size() == 1);
  CHECK(e.warnings[0].find("theta=0.5") != std::string::npos);
  CHECK(e.bins[0].var_a == doctest::Approx(1.0));
  CHECK(e.bins[0].var_b == doctest::Approx(1.0));
  CHECK(e.bins[0].cov_ab == doctest::Approx(0.5));
  CHECK(e.bins[1].var_a == doctest::Approx(2.0));
  CHECK(e.bins[1].var_b == 0.0);
}

TEST_CASE("trace CSV") {
  SUBCASE("handcrafted file") {
    std::istringstream in("theta_rad,x_a,x_b\r\n0,1.5,-2\n0,-1.5,2\n1.25,1e-3,3.0\n");
    const HomodyneTrace t = parse_trace_csv(in);
    REQUIRE(t.samples.size() == 3);
    CHECK(t.samples[0].x_a == 1.5);
    CHECK(t.samples[1].x_b == 2.0);
    CHECK(t.samples[2].theta == 1.25);
    CHECK(t.samples[2].x_a == 1e-3);
  }
  SUBCASE("round trip is exact") {
    const HomodyneTrace t = simulate_scan(duan_detection_state(reference_pm45()), uniform_ramp(5, 0, kPi), 50, 9);
    std::stringstream first;
    emit_trace_csv(t, first);
    const HomodyneTrace back = parse_trace_csv(first);
    REQUIRE(back.samples.size() == t.samples.size());
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
      CHECK(back.samples[i].theta == t.samples[i].theta);
      CHECK(back.samples[i].x_a == t.samples[i].x_a);
      CHECK(back.samples[i].x_b == t.samples[i].x_b);
    }
    std::stringstream second;
    emit_trace_csv(back, second);
    CHECK(second.str() == first.str());
  }
  SUBCASE("non-finite values are rejected with their position") {
    std::istringstream in("theta_rad,x_a,x_b\n0,1,2\n0,nan,2\n");
    try {
      parse_trace_csv(in);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.line() == 3);
      CHECK(e.column() == 2);
    }
  }
  SUBCASE("malformed rows") {
    for (const char* text : {"theta_rad,x_a,x_b\n0,1\n", "theta_rad,x_a,x_b\n0,1,2,3\n", "theta_rad,x_a,x_b\n0,abc,2\n",
                             "theta_rad,x_a,x_b\n0,,2\n"}) {
      std::istringstream in(text);
      CHECK_THROWS_AS(parse_trace_csv(in), FormatError);
    }
  }
  SUBCASE("header is required") {
    std::istringstream bad("theta,xa,xb\n0,1,2\n");
    CHECK_THROWS_WITH_AS(parse_trace_csv(bad), doctest::Contains("bad header"), FormatError);
    std::istringstream empty("");
    CHECK_THROWS_AS(parse_trace_csv(empty), FormatError);
  }
}

TEST_CASE("periodic fit recovers an exact curve") {
  const GaussianState pm = reference_pm45(0.4);
  ScanEstimate e;
  for (double theta : uniform_ramp(12, 0, kPi)) {
    ScanBin b;
    b.theta_center = theta;
    b.i_plus_estimate = duan_value(pm, theta);
    e.bins.push_back(b);
  }
  const PeriodicFit f = fit_periodic(e);
  CHECK(f.min_value == doctest::Approx(1.9).epsilon(1e-12));
  CHECK(f.theta_min == doctest::Approx(0.4).epsilon(1e-10));
  CHECK(f.residual_rms < 1e-12);
}

}
