#include "doctest.h"

#include <cmath>
#include <random>

#include "cvpol/scenario.hpp"
#include "cvpol/stokes.hpp"
#include "test_support.hpp"

using namespace cvpol;
using cvpol::testing::kPi;

namespace {

GaussianState reference_pm45(double theta_sq = 0.0) {
  ScenarioConfig c = ScenarioConfig::cold_atom_defaults();
  c.theta_sq = theta_sq;
  return to_pm45(scenario_state_xy(c));
}

BrightBeamPair pair_of(const GaussianState& s, double alpha_b, double theta_b, double factor = 1e3) {
  BrightBeamPair p;
  p.state_pm45 = s;
  p.alpha_b = alpha_b;
  p.theta_b = theta_b;
  p.regime_factor = factor;
  return p;
}

}  // namespace

TEST_SUITE("stokes_polarization") {

TEST_CASE("mean S1 values") {
  const auto [a, b] = stokes_means(pair_of(reference_pm45(), 100, 0, 10));
  CHECK(a == doctest::Approx(-1e4).epsilon(1e-6));
  CHECK(b == doctest::Approx(1e4).epsilon(1e-6));

  SUBCASE("quadratic in the bright amplitude") {
    for (double c : {2.0, 10.0, 30.0}) {
      const auto [a2, b2] = stokes_means(pair_of(reference_pm45(), 100 * c, 0, 10));
      CHECK(a2 / a == doctest::Approx(c * c).epsilon(1e-6));
      CHECK(b2 / b == doctest::Approx(c * c).epsilon(1e-6));
    }
  }
}

TEST_CASE("linearization regime is enforced") {
  CHECK_THROWS_AS(stokes_sum_variances(pair_of(make_vacuum("pm45"), 1.0, 0)), RegimeError);
  CHECK_THROWS_AS(stokes_sum_variances(pair_of(make_vacuum("pm45"), 0.0, 0)), RegimeError);
  BrightBeamPair p = pair_of(make_vacuum("pm45"), 1e4, 0);
  p.alpha_a = 100;
  CHECK_THROWS_AS(validate(p), RegimeError);
  CHECK_NOTHROW(validate(pair_of(make_vacuum("pm45"), 1e4, 0)));
}

TEST_CASE("vacuum gives the separability bound") {
  const StokesReport r = stokes_sum_variances(pair_of(make_vacuum("pm45"), 1e4, 0.3));
  CHECK(r.i_stokes_normalized == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_FALSE(r.entangled);
}

TEST_CASE("locked to the squeezing angle") {
  for (double theta_sq : {0.0, 0.9}) {
    const StokesReport r = stokes_sum_variances(pair_of(reference_pm45(theta_sq), 1e4, theta_sq));
    const double b2 = 1e8;
    CHECK(r.i_stokes_normalized == doctest::Approx(1.9).epsilon(1e-12));
    CHECK(r.entangled);
    // Each sum carries 0.95 of its shot-noise level 2 alpha_b^2.
    CHECK(r.var_s2_sum / (2 * b2) == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(r.var_s3_sum / (2 * b2) == doctest::Approx(0.95).epsilon(1e-12));
  }
}

TEST_CASE("phase locked to the anti-squeezed quadrature") {
  const GaussianState s = reference_pm45(0.0);
  const StokesReport r = stokes_sum_variances(pair_of(s, 1e4, kPi / 2));
  CHECK(r.i_stokes_normalized == doctest::Approx(duan_value(s, kPi / 2)).epsilon(1e-12));
  CHECK(r.i_stokes_normalized == doctest::Approx(2 / 0.95).epsilon(1e-12));
  CHECK_FALSE(r.entangled);
}

TEST_CASE("Stokes criterion reproduces the Duan value of the pm45 modes") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const GaussianState s = testing::random_physical_state(rng);
    const double theta = std::uniform_real_distribution<double>(0, 2 * kPi)(rng);
    const StokesReport r = stokes_sum_variances(pair_of(s, 1e4, theta, 100));
    CHECK(r.i_stokes_normalized == doctest::Approx(duan_value(s, theta)).epsilon(1e-10));

    const Matrix4<double> cm = stokes_covariance_matrix(pair_of(s, 1e4, theta, 100));
    const Eigen::Vector4d s2(1, 0, 1, 0), s3(0, 1, 0, 1);
    CHECK(s2.dot(cm * s2) * 1e8 == doctest::Approx(r.var_s2_sum).epsilon(1e-10));
    CHECK(s3.dot(cm * s3) * 1e8 == doctest::Approx(r.var_s3_sum).epsilon(1e-10));
  }
}

TEST_CASE("normalized criterion does not depend on the bright amplitude") {
  const GaussianState s = reference_pm45(0.4);
  const double reference = stokes_sum_variances(pair_of(s, 1e4, 0.5)).i_stokes_normalized;
  for (double alpha : {1e4, 1e5, 1e6, 1e7})
    CHECK(stokes_sum_variances(pair_of(s, alpha, 0.5)).i_stokes_normalized == doctest::Approx(reference).epsilon(1e-9));
}

TEST_CASE("Stokes covariance matrix of a symmetric squeezed state") {
  const double theta_sq = 0.3;
  const Matrix4<double> cm = stokes_covariance_matrix(pair_of(reference_pm45(theta_sq), 1e4, theta_sq));
  const double n = (0.95 + 1 / 0.95) / 2, k = (1 / 0.95 - 0.95) / 2;
  for (int i = 0; i < 4; ++i) CHECK(cm(i, i) == doctest::Approx(n).epsilon(1e-12));
  // S2 anti-correlated, S3 anti-correlated once the sign of S3^a is included.
  CHECK(cm(0, 2) == doctest::Approx(-k).epsilon(1e-8));
  CHECK(cm(1, 3) == doctest::Approx(-k).epsilon(1e-8));
  for (auto [i, j] : {std::pair{0, 1}, {0, 3}, {1, 2}, {2, 3}}) CHECK(std::abs(cm(i, j)) < 1e-8);
  CHECK((cm - cm.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("coherent noise of the bright field") {
  BrightBeamPair p = pair_of(reference_pm45(), 1e4, 0.0);
  p.alpha_a = 3.0;
  const double quiet = stokes_sum_variances(p).i_stokes_normalized;
  p.coherent_b_noise = true;
  const double noisy = stokes_sum_variances(p).i_stokes_normalized;
  CHECK(noisy - quiet == doctest::Approx(2 * 9.0 / 1e8).epsilon(1e-6));
}

TEST_CASE("phase lock and jitter") {
  const GaussianState s = reference_pm45(0.7);
  EntanglementReport report = maximally_correlated_modes(s);
  const BrightBeamPair locked = lock_phase_to_squeezing(pair_of(s, 1e4, 0.0), report);
  CHECK(locked.theta_b == report.theta_star);
  CHECK(std::abs(std::remainder(locked.theta_b - 0.7, kPi)) < 1e-12);

  std::mt19937_64 rng(1);
  const double ideal = jittered_stokes_criterion(locked, 0.0, 10000, rng);
  CHECK(ideal == doctest::Approx(report.i_of_theta_min).epsilon(1e-12));

  double prev = ideal;
  for (double sigma : {0.05, 0.1, 0.2, 0.4}) {
    std::mt19937_64 g(99);
    const double v = jittered_stokes_criterion(locked, sigma, 10000, g);
    CHECK(v >= ideal);
    CHECK(v > prev);
    prev = v;
  }

  std::mt19937_64 g1(5), g2(5);
  CHECK(jittered_stokes_criterion(locked, 0.1, 1000, g1) == jittered_stokes_criterion(locked, 0.1, 1000, g2));

  report.theta_star = std::nan("");
  CHECK_THROWS_AS(lock_phase_to_squeezing(locked, report), PreconditionError);
}

}
