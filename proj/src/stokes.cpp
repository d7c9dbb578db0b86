#include "cvpol/stokes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <tuple>

namespace cvpol {

namespace {

double max_quadrature_std(const GaussianState& s) {
  double worst = 0;
  for (int mode = 0; mode < 2; ++mode) {
    const double peak = 1 + 2 * s.n()(mode, mode).real() + 2 * std::abs(s.m()(mode, mode));
    worst = std::max(worst, std::sqrt(peak));
  }
  return worst;
}

}  // namespace

void validate(const BrightBeamPair& pair) {
  if (!(pair.alpha_b > 0) || !std::isfinite(pair.alpha_b))
    throw RegimeError("alpha_b must be a finite positive amplitude");
  if (!std::isfinite(pair.theta_b)) throw PreconditionError("theta_b must be finite");
  if (!(pair.alpha_a >= 0)) throw PreconditionError("alpha_a must be >= 0");
  const double scale = std::max(max_quadrature_std(pair.state_pm45), pair.alpha_a);
  if (pair.alpha_b < pair.regime_factor * scale) {
    std::ostringstream os;
    os << "linearization regime violated: alpha_b = " << pair.alpha_b << " < " << pair.regime_factor
       << " x fluctuation scale " << scale;
    throw RegimeError(os.str());
  }
}

std::pair<double, double> stokes_means(const BrightBeamPair& pair) {
  validate(pair);
  const double b2 = pair.alpha_b * pair.alpha_b;
  const double a2 = pair.alpha_a * pair.alpha_a;
  // S1^alpha = A'x^dag A'x - By^dag By, S1^beta = Bx^dag Bx - A'y^dag A'y.
  const double s1_alpha = a2 + pair.state_pm45.n()(0, 0).real() - b2;
  const double s1_beta = b2 - a2 - pair.state_pm45.n()(1, 1).real();
  return {s1_alpha, s1_beta};
}

Matrix4<double> stokes_covariance_matrix(const BrightBeamPair& pair) {
  validate(pair);
  // (S2^a, S3^a, S2^b, S3^b) / alpha_b = (X'x, -Y'x, X'y, Y'y) at theta_b.
  const Matrix4<double> gamma = to_covariance_matrix(pair.state_pm45, pair.theta_b);
  const Eigen::Vector4d signs(1, -1, 1, 1);
  Matrix4<double> out = signs.asDiagonal() * gamma * signs.asDiagonal();
  if (pair.coherent_b_noise) {
    const double extra = pair.alpha_a * pair.alpha_a / (pair.alpha_b * pair.alpha_b);
    out.diagonal().array() += extra;
  }
  return out;
}

StokesReport stokes_sum_variances(const BrightBeamPair& pair) {
  StokesReport r;
  std::tie(r.s1_mean_alpha, r.s1_mean_beta) = stokes_means(pair);

  const GaussianState& s = pair.state_pm45;
  const double theta = pair.theta_b;
  const double theta_y = theta + std::numbers::pi / 2;
  const double b2 = pair.alpha_b * pair.alpha_b;

  // Var(X'x + X'y) and Var(Y'y - Y'x) at theta_b.
  const double var_x_sum = quadrature_variance(s, 0, theta) + quadrature_variance(s, 1, theta) +
                           2 * quadrature_covariance(s, 0, theta, 1, theta);
  const double var_y_diff = quadrature_variance(s, 0, theta_y) + quadrature_variance(s, 1, theta_y) -
                            2 * quadrature_covariance(s, 0, theta_y, 1, theta_y);
  r.var_s2_sum = b2 * var_x_sum;
  r.var_s3_sum = b2 * var_y_diff;
  if (pair.coherent_b_noise) {
    // Vacuum noise of B_x and B_y enters through the A' mean amplitude.
    const double extra = 2 * pair.alpha_a * pair.alpha_a;
    r.var_s2_sum += extra;
    r.var_s3_sum += extra;
  }
  r.i_stokes_normalized = 0.5 * (r.var_s2_sum + r.var_s3_sum) / b2;
  r.entangled = r.i_stokes_normalized < 2;
  return r;
}

BrightBeamPair lock_phase_to_squeezing(const BrightBeamPair& pair, const EntanglementReport& report) {
  if (!std::isfinite(report.theta_star)) throw PreconditionError("report.theta_star must be finite");
  BrightBeamPair locked = pair;
  locked.theta_b = report.theta_star;
  return locked;
}

}  // namespace cvpol
