#pragma once

// Zero-mean two-mode Gaussian fluctuation states and passive polarization optics.
//
// Quadrature convention: X(theta) = A^dag e^{i theta} + A e^{-i theta}, Y(theta) = X(theta + pi/2).
// Vacuum variance is 1 and [X, Y] = 2i throughout the library.

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "cvpol/errors.hpp"

namespace cvpol {

template <typename Scalar>
using Matrix2c = Eigen::Matrix<std::complex<Scalar>, 2, 2>;

template <typename Scalar>
using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;

inline constexpr double kUnitarityTolerance = 1e-12;
inline constexpr double kVerifyTolerance = 1e-9;

/// Phenomenological description of one squeezed (possibly impure) mode.
template <typename Scalar = double>
struct SqueezedModeParams {
  Scalar v_min = 1;
  Scalar v_max = 1;
  Scalar theta_sq = 0;

  static SqueezedModeParams vacuum() { return {1, 1, 0}; }

  /// Minimum-uncertainty mode with squeezed variance `v_min` at angle `theta_sq`.
  static SqueezedModeParams pure(Scalar v_min, Scalar theta_sq) {
    return {v_min, Scalar(1) / v_min, theta_sq};
  }
};

template <typename Scalar>
void validate(const SqueezedModeParams<Scalar>& p) {
  using std::isfinite;
  if (!isfinite(p.v_min) || !isfinite(p.v_max) || !isfinite(p.theta_sq))
    throw PreconditionError("SqueezedModeParams: fields must be finite");
  if (p.v_min < 0) throw PreconditionError("SqueezedModeParams: v_min must be >= 0");
  if (p.v_max < p.v_min) throw PreconditionError("SqueezedModeParams: v_max must be >= v_min");
  if (p.v_min * p.v_max < Scalar(1) - Scalar(kVerifyTolerance))
    throw PreconditionError("SqueezedModeParams: v_min * v_max must be >= 1 (Heisenberg)");
}

/// Jones matrix acting on the mode annihilation operators, A' = U A.
template <typename Scalar = double>
class PolarizationTransform {
 public:
  using Matrix = Matrix2c<Scalar>;

  PolarizationTransform() : u_(Matrix::Identity()) {}

  explicit PolarizationTransform(const Matrix& u) : u_(u) {
    const Scalar defect = (u_.adjoint() * u_ - Matrix::Identity()).cwiseAbs().maxCoeff();
    if (!(defect <= Scalar(kUnitarityTolerance))) {
      std::ostringstream os;
      os << "PolarizationTransform: matrix is not unitary (max |U^dag U - 1| = " << defect << ")";
      throw PreconditionError(os.str());
    }
  }

  static PolarizationTransform identity() { return PolarizationTransform(); }

  const Matrix& matrix() const { return u_; }

  PolarizationTransform inverse() const { return PolarizationTransform(u_.adjoint(), Trusted{}); }

  /// Composition: (a * b) applies b first, then a.
  friend PolarizationTransform operator*(const PolarizationTransform& a, const PolarizationTransform& b) {
    return PolarizationTransform(a.u_ * b.u_, Trusted{});
  }

 private:
  struct Trusted {};
  PolarizationTransform(const Matrix& u, Trusted) : u_(u) {}

  Matrix u_;
};

/// Half-wave plate with its fast axis at `axis_angle` from x. At pi/8 it maps (x, y) to (+45, -45).
template <typename Scalar = double>
PolarizationTransform<Scalar> half_wave_plate(Scalar axis_angle) {
  using std::cos;
  using std::sin;
  Matrix2c<Scalar> u;
  const Scalar c = cos(2 * axis_angle), s = sin(2 * axis_angle);
  u << c, s, s, -c;
  return PolarizationTransform<Scalar>(u);
}

/// Relative quarter-wave retardation on the second mode, diag(1, i).
/// Rotates the noise ellipse of mode 1 by pi/2 in the Fresnel plane.
template <typename Scalar = double>
PolarizationTransform<Scalar> quarter_wave_on_second() {
  Matrix2c<Scalar> u = Matrix2c<Scalar>::Zero();
  u(0, 0) = 1;
  u(1, 1) = std::complex<Scalar>(0, 1);
  return PolarizationTransform<Scalar>(u);
}

template <typename Scalar = double>
PolarizationTransform<Scalar> mode_phases(Scalar phase0, Scalar phase1) {
  Matrix2c<Scalar> u = Matrix2c<Scalar>::Zero();
  u(0, 0) = std::polar(Scalar(1), phase0);
  u(1, 1) = std::polar(Scalar(1), phase1);
  return PolarizationTransform<Scalar>(u);
}

/// General U(2) element from four angles:
/// e^{i alpha} [[e^{i psi} cos chi, e^{i zeta} sin chi], [-e^{-i zeta} sin chi, e^{-i psi} cos chi]].
template <typename Scalar = double>
Matrix2c<Scalar> unitary_from_angles(Scalar alpha, Scalar psi, Scalar chi, Scalar zeta) {
  using std::cos;
  using std::sin;
  Matrix2c<Scalar> u;
  u << std::polar(cos(chi), psi), std::polar(sin(chi), zeta),
      -std::polar(sin(chi), -zeta), std::polar(cos(chi), -psi);
  return std::polar(Scalar(1), alpha) * u;
}

/// Second moments of the field fluctuations: M_ij = <dA_i dA_j>, N_ij = <dA_i^dag dA_j>.
template <typename Scalar = double>
class TwoModeGaussianState {
 public:
  using Matrix = Matrix2c<Scalar>;

  TwoModeGaussianState() : m_(Matrix::Zero()), n_(Matrix::Zero()), label_("xy") {}

  /// Checks the structural invariants (M symmetric, N Hermitian, N_ii >= 0).
  /// Physical validity (Heisenberg) is checked separately by `heisenberg_min_eigenvalue`.
  TwoModeGaussianState(const Matrix& m, const Matrix& n, std::string basis_label = "xy")
      : m_(m), n_(n), label_(std::move(basis_label)) {
    const Scalar scale = Scalar(1) + m_.cwiseAbs().maxCoeff() + n_.cwiseAbs().maxCoeff();
    const Scalar tol = Scalar(kVerifyTolerance) * scale;
    if (!m_.allFinite() || !n_.allFinite()) throw PreconditionError("TwoModeGaussianState: non-finite moment");
    if (std::abs(m_(0, 1) - m_(1, 0)) > tol)
      throw PreconditionError("TwoModeGaussianState: M must be symmetric (M01 != M10)");
    if ((n_ - n_.adjoint()).cwiseAbs().maxCoeff() > tol)
      throw PreconditionError("TwoModeGaussianState: N must be Hermitian");
    if (n_(0, 0).real() < -tol || n_(1, 1).real() < -tol)
      throw PreconditionError("TwoModeGaussianState: N diagonal must be non-negative");
    // Snap the representation to exact symmetry so downstream algebra sees clean values.
    const std::complex<Scalar> m01 = (m_(0, 1) + m_(1, 0)) / Scalar(2);
    m_(0, 1) = m_(1, 0) = m01;
    n_ = ((n_ + n_.adjoint()) / Scalar(2)).eval();
    n_(0, 0) = std::max<Scalar>(n_(0, 0).real(), Scalar(0));
    n_(1, 1) = std::max<Scalar>(n_(1, 1).real(), Scalar(0));
  }

  const Matrix& m() const { return m_; }
  const Matrix& n() const { return n_; }
  const std::string& basis_label() const { return label_; }

  TwoModeGaussianState relabeled(std::string label) const {
    TwoModeGaussianState out = *this;
    out.label_ = std::move(label);
    return out;
  }

 private:
  Matrix m_;
  Matrix n_;
  std::string label_;
};

using GaussianState = TwoModeGaussianState<double>;
using Transform = PolarizationTransform<double>;
using SqueezingParams = SqueezedModeParams<double>;

template <typename Scalar = double>
TwoModeGaussianState<Scalar> make_vacuum(std::string basis_label = "xy") {
  return TwoModeGaussianState<Scalar>(Matrix2c<Scalar>::Zero(), Matrix2c<Scalar>::Zero(),
                                      std::move(basis_label));
}

/// Uncorrelated modes, each with variance
/// v_min cos^2(theta - theta_sq) + v_max sin^2(theta - theta_sq).
template <typename Scalar>
TwoModeGaussianState<Scalar> make_independent_squeezed_pair(const SqueezedModeParams<Scalar>& a,
                                                            const SqueezedModeParams<Scalar>& b,
                                                            std::string basis_label = "xy") {
  validate(a);
  validate(b);
  Matrix2c<Scalar> m = Matrix2c<Scalar>::Zero();
  Matrix2c<Scalar> n = Matrix2c<Scalar>::Zero();
  const SqueezedModeParams<Scalar>* params[2] = {&a, &b};
  for (int i = 0; i < 2; ++i) {
    const auto& p = *params[i];
    n(i, i) = (p.v_min + p.v_max - Scalar(2)) / Scalar(4);
    m(i, i) = -std::polar((p.v_max - p.v_min) / Scalar(4), Scalar(2) * p.theta_sq);
  }
  return TwoModeGaussianState<Scalar>(m, n, std::move(basis_label));
}

/// M' = U M U^T, N' = U^* N U^T.
template <typename Scalar>
TwoModeGaussianState<Scalar> apply_transform(const TwoModeGaussianState<Scalar>& s,
                                             const PolarizationTransform<Scalar>& t,
                                             std::string basis_label = {}) {
  const auto& u = t.matrix();
  Matrix2c<Scalar> m = u * s.m() * u.transpose();
  Matrix2c<Scalar> n = u.conjugate() * s.n() * u.transpose();
  return TwoModeGaussianState<Scalar>(m, n, basis_label.empty() ? s.basis_label() : std::move(basis_label));
}

inline void check_mode(int mode) {
  if (mode != 0 && mode != 1) throw PreconditionError("mode index must be 0 or 1, got " + std::to_string(mode));
}

/// Symmetrized covariance <{dX_a(theta_a), dX_b(theta_b)}>/2.
template <typename Scalar>
Scalar quadrature_covariance(const TwoModeGaussianState<Scalar>& s, int a, Scalar theta_a, int b, Scalar theta_b) {
  check_mode(a);
  check_mode(b);
  using std::cos;
  const auto sum = std::polar(Scalar(1), -(theta_a + theta_b));
  const auto diff = std::polar(Scalar(1), theta_a - theta_b);
  Scalar value = Scalar(2) * std::real(s.m()(a, b) * sum) + Scalar(2) * std::real(s.n()(a, b) * diff);
  if (a == b) value += cos(theta_a - theta_b);
  return value;
}

/// Delta^2 X_mode(theta) = 1 + 2 N_mm + 2 Re(e^{-2i theta} M_mm).
template <typename Scalar>
Scalar quadrature_variance(const TwoModeGaussianState<Scalar>& s, int mode, Scalar theta) {
  check_mode(mode);
  const Scalar v = Scalar(1) + Scalar(2) * s.n()(mode, mode).real() +
                   Scalar(2) * std::real(std::polar(Scalar(1), Scalar(-2) * theta) * s.m()(mode, mode));
  return std::max(v, Scalar(0));
}

/// <dA_0 dA_1>.
template <typename Scalar>
std::complex<Scalar> cross_moment(const TwoModeGaussianState<Scalar>& s) {
  return s.m()(0, 1);
}

/// Covariance matrix of R = (X_0, Y_0, X_1, Y_1) at reference angle theta_ref.
template <typename Scalar>
Matrix4<Scalar> to_covariance_matrix(const TwoModeGaussianState<Scalar>& s, Scalar theta_ref) {
  const Scalar half_pi = std::numbers::pi_v<Scalar> / Scalar(2);
  Matrix4<Scalar> gamma;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      gamma(i, j) = quadrature_covariance(s, i / 2, theta_ref + (i % 2) * half_pi, j / 2,
                                          theta_ref + (j % 2) * half_pi);
    }
  }
  return ((gamma + gamma.transpose()) / Scalar(2)).eval();
}

/// Omega with [R_i, R_j] = 2i Omega_ij, so the uncertainty relation reads gamma + i Omega >= 0.
template <typename Scalar = double>
Matrix4<Scalar> symplectic_form() {
  Matrix4<Scalar> omega = Matrix4<Scalar>::Zero();
  omega(0, 1) = omega(2, 3) = 1;
  omega(1, 0) = omega(3, 2) = -1;
  return omega;
}

/// Real 4x4 symplectic matrix acting on (X_0, Y_0, X_1, Y_1) for a passive transform.
template <typename Scalar>
Matrix4<Scalar> to_symplectic(const PolarizationTransform<Scalar>& t) {
  Matrix4<Scalar> s;
  const auto& u = t.matrix();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const Scalar re = u(i, j).real(), im = u(i, j).imag();
      s.template block<2, 2>(2 * i, 2 * j) << re, -im, im, re;
    }
  }
  return s;
}

/// Smallest eigenvalue of gamma + i Omega; negative values flag an unphysical state.
template <typename Scalar>
Scalar heisenberg_min_eigenvalue(const TwoModeGaussianState<Scalar>& s) {
  using Complex4 = Eigen::Matrix<std::complex<Scalar>, 4, 4>;
  const Complex4 h = to_covariance_matrix(s, Scalar(0)).template cast<std::complex<Scalar>>() +
                     std::complex<Scalar>(0, 1) * symplectic_form<Scalar>().template cast<std::complex<Scalar>>();
  Eigen::SelfAdjointEigenSolver<Complex4> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

template <typename Scalar>
bool is_physical(const TwoModeGaussianState<Scalar>& s, Scalar tolerance = Scalar(kVerifyTolerance)) {
  return heisenberg_min_eigenvalue(s) > -tolerance;
}

/// Reduces an angle to [0, pi).
template <typename Scalar>
Scalar reduce_angle(Scalar theta) {
  using std::fmod;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  Scalar r = fmod(theta, pi);
  if (r < 0) r += pi;
  if (r >= pi) r = 0;
  return r;
}

}  // namespace cvpol
