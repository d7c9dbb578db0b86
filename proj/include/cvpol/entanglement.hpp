#pragma once

// Duan inseparability criterion, maximally correlated polarization modes,
// covariance-matrix standard form and entanglement of formation.

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>

#include "cvpol/gaussian_state.hpp"

namespace cvpol {

/// Basis-independent part of the Duan sum: 2 + 2 N_00 + 2 N_11.
template <typename Scalar>
Scalar duan_base(const TwoModeGaussianState<Scalar>& s) {
  return Scalar(2) + Scalar(2) * (s.n()(0, 0).real() + s.n()(1, 1).real());
}

/// I(theta) = 1/2 [Var(X_0 + X_1)(theta) + Var(Y_0 - Y_1)(theta)]
///          = 2 + 2 N_00 + 2 N_11 + 4 Re(e^{-2i theta} M_01).
template <typename Scalar>
Scalar duan_value(const TwoModeGaussianState<Scalar>& s, Scalar theta) {
  const Scalar v = duan_base(s) + Scalar(4) * std::real(std::polar(Scalar(1), Scalar(-2) * theta) * cross_moment(s));
  return std::max(v, Scalar(0));
}

/// Var X_x(theta) + Var Y_y(theta): the Duan sum of the (+45, -45) modes
/// written in terms of the (x, y) modes.
template <typename Scalar>
Scalar criterion_xy_form(const TwoModeGaussianState<Scalar>& s_xy, Scalar theta) {
  return quadrature_variance(s_xy, 0, theta) +
         quadrature_variance(s_xy, 1, theta + std::numbers::pi_v<Scalar> / Scalar(2));
}

struct ThetaMinimum {
  double theta = 0;  // in [0, pi)
  double value = 0;
};

/// Closed-form minimum over theta: theta = phi + pi/2 where 2 phi = arg M_01.
/// With M_01 = 0 the criterion is flat and theta = 0.
ThetaMinimum duan_minimize_theta(const GaussianState& s);

struct DecouplingOptions {
  int seeds = 8;
  int max_iterations_per_seed = 10000;
  double relative_tolerance = 1e-10;
};

struct DecoupledBasis {
  Transform transform;   // A_uv = U A
  GaussianState state;   // moments in the (u, v) basis
  double residual = 0;   // |M'_01| / (1 + |M'_00| + |M'_11|)
  int iterations = 0;    // simplex iterations spent (0 when already decoupled)
};

/// Finds a polarization basis (u, v) with <dA_u dA_v> = 0 by simplex descent over
/// four U(2) angles. The returned mode phases are fixed so that u and v are squeezed
/// along the same quadrature angle. Throws NonConvergenceError on failure.
DecoupledBasis find_decoupled_basis(const GaussianState& s, const DecouplingOptions& options = {});

/// (A_u + i A_v)/sqrt2, (A_u - i A_v)/sqrt2.
Transform correlated_mode_mixer();

struct StandardForm {
  double n = 1;
  double k = 0;
  bool phase_flipped = false;  // a local pi rotation on mode 1 was applied to make k >= 0
};

/// (n, k) of the symmetric, isotropic covariance matrix
/// [[n,0,k,0],[0,n,0,-k],[k,0,n,0],[0,-k,0,n]] at reference angle theta_sq.
/// Throws PreconditionError listing offending entries when the pattern does not hold.
StandardForm standard_form(const GaussianState& s_pm45, double theta_sq, double tolerance = 1e-6);

/// f(x) = c+ log2 c+ - c- log2 c-, c+- = (x^{-1/2} +- x^{1/2})^2 / 4, for x in (0, 1]; 0 for x >= 1.
double eof_function(double x);

/// Entanglement of formation of a symmetric Gaussian state with Duan value `i_value`.
/// Returns f(i_value / 2) below the separability bound and exactly 0 at or above it.
double eof_symmetric(double i_value);

/// Infers the pre-detection Duan value from a measured one, modeling detection
/// efficiency as a vacuum-admixing beamsplitter on both modes: 2 + (i - 2)/efficiency.
double correct_losses(double i_measured, double efficiency);

struct EntanglementReport {
  std::string basis_label;
  double i_of_theta_min = 2;     // min over theta in the analyzed basis
  double theta_star = 0;         // minimizing angle in the analyzed basis
  Transform decoupled_basis;     // analyzed basis -> (u, v)
  Transform basis_star;          // analyzed basis -> (a*, b*)
  double theta_star_optimal = 0; // minimizing angle for (a*, b*)
  double i_star = 2;             // min over bases and theta
  std::optional<double> n_param;
  std::optional<double> k_param;
  double eof = 0;
  bool entangled() const { return i_star < 2; }
};

EntanglementReport maximally_correlated_modes(const GaussianState& s, const DecouplingOptions& options = {});

}  // namespace cvpol
