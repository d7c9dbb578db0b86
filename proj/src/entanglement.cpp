#include "cvpol/entanglement.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace cvpol {

namespace {

constexpr double kPi = std::numbers::pi;

using Angles = std::array<double, 4>;

double decoupling_residual(const GaussianState& s) {
  const auto& m = s.m();
  return std::abs(m(0, 1)) / (1.0 + std::abs(m(0, 0)) + std::abs(m(1, 1)));
}

// Off-diagonal anomalous moment r0^T M r1 for the rows of U(angles).
std::complex<double> transformed_cross(const Matrix2c<double>& m, const Angles& p) {
  const Matrix2c<double> u = unitary_from_angles(p[0], p[1], p[2], p[3]);
  return (u.row(0) * m * u.row(1).transpose())(0, 0);
}

// Nelder-Mead state over U(2) angles. Restarts a collapsed simplex around the best vertex.
class SimplexSearch {
 public:
  SimplexSearch(const Matrix2c<double>& m, double scale) : m_(m), inv_scale2_(1.0 / (scale * scale)) {}

  double objective(const Angles& p) const { return std::norm(transformed_cross(m_, p)) * inv_scale2_; }

  void reset(const Angles& start, double step) {
    vertices_[0] = start;
    for (int i = 1; i < 5; ++i) {
      vertices_[i] = start;
      vertices_[i][i - 1] += step;
    }
    for (int i = 0; i < 5; ++i) values_[i] = objective(vertices_[i]);
    order();
  }

  const Angles& best() const { return vertices_[0]; }
  double best_value() const { return values_[0]; }

  double diameter() const {
    double d = 0;
    for (int i = 1; i < 5; ++i)
      for (int k = 0; k < 4; ++k) d = std::max(d, std::abs(vertices_[i][k] - vertices_[0][k]));
    return d;
  }

  void step() {
    Angles centroid{};
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 4; ++k) centroid[k] += vertices_[i][k] / 4.0;

    const auto along = [&](double t) {
      Angles p;
      for (int k = 0; k < 4; ++k) p[k] = centroid[k] + t * (vertices_[4][k] - centroid[k]);
      return p;
    };

    const Angles reflected = along(-1.0);
    const double f_reflected = objective(reflected);
    if (f_reflected < values_[0]) {
      const Angles expanded = along(-2.0);
      const double f_expanded = objective(expanded);
      if (f_expanded < f_reflected) {
        replace_worst(expanded, f_expanded);
      } else {
        replace_worst(reflected, f_reflected);
      }
    } else if (f_reflected < values_[3]) {
      replace_worst(reflected, f_reflected);
    } else {
      const bool outside = f_reflected < values_[4];
      const Angles contracted = along(outside ? -0.5 : 0.5);
      const double f_contracted = objective(contracted);
      if (f_contracted < std::min(f_reflected, values_[4])) {
        replace_worst(contracted, f_contracted);
      } else {
        for (int i = 1; i < 5; ++i) {
          for (int k = 0; k < 4; ++k) vertices_[i][k] = vertices_[0][k] + 0.5 * (vertices_[i][k] - vertices_[0][k]);
          values_[i] = objective(vertices_[i]);
        }
      }
    }
    order();
  }

 private:
  void replace_worst(const Angles& p, double f) {
    vertices_[4] = p;
    values_[4] = f;
  }

  void order() {
    std::array<int, 5> idx{0, 1, 2, 3, 4};
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return values_[a] < values_[b]; });
    std::array<Angles, 5> v;
    std::array<double, 5> f;
    for (int i = 0; i < 5; ++i) {
      v[i] = vertices_[idx[i]];
      f[i] = values_[idx[i]];
    }
    vertices_ = v;
    values_ = f;
  }

  Matrix2c<double> m_;
  double inv_scale2_;
  std::array<Angles, 5> vertices_{};
  std::array<double, 5> values_{};
};

// Removes the phase of the pivot entry of each row (first entry unless negligible).
Matrix2c<double> gauge_rows(Matrix2c<double> u) {
  for (int r = 0; r < 2; ++r) {
    const int pivot = std::abs(u(r, 0)) > 1e-8 ? 0 : 1;
    const std::complex<double> phase = u(r, pivot) / std::abs(u(r, pivot));
    u.row(r) *= std::conj(phase);
  }
  return u;
}

// Rotates mode v so that M_vv has the same argument as M_uu, i.e. both modes are
// squeezed along the same quadrature angle.
Matrix2c<double> align_squeezing_phases(const Matrix2c<double>& m, Matrix2c<double> u) {
  const Matrix2c<double> muv = u * m * u.transpose();
  const double floor = 1e-14 * (1.0 + m.cwiseAbs().maxCoeff());
  if (std::abs(muv(0, 0)) <= floor || std::abs(muv(1, 1)) <= floor) return u;
  double beta = std::remainder(std::arg(muv(0, 0)) - std::arg(muv(1, 1)), 2 * kPi) / 2;
  if (beta <= -kPi / 2 + 1e-12) beta += kPi;
  u.row(1) *= std::polar(1.0, beta);
  return u;
}

DecoupledBasis finish(const GaussianState& s, const Matrix2c<double>& raw, int iterations) {
  const Matrix2c<double> u = align_squeezing_phases(s.m(), gauge_rows(raw));
  const Transform t(u);
  GaussianState uv = apply_transform(s, t, "uv");
  return DecoupledBasis{t, uv, decoupling_residual(uv), iterations};
}

}  // namespace

ThetaMinimum duan_minimize_theta(const GaussianState& s) {
  const std::complex<double> c = cross_moment(s);
  const double base = duan_base(s);
  if (std::abs(c) == 0.0) return {0.0, base};
  const double theta = reduce_angle(std::arg(c) / 2 + kPi / 2);
  return {theta, std::max(base - 4 * std::abs(c), 0.0)};
}

DecoupledBasis find_decoupled_basis(const GaussianState& s, const DecouplingOptions& options) {
  if (decoupling_residual(s) <= options.relative_tolerance)
    return finish(s, Matrix2c<double>::Identity(), 0);

  const double scale = 1.0 + s.m().cwiseAbs().maxCoeff();
  SimplexSearch search(s.m(), scale);

  // Deterministic seeds: chi in {pi/8, 3pi/8} x psi in {0, pi/2} x zeta in {0, pi/2}.
  std::array<Angles, 8> seeds{};
  for (int k = 0; k < 8; ++k) {
    seeds[k] = {0.0, (k & 1) ? kPi / 2 : 0.0, (k & 4) ? 3 * kPi / 8 : kPi / 8, (k & 2) ? kPi / 2 : 0.0};
  }

  double best_residual = std::numeric_limits<double>::infinity();
  int total_iterations = 0;
  const int seed_count = std::clamp(options.seeds, 1, 8);
  for (int k = 0; k < seed_count; ++k) {
    search.reset(seeds[k], 0.5);
    for (int it = 0; it < options.max_iterations_per_seed; ++it) {
      ++total_iterations;
      const Angles& p = search.best();
      const Matrix2c<double> u = unitary_from_angles(p[0], p[1], p[2], p[3]);
      const Matrix2c<double> muv = u * s.m() * u.transpose();
      const double residual = std::abs(muv(0, 1)) / (1.0 + std::abs(muv(0, 0)) + std::abs(muv(1, 1)));
      best_residual = std::min(best_residual, residual);
      if (residual <= options.relative_tolerance) {
        DecoupledBasis out = finish(s, u, total_iterations);
        if (out.residual <= options.relative_tolerance) return out;
      }
      if (search.diameter() < 1e-13) search.reset(Angles(p), 1e-3);
      search.step();
    }
  }
  throw NonConvergenceError("find_decoupled_basis: simplex search did not reach tolerance", best_residual);
}

Transform correlated_mode_mixer() {
  const double r = 1.0 / std::numbers::sqrt2;
  Matrix2c<double> w;
  w << r, std::complex<double>(0, r), r, std::complex<double>(0, -r);
  return Transform(w);
}

StandardForm standard_form(const GaussianState& s, double theta_sq, double tolerance) {
  const Matrix4<double> g = to_covariance_matrix(s, theta_sq);
  const double tol = tolerance * std::max(1.0, g.cwiseAbs().maxCoeff());

  std::ostringstream bad;
  const auto require = [&](bool ok, const char* what, double lhs, double rhs) {
    if (!ok) bad << " " << what << " (" << lhs << " vs " << rhs << ");";
  };
  const double n = g.diagonal().mean();
  for (int i = 0; i < 4; ++i) require(std::abs(g(i, i) - n) <= tol, "unequal diagonal gamma(i,i)", g(i, i), n);
  require(std::abs(g(0, 1)) <= tol, "gamma(0,1) != 0", g(0, 1), 0);
  require(std::abs(g(2, 3)) <= tol, "gamma(2,3) != 0", g(2, 3), 0);
  require(std::abs(g(0, 3)) <= tol, "gamma(0,3) != 0", g(0, 3), 0);
  require(std::abs(g(1, 2)) <= tol, "gamma(1,2) != 0", g(1, 2), 0);
  require(std::abs(g(0, 2) + g(1, 3)) <= tol, "gamma(0,2) != -gamma(1,3)", g(0, 2), -g(1, 3));
  const std::string problems = bad.str();
  if (!problems.empty()) throw PreconditionError("standard form not applicable:" + problems);

  const double k_raw = 0.5 * (g(0, 2) - g(1, 3));
  return StandardForm{n, std::abs(k_raw), k_raw < 0};
}

double eof_function(double x) {
  if (!(x > 0)) throw DomainError("eof_function: argument must be > 0");
  if (x >= 1) return 0.0;
  // c+- = (x^{-1/2} +- x^{1/2})^2 / 4 = (1 +- x)^2 / (4x)
  const double c_plus = (1 + x) * (1 + x) / (4 * x);
  const double c_minus = (1 - x) * (1 - x) / (4 * x);
  double f = c_plus * std::log2(c_plus);
  if (c_minus > 0) f -= c_minus * std::log2(c_minus);
  return f;
}

double eof_symmetric(double i_value) {
  if (!(i_value > 0)) throw DomainError("eof_symmetric: criterion value must be > 0");
  if (i_value >= 2) return 0.0;
  return eof_function(i_value / 2);
}

double correct_losses(double i_measured, double efficiency) {
  if (!(efficiency > 0 && efficiency <= 1))
    throw DomainError("correct_losses: efficiency must lie in (0, 1]");
  if (!(i_measured > 0)) throw DomainError("correct_losses: measured value must be > 0");
  const double corrected = 2 + (i_measured - 2) / efficiency;
  if (!(corrected > 0))
    throw DomainError("correct_losses: efficiency too low for the measured value (corrected value <= 0)");
  return corrected;
}

EntanglementReport maximally_correlated_modes(const GaussianState& s, const DecouplingOptions& options) {
  EntanglementReport report;
  report.basis_label = s.basis_label();

  const ThetaMinimum here = duan_minimize_theta(s);
  report.i_of_theta_min = here.value;
  report.theta_star = here.theta;

  const DecoupledBasis decoupled = find_decoupled_basis(s, options);
  report.decoupled_basis = decoupled.transform;

  const double floor = 1e-14 * (1.0 + s.m().cwiseAbs().maxCoeff());
  if (s.m().cwiseAbs().maxCoeff() <= floor) {
    // No anomalous moments at all: the criterion is the same in every basis.
    report.basis_star = Transform::identity();
  } else {
    report.basis_star = correlated_mode_mixer() * decoupled.transform;
  }

  const GaussianState star = apply_transform(s, report.basis_star, "a*b*");
  const ThetaMinimum best = duan_minimize_theta(star);
  report.theta_star_optimal = best.theta;
  report.i_star = best.value;

  try {
    const StandardForm sf = standard_form(star, best.theta);
    report.n_param = sf.n;
    report.k_param = sf.k;
  } catch (const PreconditionError&) {
    // Asymmetric or non-isotropic optimum: (n, k) undefined.
  }
  report.eof = report.i_star > 0 ? eof_symmetric(report.i_star) : 0.0;
  return report;
}

}  // namespace cvpol
