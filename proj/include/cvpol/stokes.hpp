#pragma once

// Polarization entanglement of two bright beams obtained by mixing the (+45, -45)
// modes with a strong field B on a polarizing beamsplitter. Fluctuations are
// linearized around the B amplitude.

#include <random>
#include <utility>

#include "cvpol/entanglement.hpp"
#include "cvpol/gaussian_state.hpp"

namespace cvpol {

struct BrightBeamPair {
  GaussianState state_pm45;      // fluctuations of A'_x, A'_y
  double alpha_b = 1e4;          // amplitude of B per output arm
  double theta_b = 0;            // locked phase of B relative to A'
  double alpha_a = 0;            // mean amplitude of A'_x, A'_y (weak)
  double regime_factor = 1e3;    // alpha_b must exceed this times the largest fluctuation scale
  bool coherent_b_noise = false; // give B vacuum-level fluctuations instead of a classical amplitude
};

/// Throws RegimeError if alpha_b is not large enough for the linearized description.
void validate(const BrightBeamPair& pair);

struct StokesReport {
  double s1_mean_alpha = 0;
  double s1_mean_beta = 0;
  double var_s2_sum = 0;  // Var(S2^alpha + S2^beta)
  double var_s3_sum = 0;  // Var(S3^alpha + S3^beta)
  double i_stokes_normalized = 2;
  bool entangled = false;  // i_stokes_normalized < 2
};

/// (<S1^alpha>, <S1^beta>) ~ (-alpha_b^2, +alpha_b^2).
std::pair<double, double> stokes_means(const BrightBeamPair& pair);

/// Linearized Stokes fluctuations:
///   dS2^a = alpha_b dX'_x(theta_b),  dS2^b = alpha_b dX'_y(theta_b),
///   dS3^a = -alpha_b dY'_x(theta_b), dS3^b = alpha_b dY'_y(theta_b).
StokesReport stokes_sum_variances(const BrightBeamPair& pair);

/// Covariance of (S2^a, S3^a, S2^b, S3^b) / alpha_b.
Matrix4<double> stokes_covariance_matrix(const BrightBeamPair& pair);

/// Ideal servo: theta_b = report.theta_star (minimizing angle in the analyzed basis).
BrightBeamPair lock_phase_to_squeezing(const BrightBeamPair& pair, const EntanglementReport& report);

/// Normalized Stokes criterion averaged over Gaussian phase jitter of the lock,
/// theta_b + N(0, sigma^2), using `draws` samples from `rng`.
template <typename URBG>
double jittered_stokes_criterion(const BrightBeamPair& pair, double sigma, int draws, URBG& rng) {
  if (sigma == 0.0 || draws <= 0) return stokes_sum_variances(pair).i_stokes_normalized;
  std::normal_distribution<double> jitter(0.0, sigma);
  BrightBeamPair shifted = pair;
  double sum = 0;
  for (int i = 0; i < draws; ++i) {
    shifted.theta_b = pair.theta_b + jitter(rng);
    sum += stokes_sum_variances(shifted).i_stokes_normalized;
  }
  return sum / draws;
}

}  // namespace cvpol
