#pragma once

#include <random>

#include "hpglm/expfam.hpp"

namespace hpglm {

struct GaussianMoments {
  Vector mean;
  Matrix covariance;

  // Throws NumericError unless the covariance is symmetric and positive definite.
  void validate() const;
};

// λ_H = λ₀λ/(λ₀ + λ), the effective precision of the marginal prior of β.
double lambda_h(double lambda, double lambda0);

// X(X′X)⁻¹X′. Throws SingularMatrixError for a rank-deficient X.
Matrix hat_matrix(const Matrix& X);

/// Joint prior of (β, m) for the normal linear model with unit variance:
/// mean (β̂_{μ₀}, μ₀), covariance blocks (λ⁻¹ + λ₀⁻¹)(X′X)⁻¹, λ₀⁻¹(X′X)⁻¹X′
/// and λ₀⁻¹Iₙ. The ordering is β first, then m.
GaussianMoments lm_joint_prior(const Matrix& X, double lambda, double lambda0, const Vector& mu0);

/// Marginal posterior of β: mean (β̂ + λ_H β̂_{μ₀})/(1 + λ_H), covariance
/// (1 + λ_H)⁻¹(X′X)⁻¹.
///
/// With a known error standard deviation sigma ≠ 1, y and μ₀ are divided by
/// sigma, the unit-variance result is computed and then scaled back.
GaussianMoments lm_beta_posterior(const Matrix& X, const Vector& y, double lambda, double lambda0,
                                  const Vector& mu0, double sigma = 1.0);

/// Posterior of m: covariance Σ_m = (λ₀I + λ/(1+λ) H)⁻¹ and mean
/// Λμ₀ + (I − Λ)ŷ with Λ = λ₀Σ_m.
GaussianMoments lm_m_posterior(const Matrix& X, const Vector& y, double lambda, double lambda0,
                               const Vector& mu0, double sigma = 1.0);

/// Joint posterior of (β, m) given y with a separate λ₀ᵢ per observation.
/// The prior is β | m ~ N((X′X)⁻¹X′m, (X′X)⁻¹/λ), m ~ N(μ₀, diag(1/λ₀)),
/// and y | β ~ N(Xβ, I); the update is done in covariance form.
GaussianMoments lm_joint_posterior(const Matrix& X, const Vector& y, double lambda, const Vector& lambda0,
                                   const Vector& mu0);

// Exact draws, one per row, via the Cholesky factor of the covariance.
Matrix draw_gaussian(const GaussianMoments& moments, std::size_t count, std::mt19937_64& rng);

}  // namespace hpglm
