#pragma once

#include <vector>

#include "hpglm/glm_priors.hpp"

namespace hpglm {

// Largest λ₀ handed to the sampler; larger values behave as the CI prior.
inline constexpr double kLambda0Cap = 1e12;

/// A previous study's estimates β̂₀ and standard errors σ̂₀ⱼ.
struct HistoricalSummary {
  Vector beta0_hat;
  Vector se0;

  // Standard errors must be finite and non-negative; zero means a known coefficient.
  void validate() const;

  // The maximum likelihood fit and its standard errors on historical data (y₀, X₀).
  static HistoricalSummary FromData(const Family& family, const Vector& y0, const Matrix& X0);
};

/// Delta-method variance of g⁻¹(xᵢ′β̂₀) with a diagonal covariance:
/// τᵢ = Σⱼ xᵢⱼ² σ̂₀ⱼ² / ġ(μᵢ)², where ġ(μ) = 1/v(μ) for a canonical link.
Vector delta_method_tau(const Matrix& X, const HistoricalSummary& summary, const Family& family);

/// λ₀ for which the hyperprior of m around mu0 has variance tau.
///
/// bernoulli μ₀(1−μ₀)/τ − 1, poisson μ₀/τ, normal 1/τ, gamma 1 + μ₀²/τ.
/// Throws InfeasibleVarianceError (index 0) when no λ₀ > 0 attains tau, which
/// only happens for bernoulli with τ ≥ μ₀(1−μ₀). tau = 0 gives +∞.
double lambda0_from_tau(const Family& family, double mu0, double tau);

// Var(m) under the hyperprior with precision lambda0 around mu0 (the inverse of lambda0_from_tau).
double hyperprior_variance(const Family& family, double mu0, double lambda0);

struct ElicitedHyper {
  HppHyper hyper;
  std::vector<bool> capped;  // λ₀ᵢ was clipped at kLambda0Cap

  bool any_capped() const;
};

/// μ₀ᵢ = g⁻¹(xᵢ′β̂₀) and λ₀ᵢ from τᵢ. Throws InfeasibleVarianceError listing
/// every infeasible row; index() is the first of them (0-based).
ElicitedHyper build_hpp_from_summary(const Matrix& X, const HistoricalSummary& summary,
                                     const Family& family);

}  // namespace hpglm
