#pragma once

#include <string>
#include <vector>

#include "hpglm/expfam.hpp"

namespace hpglm {

/// Conjugate prior on θ with precision λ and prior prediction m for E(y).
struct DyPrior {
  double lambda;
  double m;
};

/// Hyperprior on the prediction m: precision λ₀ around the guess μ₀.
struct Hyperprior {
  double lambda0;
  double mu0;
};

// Sufficient statistics of an i.i.d. sample.
struct IidSample {
  int n;
  double ybar;
};

enum class DensityKind { kBeta, kGamma, kInverseGamma, kNormal };

/// A named univariate density.
///
/// Parameters by kind: beta (α, β); gamma (shape, rate); inverse gamma
/// (shape, scale); normal (mean, variance).
struct StandardDensity {
  DensityKind kind;
  double first;
  double second;

  double log_pdf(double x) const;
  double cdf(double x) const;
  double mean() const;
  double variance() const;
  std::string describe() const;
};

struct MixtureApprox {
  // Normalized mixture weights over the component densities.
  std::vector<double> weights;
  std::vector<StandardDensity> components;
  // Relative coefficients of the unnormalized kernels before each component is
  // normalized (γ and 1 − γ for the Poisson mixture). Sums to one.
  std::vector<double> kernel_coefficients;

  double log_pdf(double x) const;
  double mean() const;
};

struct PosteriorMoments {
  double mean;
  double variance;
};

// Throws DomainError unless λ > 0 and m is strictly inside the mean domain.
void validate(const Family& family, const DyPrior& prior);
void validate(const Family& family, const Hyperprior& hp);

/// Conjugate update of the DY prior: (n + λ, (nȳ + λm)/(n + λ)).
DyPrior dy_update(const Family& family, const IidSample& sample, const DyPrior& prior);

/// Distribution of μ = ḃ(θ) when θ has the conjugate density with the given
/// precision and location: Beta, Gamma, InverseGamma or Normal, all with mean
/// equal to the location.
StandardDensity conjugate_mean_density(const Family& family, double precision, double location);

// The hyperprior of m written as a named density.
StandardDensity hyperprior_standard_form(const Family& family, const Hyperprior& hp);

/// Unnormalized log posterior density of m:
/// log Z(λ + n, λm + nȳ) − log Z(λ, λm) + log π(m | λ₀, μ₀).
/// Returns −∞ for m outside the open mean domain.
double m_log_posterior(const Family& family, double m, const IidSample& sample, double lambda,
                       const Hyperprior& hp);

/// Large-λ approximation to the posterior of m. Poisson: two-component gamma
/// mixture with rate λ₀ + λ log(1 + n/λ) (needs nȳ > 1). Bernoulli: four-component beta mixture (needs
/// 0 < ȳ < 1). Gamma: single inverse gamma. Normal: the exact normal posterior.
MixtureApprox limiting_m_posterior(const Family& family, const IidSample& sample, double lambda,
                                   const Hyperprior& hp);

/// Posterior mean and variance of m, normalizing m_log_posterior by adaptive
/// quadrature over the mean domain.
PosteriorMoments m_posterior_moments(const Family& family, const IidSample& sample, double lambda,
                                     const Hyperprior& hp);

}  // namespace hpglm
