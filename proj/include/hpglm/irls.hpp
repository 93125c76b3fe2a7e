#pragma once

#include "hpglm/expfam.hpp"

namespace hpglm {

struct IrlsOptions {
  int max_iterations = 100;
  int max_halvings = 20;
  double relative_tolerance = 1e-10;
  double score_tolerance = 1e-8;
};

struct FitResult {
  Vector beta_hat;
  // precision · X′W X at beta_hat, W = diag(v(μ̂ᵢ)).
  Matrix observed_information;
  // precision · [r′Xβ̂ − J′b(Xβ̂)]
  double log_kernel_at_max = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct MleFit {
  FitResult fit;
  Vector standard_errors;
};

/// Maximizes precision·[r′θ(Xβ) − J′b(θ(Xβ))] over β by Newton–Raphson,
/// which under the canonical link is IRLS with working weights v(μᵢ).
///
/// The response may be fractional as long as it lies in the closed mean
/// domain. A step that lowers the kernel is halved up to max_halvings times.
/// Throws FitError (flagged as diverged for separation) when the iteration
/// does not converge, SingularMatrixError when X′WX cannot be factored.
FitResult irls(const Family& family, const Vector& response, const Matrix& X, double precision,
               const Vector* start = nullptr, const IrlsOptions& options = {});

// Maximum likelihood fit on y with standard errors sqrt(diag(𝒥⁻¹)).
MleFit mle_with_se(const Family& family, const Vector& y, const Matrix& X,
                   const IrlsOptions& options = {});

// precision · [r′η − Σ b(ηᵢ)]; −∞ if some ηᵢ leaves the canonical domain.
double glm_log_kernel(const Family& family, const Vector& response, const Vector& eta,
                      double precision);

// Index of a column of ones in X, or -1.
Eigen::Index intercept_column(const Matrix& X);

}  // namespace hpglm
