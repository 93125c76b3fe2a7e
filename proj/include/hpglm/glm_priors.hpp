#pragma once

#include <vector>

#include "hpglm/expfam.hpp"
#include "hpglm/irls.hpp"

namespace hpglm {

/// Conjugate regression prior with precision λ and prediction vector m for
/// the n means. Its kernel in β is λ[m′θ(Xβ) − J′b(θ(Xβ))].
struct CiPrior {
  double lambda;
  Vector m;
};

/// Independent conjugate hyperpriors on the components of m, one precision
/// and one prior guess per observation.
struct HppHyper {
  Vector lambda0;
  Vector mu0;

  // Broadcasts a shared precision over every component of mu0.
  static HppHyper Shared(double lambda0, const Vector& mu0);
};

/// Historical data raised to the power a0 ∈ (0, 1], with a flat initial prior.
struct PowerPriorConfig {
  double a0;
  Vector y0;
  Matrix X0;
};

// Diagonal normal prior on β, raised to the power lambda.
struct GppConfig {
  Vector mu_beta;
  Vector sigma_beta;
  double lambda;
};

struct GlmData {
  Vector y;
  Matrix X;
};

enum class NormConst { kLaplace, kExactCategorical };

// How the m-gradient of log Ẑ_L is computed.
enum class LaplaceGradient { kAnalytic, kFiniteDifference };

void validate(const Family& family, const CiPrior& prior, const Matrix& X);
void validate(const Family& family, const HppHyper& hyper);
void validate(const PowerPriorConfig& cfg, Eigen::Index p);
void validate(const GppConfig& cfg);

double ci_log_kernel(const Vector& beta, const CiPrior& prior, const Matrix& X, const Family& family);
// λX′(m − ḃ(Xβ)).
Vector ci_log_kernel_grad(const Vector& beta, const CiPrior& prior, const Matrix& X,
                          const Family& family);

/// Result of the Laplace approximation to log Z(λ, λm) = log ∫ exp{λ[m′Xβ − J′b(Xβ)]} dβ.
struct LaplaceNormConst {
  double value;
  Vector beta_hat;
};

/// (p/2)log 2π − ½ log|λ X′Ŵ X| + λ[m′Xβ̂ − J′b(Xβ̂)] with β̂ the IRLS
/// maximizer for pseudo-response m and precision λ. `start` warm-starts IRLS.
LaplaceNormConst laplace_log_normconst(double lambda, const Vector& m, const Matrix& X,
                                       const Family& family, const Vector* start = nullptr);

/// Gradient of the Laplace value with respect to m.
///
/// The analytic form is λXβ̂ − ½ X A⁻¹ X′(b‴(Xβ̂) ∘ h), where A = X′ŴX and
/// hᵢ = xᵢ′A⁻¹xᵢ; the second term is the m-dependence of the log determinant
/// through dβ̂/dm = A⁻¹X′. The finite-difference mode differentiates
/// laplace_log_normconst directly with steps 1e-5·(1 + |mᵢ|).
Vector laplace_log_normconst_grad(double lambda, const Vector& m, const Matrix& X,
                                  const Family& family, const LaplaceNormConst& at,
                                  LaplaceGradient mode = LaplaceGradient::kAnalytic);

/// A factor-only design: every row of X equals one of p distinct rows, the
/// cells, whose p×p matrix T is nonsingular.
struct CategoricalCells {
  std::vector<int> cell_of_row;
  std::vector<int> sizes;
  Matrix cell_rows;
  double log_abs_det;
};

// Throws UnsupportedDesignError unless X has exactly p distinct rows spanning ℝᵖ.
CategoricalCells categorical_cells(const Matrix& X);

/// Σⱼ log Z(λnⱼ, λnⱼmⱼ) for cell-level predictions mⱼ and cell sizes nⱼ.
double exact_log_normconst_categorical(double lambda, const Vector& cell_m,
                                       const std::vector<int>& group_sizes, const Family& family);

/// Exact log Z(λ, λm) for an observation-level m over a categorical design,
/// including the −log|det T| change of variables from θ to β.
double exact_log_normconst(double lambda, const Vector& m, const CategoricalCells& cells,
                           const Family& family);
Vector exact_log_normconst_grad(double lambda, const Vector& m, const CategoricalCells& cells,
                                const Family& family);

/// Σᵢ λ₀ᵢ[θ(mᵢ)μ₀ᵢ − b(θ(mᵢ))] − Σᵢ log v(mᵢ); −∞ when some mᵢ is not
/// strictly inside the mean domain.
double hpp_hyper_log_pdf(const Vector& m, const HppHyper& hyper, const Family& family);
// λ₀ᵢ(μ₀ᵢ − mᵢ)/v(mᵢ) − v′(mᵢ)/v(mᵢ).
Vector hpp_hyper_log_pdf_grad(const Vector& m, const HppHyper& hyper, const Family& family);

// μ₀ = g⁻¹(X₁α₀). Throws DomainError if a component saturates to the boundary.
Vector mu0_from_coefficients(const Matrix& X1, const Vector& alpha0, const Family& family);

/// Value and gradients of the joint log posterior of (β, m) under the HPP,
/// ci_log_kernel(β; 1+λ, (y+λm)/(1+λ)) + hpp_hyper_log_pdf(m) − log Z(λ, λm).
struct JointEvaluation {
  double value;
  Vector grad_beta;
  Vector grad_m;
  Vector laplace_beta_hat;  // empty for the exact constant
};

struct JointOptions {
  NormConst normconst = NormConst::kLaplace;
  LaplaceGradient gradient = LaplaceGradient::kAnalytic;
  const CategoricalCells* cells = nullptr;   // required for kExactCategorical
  const Vector* laplace_start = nullptr;     // warm start for the inner fit
  bool with_gradient = true;
};

double joint_log_posterior(const Vector& beta, const Vector& m, const GlmData& data, double lambda,
                           const HppHyper& hyper, const Family& family, NormConst normconst,
                           const CategoricalCells* cells = nullptr);

JointEvaluation joint_log_posterior_eval(const Vector& beta, const Vector& m, const GlmData& data,
                                         double lambda, const HppHyper& hyper, const Family& family,
                                         const JointOptions& options);

double power_prior_log_kernel(const Vector& beta, const PowerPriorConfig& cfg, const Family& family);
Vector power_prior_log_kernel_grad(const Vector& beta, const PowerPriorConfig& cfg,
                                   const Family& family);

double gpp_log_kernel(const Vector& beta, const GppConfig& cfg);
Vector gpp_log_kernel_grad(const Vector& beta, const GppConfig& cfg);

}  // namespace hpglm
