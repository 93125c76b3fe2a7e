#include "hpglm/irls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hpglm/errors.hpp"

namespace hpglm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_response(const Family& family, const Vector& response) {
  const MeanDomain dom = family.mean_domain();
  for (Eigen::Index i = 0; i < response.size(); ++i) {
    if (!std::isfinite(response[i]) || !dom.closure_contains(response[i])) {
      throw DataError("response at row " + std::to_string(i + 1) +
                      " lies outside the closed mean domain of the " + std::string(family.name()) +
                      " family");
    }
  }
}

// Starting values: intercept at g(mean response) and zero slopes when X has an
// intercept; otherwise a least-squares fit of g(rᵢ) pulled into the interior.
Vector default_start(const Family& family, const Vector& response, const Matrix& X) {
  const double rbar = response.mean();
  const Eigen::Index icol = intercept_column(X);
  Vector beta = Vector::Zero(X.cols());
  if (icol >= 0 && family.mean_domain().contains(rbar)) {
    beta[icol] = family.link(rbar);
    return beta;
  }
  Vector z(response.size());
  for (Eigen::Index i = 0; i < response.size(); ++i) {
    double r = 0.5 * (response[i] + rbar);
    if (family.kind() == FamilyKind::kBernoulli) r = std::clamp(r, 0.01, 0.99);
    if (family.kind() == FamilyKind::kPoisson || family.kind() == FamilyKind::kGamma) {
      r = std::max(r, 0.01);
    }
    z[i] = family.link(r);
  }
  return X.colPivHouseholderQr().solve(z);
}

}  // namespace

Eigen::Index intercept_column(const Matrix& X) {
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if ((X.col(j).array() == 1.0).all()) return j;
  }
  return -1;
}

double glm_log_kernel(const Family& family, const Vector& response, const Vector& eta,
                      double precision) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (!family.in_canonical_domain(eta[i])) return kNegInf;
    total += response[i] * eta[i] - family.cumulant(eta[i]);
  }
  return precision * total;
}

FitResult irls(const Family& family, const Vector& response, const Matrix& X, double precision,
               const Vector* start, const IrlsOptions& options) {
  if (response.size() != X.rows()) throw DimensionError("irls: response length differs from rows of X");
  if (!(precision > 0.0)) throw DomainError("irls: precision must be positive");
  check_response(family, response);

  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  const double score_scale = options.score_tolerance * static_cast<double>(n) * std::min(1.0, precision);

  Vector beta = start != nullptr ? *start : default_start(family, response, X);
  Vector eta = X * beta;
  double kernel = glm_log_kernel(family, response, eta, precision);
  if (!std::isfinite(kernel)) {
    beta = default_start(family, response, X);
    eta = X * beta;
    kernel = glm_log_kernel(family, response, eta, precision);
    if (!std::isfinite(kernel)) throw FitError("irls: starting values are outside the domain", beta, false);
  }

  Vector mu(n);
  Vector w(n);
  Matrix info(p, p);
  auto refresh = [&]() {
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = family.mean(eta[i]);
      w[i] = family.cumulant_second(eta[i]);
    }
    info.noalias() = X.transpose() * w.asDiagonal() * X;
  };
  refresh();

  FitResult result;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const Vector score = X.transpose() * (response - mu);
    Eigen::LLT<Matrix> llt(info);
    if (llt.info() != Eigen::Success) {
      if (w.minCoeff() < 1e-12) {
        throw FitError("irls: fitted means diverge to the boundary (separation)", beta, true);
      }
      throw SingularMatrixError("irls: X'WX is not positive definite (rank-deficient design?)");
    }
    const Vector step = llt.solve(score);

    double scale = 1.0;
    Vector next = beta + step;
    Vector next_eta = X * next;
    double next_kernel = glm_log_kernel(family, response, next_eta, precision);
    // A tiny Newton step changes the kernel by less than its rounding error, so
    // an apparent decrease there is noise; take the step to polish β̂.
    const bool polishing = step.norm() <= 1e-6 * (1.0 + beta.norm()) && std::isfinite(next_kernel);
    int halvings = 0;
    while (!polishing && !(next_kernel >= kernel) && halvings < options.max_halvings) {
      scale *= 0.5;
      next = beta + scale * step;
      next_eta = X * next;
      next_kernel = glm_log_kernel(family, response, next_eta, precision);
      ++halvings;
    }
    bool no_ascent = false;
    if (!polishing && !(next_kernel >= kernel)) {
      // No ascent along the Newton direction. That means the optimum only if the
      // predicted gain ½·score′step is below the rounding error of the kernel;
      // with huge kernels a far-off start can otherwise look converged.
      double magnitude = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) magnitude += std::abs(response[i] * eta[i]) + std::abs(family.cumulant(eta[i]));
      const double rounding = 64.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(n) * precision * magnitude;
      if (0.5 * precision * score.dot(step) > rounding + 1e-300) {
        throw FitError("irls: line search failed to increase the objective", beta, false);
      }
      no_ascent = true;
      next = beta;
      next_eta = eta;
      next_kernel = kernel;
    }

    const double change = std::abs(next_kernel - kernel) / (std::abs(next_kernel) + 1e-300);
    beta = next;
    eta = next_eta;
    kernel = next_kernel;
    refresh();
    const double score_norm = (X.transpose() * (response - mu)).cwiseAbs().maxCoeff();
    result.iterations = iter;
    // The second clause stops at machine precision when the score cannot get below
    // its tolerance because of cancellation in r - mu.
    const bool stalled = no_ascent || scale * step.norm() <= 1e-14 * (1.0 + beta.norm());
    // Newton converges quadratically, so insisting on a small final step costs
    // at most one extra iteration and leaves β̂ accurate to ~1e-14. Downstream
    // log-determinants are first order in the error of β̂.
    const bool small_step = no_ascent || scale * step.norm() <= 1e-7 * (1.0 + beta.norm());
    if (change < options.relative_tolerance && small_step && (score_norm < score_scale || stalled)) {
      result.converged = true;
      break;
    }
  }

  if (!result.converged) {
    bool separated = false;
    if (family.kind() == FamilyKind::kBernoulli || family.kind() == FamilyKind::kPoisson) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (w[i] < 1e-12) separated = true;
      }
    }
    throw FitError(separated ? "irls: fitted means diverge to the boundary (separation)"
                             : "irls: no convergence after " + std::to_string(options.max_iterations) +
                                   " iterations",
                   beta, separated);
  }

  result.beta_hat = beta;
  result.observed_information = precision * info;
  result.log_kernel_at_max = kernel;
  return result;
}

MleFit mle_with_se(const Family& family, const Vector& y, const Matrix& X, const IrlsOptions& options) {
  check_support(family, y);
  MleFit out;
  out.fit = irls(family, y, X, 1.0, nullptr, options);
  Eigen::LLT<Matrix> llt(out.fit.observed_information);
  if (llt.info() != Eigen::Success) throw SingularMatrixError("mle_with_se: singular information");
  const Matrix cov = llt.solve(Matrix::Identity(X.cols(), X.cols()));
  out.standard_errors = cov.diagonal().cwiseSqrt();
  return out;
}

}  // namespace hpglm
