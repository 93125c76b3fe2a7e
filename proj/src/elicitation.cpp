#include "hpglm/elicitation.hpp"

#include <cmath>
#include <limits>

#include "hpglm/errors.hpp"
#include "hpglm/irls.hpp"

namespace hpglm {
namespace {

void require_interior(const Family& family, double mu0) {
  if (!family.mean_domain().contains(mu0)) {
    throw DomainError("mu0 = " + std::to_string(mu0) + " is not inside the mean domain of the " +
                      std::string(family.name()) + " family");
  }
}

}  // namespace

void HistoricalSummary::validate() const {
  if (beta0_hat.size() != se0.size()) throw DimensionError("summary: estimates and standard errors differ in length");
  for (Eigen::Index j = 0; j < se0.size(); ++j) {
    if (!std::isfinite(beta0_hat[j])) throw DataError("summary: estimate " + std::to_string(j + 1) + " is not finite");
    if (!std::isfinite(se0[j]) || se0[j] < 0.0) {
      throw DataError("summary: standard error " + std::to_string(j + 1) + " must be finite and non-negative");
    }
  }
}

HistoricalSummary HistoricalSummary::FromData(const Family& family, const Vector& y0, const Matrix& X0) {
  const MleFit fit = mle_with_se(family, y0, X0);
  return {fit.fit.beta_hat, fit.standard_errors};
}

Vector delta_method_tau(const Matrix& X, const HistoricalSummary& summary, const Family& family) {
  summary.validate();
  if (X.cols() != summary.beta0_hat.size()) throw DimensionError("delta method: X and the summary differ in p");
  const Vector eta = X * summary.beta0_hat;
  const Vector se2 = summary.se0.array().square();
  Vector tau(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double mu = family.link_inverse(eta[i]);
    const double slope = family.link_derivative(mu);
    tau[i] = X.row(i).array().square().matrix().dot(se2) / (slope * slope);
  }
  return tau;
}

double lambda0_from_tau(const Family& family, double mu0, double tau) {
  require_interior(family, mu0);
  if (!(tau >= 0.0)) throw DomainError("lambda0_from_tau: tau must be non-negative");
  if (tau == 0.0) return std::numeric_limits<double>::infinity();
  switch (family.kind()) {
    case FamilyKind::kBernoulli: {
      const double bound = mu0 * (1.0 - mu0);
      if (tau >= bound) {
        throw InfeasibleVarianceError("variance " + std::to_string(tau) + " is not below mu0(1 - mu0) = " +
                                          std::to_string(bound) + ", the largest a beta hyperprior allows",
                                      0);
      }
      return bound / tau - 1.0;
    }
    case FamilyKind::kPoisson: return mu0 / tau;
    case FamilyKind::kNormal: return 1.0 / tau;
    case FamilyKind::kGamma: return 1.0 + mu0 * mu0 / tau;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double hyperprior_variance(const Family& family, double mu0, double lambda0) {
  require_interior(family, mu0);
  if (!(lambda0 > 0.0)) throw DomainError("hyperprior_variance: lambda0 must be positive");
  switch (family.kind()) {
    case FamilyKind::kBernoulli: return mu0 * (1.0 - mu0) / (lambda0 + 1.0);
    case FamilyKind::kPoisson: return mu0 / lambda0;
    case FamilyKind::kNormal: return 1.0 / lambda0;
    case FamilyKind::kGamma:
      // Inverse gamma with shape λ₀ + 1; the variance is infinite for λ₀ ≤ 1.
      return lambda0 > 1.0 ? mu0 * mu0 / (lambda0 - 1.0) : std::numeric_limits<double>::infinity();
  }
  return std::numeric_limits<double>::quiet_NaN();
}

bool ElicitedHyper::any_capped() const {
  for (bool c : capped) {
    if (c) return true;
  }
  return false;
}

ElicitedHyper build_hpp_from_summary(const Matrix& X, const HistoricalSummary& summary, const Family& family) {
  const Vector tau = delta_method_tau(X, summary, family);
  const Vector eta = X * summary.beta0_hat;
  ElicitedHyper out;
  out.hyper.mu0.resize(X.rows());
  out.hyper.lambda0.resize(X.rows());
  out.capped.assign(static_cast<std::size_t>(X.rows()), false);
  std::vector<std::size_t> infeasible;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double mu = family.link_inverse(eta[i]);
    if (!family.mean_domain().contains(mu)) {
      throw DomainError("elicitation: mu0 at row " + std::to_string(i + 1) + " saturates to the boundary");
    }
    out.hyper.mu0[i] = mu;
    try {
      double l0 = lambda0_from_tau(family, mu, tau[i]);
      if (!(l0 <= kLambda0Cap)) {
        l0 = kLambda0Cap;
        out.capped[static_cast<std::size_t>(i)] = true;
      }
      out.hyper.lambda0[i] = l0;
    } catch (const InfeasibleVarianceError&) {
      infeasible.push_back(static_cast<std::size_t>(i));
    }
  }
  if (!infeasible.empty()) {
    std::string rows;
    for (std::size_t k = 0; k < infeasible.size() && k < 20; ++k) rows += (k ? ", " : "") + std::to_string(infeasible[k] + 1);
    if (infeasible.size() > 20) rows += ", ...";
    throw InfeasibleVarianceError("elicitation: the delta-method variance exceeds mu0(1 - mu0) at " +
                                      std::to_string(infeasible.size()) + " row(s): " + rows,
                                  infeasible.front());
  }
  return out;
}

}  // namespace hpglm
