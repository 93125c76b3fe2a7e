#include "hpglm/glm_priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "hpglm/errors.hpp"

namespace hpglm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Vector means_of(const Family& family, const Vector& eta) {
  Vector mu(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) mu[i] = family.mean(eta[i]);
  return mu;
}

void require_rows(const Matrix& X, Eigen::Index n, const char* what) {
  if (X.rows() != n) throw DimensionError(std::string(what) + ": vector length differs from rows of X");
}

void require_cols(const Matrix& X, const Vector& beta, const char* what) {
  if (X.cols() != beta.size()) throw DimensionError(std::string(what) + ": beta length differs from columns of X");
}

}  // namespace

HppHyper HppHyper::Shared(double lambda0, const Vector& mu0) {
  return {Vector::Constant(mu0.size(), lambda0), mu0};
}

void validate(const Family& family, const CiPrior& prior, const Matrix& X) {
  if (!(prior.lambda > 0.0) || !std::isfinite(prior.lambda)) throw DomainError("CI prior: lambda must be positive");
  require_rows(X, prior.m.size(), "CI prior");
  const MeanDomain dom = family.mean_domain();
  for (Eigen::Index i = 0; i < prior.m.size(); ++i) {
    if (!dom.contains(prior.m[i])) {
      throw DomainError("CI prior: m[" + std::to_string(i) + "] is not inside the mean domain");
    }
  }
}

void validate(const Family& family, const HppHyper& hyper) {
  if (hyper.lambda0.size() != hyper.mu0.size()) throw DimensionError("HPP hyperprior: lambda0 and mu0 lengths differ");
  const MeanDomain dom = family.mean_domain();
  for (Eigen::Index i = 0; i < hyper.mu0.size(); ++i) {
    if (!(hyper.lambda0[i] > 0.0)) {
      throw DomainError("HPP hyperprior: lambda0[" + std::to_string(i) + "] must be positive");
    }
    if (!dom.contains(hyper.mu0[i])) {
      throw DomainError("HPP hyperprior: mu0[" + std::to_string(i) + "] is not inside the mean domain");
    }
  }
}

void validate(const PowerPriorConfig& cfg, Eigen::Index p) {
  if (!(cfg.a0 > 0.0 && cfg.a0 <= 1.0)) throw DomainError("power prior: a0 must lie in (0, 1]");
  if (cfg.X0.cols() != p) throw DimensionError("power prior: historical design has the wrong number of columns");
  require_rows(cfg.X0, cfg.y0.size(), "power prior");
}

void validate(const GppConfig& cfg) {
  if (cfg.mu_beta.size() != cfg.sigma_beta.size()) throw DimensionError("GPP: mean and sd lengths differ");
  if (!(cfg.sigma_beta.array() > 0.0).all()) throw DomainError("GPP: standard deviations must be positive");
  if (!(cfg.lambda > 0.0 && cfg.lambda <= 1.0)) throw DomainError("GPP: lambda must lie in (0, 1]");
}

double ci_log_kernel(const Vector& beta, const CiPrior& prior, const Matrix& X, const Family& family) {
  require_rows(X, prior.m.size(), "ci_log_kernel");
  require_cols(X, beta, "ci_log_kernel");
  return glm_log_kernel(family, prior.m, X * beta, prior.lambda);
}

Vector ci_log_kernel_grad(const Vector& beta, const CiPrior& prior, const Matrix& X,
                          const Family& family) {
  require_rows(X, prior.m.size(), "ci_log_kernel_grad");
  require_cols(X, beta, "ci_log_kernel_grad");
  return prior.lambda * (X.transpose() * (prior.m - means_of(family, X * beta)));
}

LaplaceNormConst laplace_log_normconst(double lambda, const Vector& m, const Matrix& X,
                                       const Family& family, const Vector* start) {
  require_rows(X, m.size(), "laplace_log_normconst");
  const FitResult fit = irls(family, m, X, lambda, start);
  Eigen::LLT<Matrix> llt(fit.observed_information);
  if (llt.info() != Eigen::Success) throw SingularMatrixError("laplace_log_normconst: information is singular");
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double p = static_cast<double>(X.cols());
  const double value = 0.5 * p * std::log(2.0 * std::numbers::pi) - 0.5 * log_det + fit.log_kernel_at_max;
  return {value, fit.beta_hat};
}

Vector laplace_log_normconst_grad(double lambda, const Vector& m, const Matrix& X,
                                  const Family& family, const LaplaceNormConst& at,
                                  LaplaceGradient mode) {
  const Eigen::Index n = X.rows();
  if (mode == LaplaceGradient::kFiniteDifference) {
    const MeanDomain dom = family.mean_domain();
    Vector grad(n);
    Vector shifted = m;
    for (Eigen::Index i = 0; i < n; ++i) {
      double h = 1e-5 * (1.0 + std::abs(m[i]));
      h = std::min({h, 0.5 * (m[i] - dom.lower), 0.5 * (dom.upper - m[i])});
      shifted[i] = m[i] + h;
      const double up = laplace_log_normconst(lambda, shifted, X, family, &at.beta_hat).value;
      shifted[i] = m[i] - h;
      const double down = laplace_log_normconst(lambda, shifted, X, family, &at.beta_hat).value;
      shifted[i] = m[i];
      grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
  }
  const Vector eta = X * at.beta_hat;
  Vector w(n);
  Vector w3(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w[i] = family.cumulant_second(eta[i]);
    w3[i] = family.cumulant_third(eta[i]);
  }
  const Matrix A = X.transpose() * w.asDiagonal() * X;
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) throw SingularMatrixError("laplace gradient: X'WX is singular");
  const Matrix AinvXt = llt.solve(X.transpose());  // p × n
  const Vector h = (X.array() * AinvXt.transpose().array()).rowwise().sum();
  const Vector g_beta = X.transpose() * w3.cwiseProduct(h);
  return lambda * eta - 0.5 * (AinvXt.transpose() * g_beta);
}

CategoricalCells categorical_cells(const Matrix& X) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  std::map<std::vector<double>, int> index;
  CategoricalCells cells;
  cells.cell_of_row.resize(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> first_row;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> key(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) key[static_cast<std::size_t>(j)] = X(i, j);
    auto [it, inserted] = index.emplace(key, static_cast<int>(first_row.size()));
    if (inserted) {
      first_row.push_back(i);
      cells.sizes.push_back(0);
    }
    cells.cell_of_row[static_cast<std::size_t>(i)] = it->second;
    ++cells.sizes[static_cast<std::size_t>(it->second)];
  }
  if (static_cast<Eigen::Index>(first_row.size()) != p) {
    throw UnsupportedDesignError("exact normalizing constant needs a factor-only design with as many distinct rows (" +
                                 std::to_string(first_row.size()) + ") as columns (" + std::to_string(p) + ")");
  }
  cells.cell_rows.resize(p, p);
  for (Eigen::Index j = 0; j < p; ++j) cells.cell_rows.row(j) = X.row(first_row[static_cast<std::size_t>(j)]);
  Eigen::FullPivLU<Matrix> lu(cells.cell_rows);
  if (!lu.isInvertible()) throw UnsupportedDesignError("exact normalizing constant: the distinct design rows are linearly dependent");
  cells.log_abs_det = lu.matrixLU().diagonal().cwiseAbs().array().log().sum();
  return cells;
}

double exact_log_normconst_categorical(double lambda, const Vector& cell_m,
                                       const std::vector<int>& group_sizes, const Family& family) {
  if (static_cast<std::size_t>(cell_m.size()) != group_sizes.size()) {
    throw DimensionError("exact_log_normconst_categorical: one prediction per cell is required");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < group_sizes.size(); ++j) {
    const double a = lambda * group_sizes[j];
    total += family.log_conjugate_normalizer(a, a * cell_m[static_cast<Eigen::Index>(j)]);
  }
  return total;
}

namespace {

Vector cell_sums(const Vector& m, const CategoricalCells& cells) {
  Vector sums = Vector::Zero(static_cast<Eigen::Index>(cells.sizes.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) sums[cells.cell_of_row[static_cast<std::size_t>(i)]] += m[i];
  return sums;
}

}  // namespace

double exact_log_normconst(double lambda, const Vector& m, const CategoricalCells& cells,
                           const Family& family) {
  if (static_cast<std::size_t>(m.size()) != cells.cell_of_row.size()) {
    throw DimensionError("exact_log_normconst: m length differs from the design rows");
  }
  const Vector sums = cell_sums(m, cells);
  double total = -cells.log_abs_det;
  for (std::size_t j = 0; j < cells.sizes.size(); ++j) {
    total += family.log_conjugate_normalizer(lambda * cells.sizes[j], lambda * sums[static_cast<Eigen::Index>(j)]);
  }
  return total;
}

Vector exact_log_normconst_grad(double lambda, const Vector& m, const CategoricalCells& cells,
                                const Family& family) {
  const Vector sums = cell_sums(m, cells);
  Vector per_cell(sums.size());
  for (std::size_t j = 0; j < cells.sizes.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    per_cell[k] = lambda * family.log_conjugate_normalizer_dc(lambda * cells.sizes[j], lambda * sums[k]);
  }
  Vector grad(m.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) grad[i] = per_cell[cells.cell_of_row[static_cast<std::size_t>(i)]];
  return grad;
}

double hpp_hyper_log_pdf(const Vector& m, const HppHyper& hyper, const Family& family) {
  if (m.size() != hyper.mu0.size() || m.size() != hyper.lambda0.size()) {
    throw DimensionError("hpp_hyper_log_pdf: m, mu0 and lambda0 lengths differ");
  }
  const MeanDomain dom = family.mean_domain();
  double total = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (!dom.contains(m[i])) return kNegInf;
    const double theta = family.canonical(m[i]);
    total += hyper.lambda0[i] * (theta * hyper.mu0[i] - family.cumulant(theta)) - std::log(family.variance(m[i]));
  }
  return total;
}

Vector hpp_hyper_log_pdf_grad(const Vector& m, const HppHyper& hyper, const Family& family) {
  Vector grad(m.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = family.variance(m[i]);
    grad[i] = (hyper.lambda0[i] * (hyper.mu0[i] - m[i]) - family.variance_derivative(m[i])) / v;
  }
  return grad;
}

Vector mu0_from_coefficients(const Matrix& X1, const Vector& alpha0, const Family& family) {
  require_cols(X1, alpha0, "mu0_from_coefficients");
  const Vector eta = X1 * alpha0;
  const MeanDomain dom = family.mean_domain();
  Vector mu0(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    mu0[i] = family.link_inverse(eta[i]);
    if (!dom.contains(mu0[i])) {
      throw DomainError("mu0_from_coefficients: prior mean at row " + std::to_string(i + 1) +
                        " saturates to the boundary of the mean domain");
    }
  }
  return mu0;
}

JointEvaluation joint_log_posterior_eval(const Vector& beta, const Vector& m, const GlmData& data,
                                         double lambda, const HppHyper& hyper, const Family& family,
                                         const JointOptions& options) {
  const Matrix& X = data.X;
  require_rows(X, data.y.size(), "joint_log_posterior");
  require_rows(X, m.size(), "joint_log_posterior");
  require_cols(X, beta, "joint_log_posterior");

  JointEvaluation out{kNegInf, {}, {}, {}};
  const double hyper_value = hpp_hyper_log_pdf(m, hyper, family);
  if (!std::isfinite(hyper_value)) return out;
  const Vector eta = X * beta;
  const Vector response = (data.y + lambda * m) / (1.0 + lambda);
  const double kernel = glm_log_kernel(family, response, eta, 1.0 + lambda);
  if (!std::isfinite(kernel)) return out;

  double log_z = 0.0;
  LaplaceNormConst laplace{0.0, {}};
  if (options.normconst == NormConst::kLaplace) {
    laplace = laplace_log_normconst(lambda, m, X, family, options.laplace_start);
    log_z = laplace.value;
    out.laplace_beta_hat = laplace.beta_hat;
  } else {
    if (options.cells == nullptr) throw UnsupportedDesignError("joint_log_posterior: exact constant needs categorical cells");
    log_z = exact_log_normconst(lambda, m, *options.cells, family);
  }
  out.value = kernel + hyper_value - log_z;
  if (!options.with_gradient) return out;

  out.grad_beta = X.transpose() * ((data.y + lambda * m) - (1.0 + lambda) * means_of(family, eta));
  Vector grad_log_z = options.normconst == NormConst::kLaplace
                          ? laplace_log_normconst_grad(lambda, m, X, family, laplace, options.gradient)
                          : exact_log_normconst_grad(lambda, m, *options.cells, family);
  out.grad_m = lambda * eta + hpp_hyper_log_pdf_grad(m, hyper, family) - grad_log_z;
  return out;
}

double joint_log_posterior(const Vector& beta, const Vector& m, const GlmData& data, double lambda,
                           const HppHyper& hyper, const Family& family, NormConst normconst,
                           const CategoricalCells* cells) {
  JointOptions options;
  options.normconst = normconst;
  options.cells = cells;
  options.with_gradient = false;
  return joint_log_posterior_eval(beta, m, data, lambda, hyper, family, options).value;
}

double power_prior_log_kernel(const Vector& beta, const PowerPriorConfig& cfg, const Family& family) {
  require_cols(cfg.X0, beta, "power_prior_log_kernel");
  require_rows(cfg.X0, cfg.y0.size(), "power_prior_log_kernel");
  return glm_log_kernel(family, cfg.y0, cfg.X0 * beta, cfg.a0);
}

Vector power_prior_log_kernel_grad(const Vector& beta, const PowerPriorConfig& cfg,
                                   const Family& family) {
  require_cols(cfg.X0, beta, "power_prior_log_kernel_grad");
  return cfg.a0 * (cfg.X0.transpose() * (cfg.y0 - means_of(family, cfg.X0 * beta)));
}

double gpp_log_kernel(const Vector& beta, const GppConfig& cfg) {
  if (beta.size() != cfg.mu_beta.size()) throw DimensionError("gpp_log_kernel: beta length differs from the prior mean");
  const Vector z = (beta - cfg.mu_beta).cwiseQuotient(cfg.sigma_beta);
  return -0.5 * cfg.lambda * z.squaredNorm();
}

Vector gpp_log_kernel_grad(const Vector& beta, const GppConfig& cfg) {
  if (beta.size() != cfg.mu_beta.size()) throw DimensionError("gpp_log_kernel_grad: beta length differs from the prior mean");
  return -cfg.lambda * (beta - cfg.mu_beta).cwiseQuotient(cfg.sigma_beta.cwiseAbs2());
}

}  // namespace hpglm
