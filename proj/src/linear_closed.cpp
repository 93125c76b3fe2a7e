#include "hpglm/linear_closed.hpp"

#include <cmath>

#include "hpglm/errors.hpp"

namespace hpglm {
namespace {

void check_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) throw DomainError(std::string(name) + " must be positive and finite");
}

// (X′X)⁻¹ with a hard failure on rank deficiency.
Matrix gram_inverse(const Matrix& X) {
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  if (qr.rank() < X.cols()) throw SingularMatrixError("design matrix does not have full column rank");
  Eigen::LLT<Matrix> llt(X.transpose() * X);
  if (llt.info() != Eigen::Success) throw SingularMatrixError("X'X is not positive definite");
  return llt.solve(Matrix::Identity(X.cols(), X.cols()));
}

}  // namespace

void GaussianMoments::validate() const {
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size()) {
    throw DimensionError("Gaussian moments: covariance shape does not match the mean");
  }
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() >= 1e-10) {
    throw NumericError("Gaussian moments: covariance is not symmetric");
  }
  Eigen::LLT<Matrix> llt(covariance);
  if (llt.info() != Eigen::Success) throw NumericError("Gaussian moments: covariance is not positive definite");
}

double lambda_h(double lambda, double lambda0) { return lambda0 * lambda / (lambda0 + lambda); }

Matrix hat_matrix(const Matrix& X) { return X * gram_inverse(X) * X.transpose(); }

GaussianMoments lm_joint_prior(const Matrix& X, double lambda, double lambda0, const Vector& mu0) {
  check_positive(lambda, "lambda");
  check_positive(lambda0, "lambda0");
  if (mu0.size() != X.rows()) throw DimensionError("lm_joint_prior: mu0 length differs from rows of X");
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  const Matrix G = gram_inverse(X);
  const Matrix proj = G * X.transpose();  // β̂_m = proj · m

  GaussianMoments out;
  out.mean.resize(p + n);
  out.mean << proj * mu0, mu0;
  out.covariance.resize(p + n, p + n);
  out.covariance.topLeftCorner(p, p) = (1.0 / lambda + 1.0 / lambda0) * G;
  out.covariance.topRightCorner(p, n) = proj / lambda0;
  out.covariance.bottomLeftCorner(n, p) = proj.transpose() / lambda0;
  out.covariance.bottomRightCorner(n, n) = Matrix::Identity(n, n) / lambda0;
  return out;
}

GaussianMoments lm_beta_posterior(const Matrix& X, const Vector& y, double lambda, double lambda0,
                                  const Vector& mu0, double sigma) {
  check_positive(lambda, "lambda");
  check_positive(lambda0, "lambda0");
  check_positive(sigma, "sigma");
  if (y.size() != X.rows() || mu0.size() != X.rows()) {
    throw DimensionError("lm_beta_posterior: y and mu0 must have one entry per row of X");
  }
  const Matrix G = gram_inverse(X);
  const Matrix proj = G * X.transpose();
  const Vector beta_mle = proj * (y / sigma);
  const Vector beta_mu0 = proj * (mu0 / sigma);
  const double shrink = 1.0 / (1.0 + lambda_h(lambda, lambda0));
  return {sigma * (shrink * beta_mle + (1.0 - shrink) * beta_mu0), sigma * sigma * shrink * G};
}

GaussianMoments lm_m_posterior(const Matrix& X, const Vector& y, double lambda, double lambda0,
                               const Vector& mu0, double sigma) {
  check_positive(lambda, "lambda");
  check_positive(lambda0, "lambda0");
  check_positive(sigma, "sigma");
  if (y.size() != X.rows() || mu0.size() != X.rows()) {
    throw DimensionError("lm_m_posterior: y and mu0 must have one entry per row of X");
  }
  const Eigen::Index n = X.rows();
  const Matrix H = hat_matrix(X);
  const Matrix precision = lambda0 * Matrix::Identity(n, n) + (lambda / (1.0 + lambda)) * H;
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) throw SingularMatrixError("lm_m_posterior: posterior precision is singular");
  Matrix cov = llt.solve(Matrix::Identity(n, n));
  cov = 0.5 * (cov + cov.transpose());
  const Matrix Lambda = lambda0 * cov;
  const Vector fitted = H * (y / sigma);
  const Vector mean = Lambda * (mu0 / sigma) + (Matrix::Identity(n, n) - Lambda) * fitted;
  return {sigma * mean, sigma * sigma * cov};
}

GaussianMoments lm_joint_posterior(const Matrix& X, const Vector& y, double lambda, const Vector& lambda0,
                                   const Vector& mu0) {
  check_positive(lambda, "lambda");
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (y.size() != n || mu0.size() != n || lambda0.size() != n) {
    throw DimensionError("lm_joint_posterior: y, mu0 and lambda0 must have one entry per row of X");
  }
  for (Eigen::Index i = 0; i < n; ++i) check_positive(lambda0[i], "lambda0");
  const Matrix G = gram_inverse(X);
  const Matrix proj = G * X.transpose();
  const Vector var_m = lambda0.cwiseInverse();

  Vector mean(p + n);
  mean << proj * mu0, mu0;
  Matrix cov(p + n, p + n);
  const Matrix cross = proj * var_m.asDiagonal();
  cov.topLeftCorner(p, p) = G / lambda + cross * proj.transpose();
  cov.topRightCorner(p, n) = cross;
  cov.bottomLeftCorner(n, p) = cross.transpose();
  cov.bottomRightCorner(n, n) = var_m.asDiagonal();

  // y = Hz + ε with H = [X 0]; gain K = ΣH′(HΣH′ + I)⁻¹.
  const Matrix sigma_ht = cov.leftCols(p) * X.transpose();
  Matrix innovation = X * sigma_ht.topRows(p) + Matrix::Identity(n, n);
  const Eigen::LLT<Matrix> llt(innovation);
  const Matrix gain_t = llt.solve(sigma_ht.transpose());
  GaussianMoments out;
  out.mean = mean + gain_t.transpose() * (y - X * mean.head(p));
  out.covariance = cov - sigma_ht * gain_t;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

Matrix draw_gaussian(const GaussianMoments& moments, std::size_t count, std::mt19937_64& rng) {
  Eigen::LLT<Matrix> llt(moments.covariance);
  if (llt.info() != Eigen::Success) throw NumericError("draw_gaussian: covariance is not positive definite");
  const Matrix L = llt.matrixL();
  const Eigen::Index d = moments.mean.size();
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(static_cast<Eigen::Index>(count), d);
  Vector z(d);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index j = 0; j < d; ++j) z[j] = normal(rng);
    out.row(r) = (moments.mean + L * z).transpose();
  }
  return out;
}

}  // namespace hpglm
