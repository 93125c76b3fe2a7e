#include "hpglm/models.hpp"

#include <cmath>
#include <limits>

#include "hpglm/errors.hpp"
#include "hpglm/irls.hpp"

namespace hpglm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logistic(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

// Starting β: the MLE, or when it does not exist (separation, all-zero
// counts) the maximizer for a response pulled halfway to its mean.
Vector starting_beta(const Family& family, const Vector& y, const Matrix& X) {
  try {
    return irls(family, y, X, 1.0).beta_hat;
  } catch (const NumericError&) {
    const Vector pulled = 0.5 * (y.array() + y.mean()).matrix();
    return irls(family, pulled, X, 1.0).beta_hat;
  }
}

}  // namespace

std::vector<std::string> LogDensity::output_names() const {
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < dim(); ++j) names.push_back("x" + std::to_string(j));
  return names;
}

std::vector<std::string> default_beta_names(Eigen::Index p) {
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < p; ++j) names.push_back("beta" + std::to_string(j));
  return names;
}

MTransform transform_m(const Family& family, const Vector& m) {
  MTransform out{Vector(m.size()), 0.0};
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    switch (family.kind()) {
      case FamilyKind::kBernoulli:
        out.m_tilde[i] = std::log(m[i]) - std::log1p(-m[i]);
        out.log_jacobian += std::log(m[i] * (1.0 - m[i]));
        break;
      case FamilyKind::kPoisson:
      case FamilyKind::kGamma:
        out.m_tilde[i] = std::log(m[i]);
        out.log_jacobian += std::log(m[i]);
        break;
      case FamilyKind::kNormal: out.m_tilde[i] = m[i]; break;
    }
  }
  return out;
}

Vector inverse_transform_m(const Family& family, const Vector& m_tilde) {
  Vector m(m_tilde.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    switch (family.kind()) {
      case FamilyKind::kBernoulli: m[i] = logistic(m_tilde[i]); break;
      case FamilyKind::kPoisson:
      case FamilyKind::kGamma: m[i] = std::exp(m_tilde[i]); break;
      case FamilyKind::kNormal: m[i] = m_tilde[i]; break;
    }
  }
  return m;
}

HppPosterior::HppPosterior(Family family, GlmData data, double lambda, HppHyper hyper, NormConst normconst,
                           LaplaceGradient gradient)
    : family_(family),
      data_(std::move(data)),
      lambda_(lambda),
      hyper_(std::move(hyper)),
      normconst_(normconst),
      gradient_(gradient),
      beta_names_(default_beta_names(data_.X.cols())) {
  if (!(lambda_ > 0.0)) throw DomainError("HPP: lambda must be positive");
  validate(family_, hyper_);
  if (hyper_.mu0.size() != data_.X.rows() || data_.y.size() != data_.X.rows()) {
    throw DimensionError("HPP: y, mu0 and lambda0 need one entry per row of X");
  }
  check_support(family_, data_.y);
  if (normconst_ == NormConst::kExactCategorical) cells_ = categorical_cells(data_.X);
}

Eigen::Index HppPosterior::dim() const { return data_.X.cols() + data_.X.rows(); }

double HppPosterior::evaluate(const Vector& x, Vector* grad) {
  const Eigen::Index p = data_.X.cols();
  const Eigen::Index n = data_.X.rows();
  const Vector beta = x.head(p);
  const Vector m_tilde = x.tail(n);
  const Vector m = inverse_transform_m(family_, m_tilde);

  JointOptions opt;
  opt.normconst = normconst_;
  opt.gradient = gradient_;
  opt.cells = cells_ ? &*cells_ : nullptr;
  opt.with_gradient = grad != nullptr;
  opt.laplace_start = warm_start_.size() == p ? &warm_start_ : nullptr;
  JointEvaluation ev;
  try {
    ev = joint_log_posterior_eval(beta, m, data_, lambda_, hyper_, family_, opt);
  } catch (const NumericError&) {
    // A warm start left over from a wild trajectory can break the inner fit.
    if (opt.laplace_start == nullptr) throw;
    opt.laplace_start = nullptr;
    ev = joint_log_posterior_eval(beta, m, data_, lambda_, hyper_, family_, opt);
  }
  if (!std::isfinite(ev.value)) return kNegInf;
  if (ev.laplace_beta_hat.size() == p) warm_start_ = ev.laplace_beta_hat;

  double log_jac = 0.0;
  Vector dm(n), djac(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (family_.kind()) {
      case FamilyKind::kBernoulli:
        dm[i] = m[i] * (1.0 - m[i]);
        log_jac += std::log(dm[i]);
        djac[i] = 1.0 - 2.0 * m[i];
        break;
      case FamilyKind::kPoisson:
      case FamilyKind::kGamma:
        dm[i] = m[i];
        log_jac += m_tilde[i];
        djac[i] = 1.0;
        break;
      case FamilyKind::kNormal:
        dm[i] = 1.0;
        djac[i] = 0.0;
        break;
    }
  }
  if (grad != nullptr) {
    grad->resize(p + n);
    grad->head(p) = ev.grad_beta;
    grad->tail(n) = ev.grad_m.cwiseProduct(dm) + djac;
  }
  return ev.value + log_jac;
}

std::unique_ptr<LogDensity> HppPosterior::clone() const { return std::make_unique<HppPosterior>(*this); }

Vector HppPosterior::initial_point() const {
  const Eigen::Index p = data_.X.cols();
  Vector x(dim());
  try {
    x.head(p) = irls(family_, data_.y, data_.X, 1.0).beta_hat;
  } catch (const NumericError&) {
    const Vector pulled = (data_.y + lambda_ * hyper_.mu0) / (1.0 + lambda_);
    x.head(p) = irls(family_, pulled, data_.X, 1.0 + lambda_).beta_hat;
  }
  x.tail(data_.X.rows()) = transform_m(family_, hyper_.mu0).m_tilde;
  return x;
}

Vector HppPosterior::to_output(const Vector& x) const {
  Vector out = x;
  const Eigen::Index n = data_.X.rows();
  out.tail(n) = inverse_transform_m(family_, x.tail(n));
  return out;
}

std::vector<std::string> HppPosterior::output_names() const {
  std::vector<std::string> names = beta_names_;
  for (Eigen::Index i = 0; i < data_.X.rows(); ++i) names.push_back("m" + std::to_string(i + 1));
  return names;
}

FixedPriorPosterior::FixedPriorPosterior(Family family, GlmData data, FixedPrior kind)
    : family_(family), data_(std::move(data)), kind_(kind), beta_names_(default_beta_names(data_.X.cols())) {
  if (data_.y.size() != data_.X.rows()) throw DimensionError("y length differs from rows of X");
  check_support(family_, data_.y);
}

FixedPriorPosterior FixedPriorPosterior::Ci(Family family, GlmData data, CiPrior prior) {
  validate(family, prior, data.X);
  FixedPriorPosterior out(family, std::move(data), FixedPrior::kCi);
  out.ci_ = std::move(prior);
  return out;
}

FixedPriorPosterior FixedPriorPosterior::Power(Family family, GlmData data, PowerPriorConfig cfg) {
  validate(cfg, data.X.cols());
  check_support(family, cfg.y0);
  FixedPriorPosterior out(family, std::move(data), FixedPrior::kPowerPrior);
  out.pp_ = std::move(cfg);
  return out;
}

FixedPriorPosterior FixedPriorPosterior::Gaussian(Family family, GlmData data, GppConfig cfg) {
  validate(cfg);
  if (cfg.mu_beta.size() != data.X.cols()) throw DimensionError("GPP: prior mean length differs from columns of X");
  FixedPriorPosterior out(family, std::move(data), FixedPrior::kGaussianPowerPrior);
  out.gpp_ = std::move(cfg);
  return out;
}

FixedPriorPosterior FixedPriorPosterior::Flat(Family family, GlmData data) {
  return FixedPriorPosterior(family, std::move(data), FixedPrior::kFlat);
}

double FixedPriorPosterior::evaluate(const Vector& x, Vector* grad) {
  const Vector eta = data_.X * x;
  double value = glm_log_kernel(family_, data_.y, eta, 1.0);
  if (!std::isfinite(value)) return kNegInf;
  switch (kind_) {
    case FixedPrior::kCi: value += ci_log_kernel(x, *ci_, data_.X, family_); break;
    case FixedPrior::kPowerPrior: value += power_prior_log_kernel(x, *pp_, family_); break;
    case FixedPrior::kGaussianPowerPrior: value += gpp_log_kernel(x, *gpp_); break;
    case FixedPrior::kFlat: break;
  }
  if (!std::isfinite(value)) return kNegInf;
  if (grad != nullptr) {
    *grad = log_likelihood_gradient(family_, data_.y, data_.X, x);
    switch (kind_) {
      case FixedPrior::kCi: *grad += ci_log_kernel_grad(x, *ci_, data_.X, family_); break;
      case FixedPrior::kPowerPrior: *grad += power_prior_log_kernel_grad(x, *pp_, family_); break;
      case FixedPrior::kGaussianPowerPrior: *grad += gpp_log_kernel_grad(x, *gpp_); break;
      case FixedPrior::kFlat: break;
    }
  }
  return value;
}

std::unique_ptr<LogDensity> FixedPriorPosterior::clone() const {
  return std::make_unique<FixedPriorPosterior>(*this);
}

Vector FixedPriorPosterior::initial_point() const {
  if (kind_ == FixedPrior::kCi) {
    const double lambda = ci_->lambda;
    return irls(family_, (data_.y + lambda * ci_->m) / (1.0 + lambda), data_.X, 1.0 + lambda).beta_hat;
  }
  return starting_beta(family_, data_.y, data_.X);
}

std::vector<std::string> FixedPriorPosterior::output_names() const { return beta_names_; }

}  // namespace hpglm
