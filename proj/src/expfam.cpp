#include "hpglm/expfam.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/digamma.hpp>

#include "hpglm/errors.hpp"
#include "special.hpp"

namespace hpglm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log1p_exp(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::string format_value(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

Family Family::FromName(std::string_view name) {
  if (name == "bernoulli" || name == "logistic" || name == "binomial") return Family(FamilyKind::kBernoulli);
  if (name == "poisson") return Family(FamilyKind::kPoisson);
  if (name == "gamma" || name == "exponential") return Family(FamilyKind::kGamma);
  if (name == "normal" || name == "gaussian") return Family(FamilyKind::kNormal);
  throw ConfigError("unknown family '" + std::string(name) +
                    "' (expected bernoulli, poisson, gamma or normal)");
}

std::string_view Family::name() const {
  switch (kind_) {
    case FamilyKind::kBernoulli: return "bernoulli";
    case FamilyKind::kPoisson: return "poisson";
    case FamilyKind::kGamma: return "gamma";
    case FamilyKind::kNormal: return "normal";
  }
  return "unknown";
}

MeanDomain Family::mean_domain() const {
  switch (kind_) {
    case FamilyKind::kBernoulli: return {0.0, 1.0};
    case FamilyKind::kPoisson:
    case FamilyKind::kGamma: return {0.0, kInf};
    case FamilyKind::kNormal: return {-kInf, kInf};
  }
  return {-kInf, kInf};
}

bool Family::in_canonical_domain(double theta) const {
  if (!std::isfinite(theta)) return false;
  return kind_ != FamilyKind::kGamma || theta < 0.0;
}

bool Family::in_support(double y) const {
  if (!std::isfinite(y)) return false;
  switch (kind_) {
    case FamilyKind::kBernoulli: return y == 0.0 || y == 1.0;
    case FamilyKind::kPoisson: return y >= 0.0 && std::floor(y) == y;
    case FamilyKind::kGamma: return y >= 0.0;
    case FamilyKind::kNormal: return true;
  }
  return false;
}

void Family::require_canonical(double theta) const {
  if (!in_canonical_domain(theta)) {
    throw DomainError("invalid canonical parameter " + format_value(theta) + " for " +
                      std::string(name()) + " family");
  }
}

void Family::require_mean(double mu) const {
  if (!mean_domain().contains(mu)) {
    throw DomainError("mean " + format_value(mu) + " is outside the open mean domain of the " +
                      std::string(name()) + " family");
  }
}

double Family::cumulant(double theta) const {
  require_canonical(theta);
  switch (kind_) {
    case FamilyKind::kBernoulli: return log1p_exp(theta);
    case FamilyKind::kPoisson: return std::exp(theta);
    case FamilyKind::kGamma: return -std::log(-theta);
    case FamilyKind::kNormal: return 0.5 * theta * theta;
  }
  return 0.0;
}

double Family::mean(double theta) const {
  require_canonical(theta);
  switch (kind_) {
    case FamilyKind::kBernoulli: return logistic(theta);
    case FamilyKind::kPoisson: return std::exp(theta);
    case FamilyKind::kGamma: return -1.0 / theta;
    case FamilyKind::kNormal: return theta;
  }
  return 0.0;
}

double Family::cumulant_second(double theta) const {
  require_canonical(theta);
  switch (kind_) {
    case FamilyKind::kBernoulli: {
      const double p = logistic(theta);
      return p * (1.0 - p);
    }
    case FamilyKind::kPoisson: return std::exp(theta);
    case FamilyKind::kGamma: return 1.0 / (theta * theta);
    case FamilyKind::kNormal: return 1.0;
  }
  return 0.0;
}

double Family::cumulant_third(double theta) const {
  require_canonical(theta);
  switch (kind_) {
    case FamilyKind::kBernoulli: {
      const double p = logistic(theta);
      return p * (1.0 - p) * (1.0 - 2.0 * p);
    }
    case FamilyKind::kPoisson: return std::exp(theta);
    case FamilyKind::kGamma: return -2.0 / (theta * theta * theta);
    case FamilyKind::kNormal: return 0.0;
  }
  return 0.0;
}

double Family::canonical(double mu) const {
  require_mean(mu);
  switch (kind_) {
    case FamilyKind::kBernoulli: return std::log(mu) - std::log1p(-mu);
    case FamilyKind::kPoisson: return std::log(mu);
    case FamilyKind::kGamma: return -1.0 / mu;
    case FamilyKind::kNormal: return mu;
  }
  return 0.0;
}

double Family::variance(double mu) const {
  require_mean(mu);
  switch (kind_) {
    case FamilyKind::kBernoulli: return mu * (1.0 - mu);
    case FamilyKind::kPoisson: return mu;
    case FamilyKind::kGamma: return mu * mu;
    case FamilyKind::kNormal: return 1.0;
  }
  return 0.0;
}

double Family::variance_derivative(double mu) const {
  require_mean(mu);
  switch (kind_) {
    case FamilyKind::kBernoulli: return 1.0 - 2.0 * mu;
    case FamilyKind::kPoisson: return 1.0;
    case FamilyKind::kGamma: return 2.0 * mu;
    case FamilyKind::kNormal: return 0.0;
  }
  return 0.0;
}

double Family::log_base_measure(double y) const {
  switch (kind_) {
    case FamilyKind::kBernoulli:
    case FamilyKind::kGamma: return 0.0;
    case FamilyKind::kPoisson: return -detail::log_gamma(y + 1.0);
    case FamilyKind::kNormal: return -0.5 * y * y - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return 0.0;
}

double Family::log_conjugate_normalizer(double a, double c) const {
  if (!(a > 0.0) || !std::isfinite(c)) {
    throw DomainError("conjugate normalizer requires a > 0 and finite c");
  }
  switch (kind_) {
    case FamilyKind::kBernoulli:
      if (!(c > 0.0 && c < a)) throw DomainError("bernoulli normalizer requires 0 < c < a");
      return detail::log_gamma(c) + detail::log_gamma(a - c) - detail::log_gamma(a);
    case FamilyKind::kPoisson:
      if (!(c > 0.0)) throw DomainError("poisson normalizer requires c > 0");
      return detail::log_gamma(c) - c * std::log(a);
    case FamilyKind::kGamma:
      if (!(c > 0.0)) throw DomainError("gamma normalizer requires c > 0");
      return detail::log_gamma(a + 1.0) - (a + 1.0) * std::log(c);
    case FamilyKind::kNormal:
      return 0.5 * std::log(2.0 * std::numbers::pi / a) + 0.5 * c * c / a;
  }
  return 0.0;
}

double Family::log_conjugate_normalizer_dc(double a, double c) const {
  using boost::math::digamma;
  switch (kind_) {
    case FamilyKind::kBernoulli:
      if (!(c > 0.0 && c < a)) throw DomainError("bernoulli normalizer requires 0 < c < a");
      return digamma(c) - digamma(a - c);
    case FamilyKind::kPoisson:
      if (!(c > 0.0)) throw DomainError("poisson normalizer requires c > 0");
      return digamma(c) - std::log(a);
    case FamilyKind::kGamma:
      if (!(c > 0.0)) throw DomainError("gamma normalizer requires c > 0");
      return -(a + 1.0) / c;
    case FamilyKind::kNormal: return c / a;
  }
  return 0.0;
}

double mean_canonical_bijection(const Family& family, double value, Direction direction) {
  return direction == Direction::kToMean ? family.mean(value) : family.canonical(value);
}

void check_support(const Family& family, const Vector& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!family.in_support(y[i])) {
      throw DataError("response " + format_value(y[i]) + " at row " + std::to_string(i + 1) +
                      " is outside the support of the " + std::string(family.name()) + " family");
    }
  }
}

double log_likelihood(const Family& family, const Vector& y, const Vector& eta) {
  if (y.size() != eta.size()) {
    throw DimensionError("log_likelihood: response and linear predictor lengths differ");
  }
  check_support(family, y);
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    total += y[i] * eta[i] - family.cumulant(eta[i]) + family.log_base_measure(y[i]);
  }
  return total;
}

Vector log_likelihood_gradient(const Family& family, const Vector& y, const Matrix& X,
                               const Vector& beta) {
  const Vector eta = X * beta;
  Vector resid(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) resid[i] = y[i] - family.mean(eta[i]);
  return X.transpose() * resid;
}

}  // namespace hpglm
