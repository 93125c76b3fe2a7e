#include "hpglm/iid_hpp.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "hpglm/errors.hpp"
#include "special.hpp"

namespace hpglm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& v) {
  double hi = kNegInf;
  for (double x : v) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

// Normalizes log-scale weights; entries of −∞ receive weight zero.
std::vector<double> normalize_log_weights(const std::vector<double>& logw) {
  const double total = log_sum_exp(logw);
  std::vector<double> out(logw.size());
  for (std::size_t k = 0; k < logw.size(); ++k) out[k] = std::exp(logw[k] - total);
  return out;
}

double log_normalizer_of(const StandardDensity& d) {
  using detail::log_gamma;
  switch (d.kind) {
    case DensityKind::kBeta: return detail::log_beta(d.first, d.second);
    case DensityKind::kGamma: return log_gamma(d.first) - d.first * std::log(d.second);
    case DensityKind::kInverseGamma: return log_gamma(d.first) - d.first * std::log(d.second);
    case DensityKind::kNormal: return 0.5 * std::log(2.0 * M_PI * d.second);
  }
  return 0.0;
}

void require_proper(const StandardDensity& d) {
  if (!(d.first > 0.0) || !(d.second > 0.0) || !std::isfinite(d.first) || !std::isfinite(d.second)) {
    if (!(d.kind == DensityKind::kNormal && std::isfinite(d.first) && d.second > 0.0)) {
      throw ApproximationUnavailableError("mixture component " + d.describe() + " is improper");
    }
  }
}

// Unconstrained coordinate u for m, and back.
double to_unconstrained(const Family& family, double m) {
  switch (family.kind()) {
    case FamilyKind::kBernoulli: return std::log(m) - std::log1p(-m);
    case FamilyKind::kPoisson:
    case FamilyKind::kGamma: return std::log(m);
    case FamilyKind::kNormal: return m;
  }
  return m;
}

double from_unconstrained(const Family& family, double u, double* log_jacobian) {
  switch (family.kind()) {
    case FamilyKind::kBernoulli: {
      const double m = u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
      *log_jacobian = -std::log1p(std::exp(-std::abs(u))) * 2.0 - std::abs(u);
      return m;
    }
    case FamilyKind::kPoisson:
    case FamilyKind::kGamma:
      *log_jacobian = u;
      return std::exp(u);
    case FamilyKind::kNormal:
      *log_jacobian = 0.0;
      return u;
  }
  *log_jacobian = 0.0;
  return u;
}

}  // namespace

double StandardDensity::log_pdf(double x) const {
  switch (kind) {
    case DensityKind::kBeta:
      if (!(x > 0.0 && x < 1.0)) return kNegInf;
      return (first - 1.0) * std::log(x) + (second - 1.0) * std::log1p(-x) - log_normalizer_of(*this);
    case DensityKind::kGamma:
      if (!(x > 0.0)) return kNegInf;
      return (first - 1.0) * std::log(x) - second * x - log_normalizer_of(*this);
    case DensityKind::kInverseGamma:
      if (!(x > 0.0)) return kNegInf;
      return -(first + 1.0) * std::log(x) - second / x - log_normalizer_of(*this);
    case DensityKind::kNormal: {
      const double z = x - first;
      return -0.5 * z * z / second - log_normalizer_of(*this);
    }
  }
  return kNegInf;
}

double StandardDensity::cdf(double x) const {
  namespace bm = boost::math;
  switch (kind) {
    case DensityKind::kBeta:
      if (x <= 0.0) return 0.0;
      if (x >= 1.0) return 1.0;
      return bm::cdf(bm::beta_distribution<double>(first, second), x);
    case DensityKind::kGamma:
      if (x <= 0.0) return 0.0;
      return bm::cdf(bm::gamma_distribution<double>(first, 1.0 / second), x);
    case DensityKind::kInverseGamma:
      if (x <= 0.0) return 0.0;
      return bm::cdf(bm::inverse_gamma_distribution<double>(first, second), x);
    case DensityKind::kNormal:
      return bm::cdf(bm::normal_distribution<double>(first, std::sqrt(second)), x);
  }
  return 0.0;
}

double StandardDensity::mean() const {
  switch (kind) {
    case DensityKind::kBeta: return first / (first + second);
    case DensityKind::kGamma: return first / second;
    case DensityKind::kInverseGamma:
      return first > 1.0 ? second / (first - 1.0) : std::numeric_limits<double>::infinity();
    case DensityKind::kNormal: return first;
  }
  return 0.0;
}

double StandardDensity::variance() const {
  switch (kind) {
    case DensityKind::kBeta: {
      const double s = first + second;
      return first * second / (s * s * (s + 1.0));
    }
    case DensityKind::kGamma: return first / (second * second);
    case DensityKind::kInverseGamma:
      if (!(first > 2.0)) return std::numeric_limits<double>::infinity();
      return second * second / ((first - 1.0) * (first - 1.0) * (first - 2.0));
    case DensityKind::kNormal: return second;
  }
  return 0.0;
}

std::string StandardDensity::describe() const {
  std::ostringstream os;
  os.precision(10);
  switch (kind) {
    case DensityKind::kBeta: os << "Beta(" << first << ", " << second << ")"; break;
    case DensityKind::kGamma: os << "Gamma(shape=" << first << ", rate=" << second << ")"; break;
    case DensityKind::kInverseGamma:
      os << "InverseGamma(shape=" << first << ", scale=" << second << ")";
      break;
    case DensityKind::kNormal: os << "Normal(mean=" << first << ", var=" << second << ")"; break;
  }
  return os.str();
}

double MixtureApprox::log_pdf(double x) const {
  std::vector<double> terms;
  terms.reserve(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] > 0.0) terms.push_back(std::log(weights[k]) + components[k].log_pdf(x));
  }
  return log_sum_exp(terms);
}

double MixtureApprox::mean() const {
  double total = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] > 0.0) total += weights[k] * components[k].mean();
  }
  return total;
}

void validate(const Family& family, const DyPrior& prior) {
  if (!(prior.lambda > 0.0) || !std::isfinite(prior.lambda)) {
    throw DomainError("DY prior precision must be positive and finite");
  }
  if (!family.mean_domain().contains(prior.m)) {
    throw DomainError("DY prior prediction must lie strictly inside the mean domain");
  }
}

void validate(const Family& family, const Hyperprior& hp) {
  if (!(hp.lambda0 > 0.0) || !std::isfinite(hp.lambda0)) {
    throw DomainError("hyperprior precision must be positive and finite");
  }
  if (!family.mean_domain().contains(hp.mu0)) {
    throw DomainError("hyperprior mean must lie strictly inside the mean domain");
  }
}

namespace {

void validate_sample(const Family& family, const IidSample& sample) {
  if (sample.n < 1) throw DataError("an i.i.d. sample needs n >= 1");
  if (!family.mean_domain().closure_contains(sample.ybar) || !std::isfinite(sample.ybar)) {
    throw DataError("sample mean lies outside the closed mean domain");
  }
}

}  // namespace

DyPrior dy_update(const Family& family, const IidSample& sample, const DyPrior& prior) {
  validate(family, prior);
  validate_sample(family, sample);
  const double precision = sample.n + prior.lambda;
  return {precision, (sample.n * sample.ybar + prior.lambda * prior.m) / precision};
}

StandardDensity conjugate_mean_density(const Family& family, double precision, double location) {
  switch (family.kind()) {
    case FamilyKind::kBernoulli:
      return {DensityKind::kBeta, precision * location, precision * (1.0 - location)};
    case FamilyKind::kPoisson: return {DensityKind::kGamma, precision * location, precision};
    case FamilyKind::kGamma: return {DensityKind::kInverseGamma, precision + 1.0, precision * location};
    case FamilyKind::kNormal: return {DensityKind::kNormal, location, 1.0 / precision};
  }
  return {DensityKind::kNormal, location, 1.0 / precision};
}

StandardDensity hyperprior_standard_form(const Family& family, const Hyperprior& hp) {
  validate(family, hp);
  return conjugate_mean_density(family, hp.lambda0, hp.mu0);
}

double m_log_posterior(const Family& family, double m, const IidSample& sample, double lambda,
                       const Hyperprior& hp) {
  if (!family.mean_domain().contains(m)) return kNegInf;
  const double n = sample.n;
  const double log_ratio = family.log_conjugate_normalizer(lambda + n, lambda * m + n * sample.ybar) -
                           family.log_conjugate_normalizer(lambda, lambda * m);
  const double theta = family.canonical(m);
  const double log_hyper =
      hp.lambda0 * (theta * hp.mu0 - family.cumulant(theta)) - std::log(family.variance(m));
  return log_ratio + log_hyper;
}

MixtureApprox limiting_m_posterior(const Family& family, const IidSample& sample, double lambda,
                                   const Hyperprior& hp) {
  validate(family, hp);
  validate_sample(family, sample);
  if (!(lambda > 0.0)) throw DomainError("precision lambda must be positive");
  const double n = sample.n;
  const double total = n * sample.ybar;
  MixtureApprox out;

  switch (family.kind()) {
    case FamilyKind::kPoisson: {
      if (!(total > 1.0)) {
        throw ApproximationUnavailableError("poisson limiting mixture requires n*ybar > 1");
      }
      // (λ/(n+λ))^{λm} = exp{−λ log(1 + n/λ) m}; the rate tends to n + λ₀.
      const double shape = total + hp.lambda0 * hp.mu0;
      const double rate = hp.lambda0 + (std::isinf(lambda) ? n : lambda * std::log1p(n / lambda));
      const double gamma = 1.0 / (1.0 + total * (total - 1.0) / (2.0 * lambda));
      out.kernel_coefficients = {gamma, 1.0 - gamma};
      out.components = {{DensityKind::kGamma, shape, rate}, {DensityKind::kGamma, shape - 1.0, rate}};
      break;
    }
    case FamilyKind::kBernoulli: {
      if (!(sample.ybar > 0.0 && sample.ybar < 1.0)) {
        throw ApproximationUnavailableError("bernoulli limiting mixture requires 0 < ybar < 1");
      }
      const double successes = total;
      const double failures = n - total;
      const double a = successes + hp.lambda0 * hp.mu0;
      const double b = failures + hp.lambda0 * (1.0 - hp.mu0);
      const double cs = successes * (successes - 1.0) / (2.0 * lambda);
      const double cf = failures * (failures - 1.0) / (2.0 * lambda);
      std::vector<double> coef = {1.0, cs, cf, cs * cf};
      const double sum = std::accumulate(coef.begin(), coef.end(), 0.0);
      for (double& c : coef) c /= sum;
      out.kernel_coefficients = coef;
      out.components = {{DensityKind::kBeta, a, b},
                        {DensityKind::kBeta, a - 1.0, b},
                        {DensityKind::kBeta, a, b - 1.0},
                        {DensityKind::kBeta, a - 1.0, b - 1.0}};
      break;
    }
    case FamilyKind::kGamma: {
      out.kernel_coefficients = {1.0};
      out.components = {
          {DensityKind::kInverseGamma, n + hp.lambda0 + 1.0, total + hp.lambda0 * hp.mu0}};
      break;
    }
    case FamilyKind::kNormal: {
      const double k = std::isinf(lambda) ? n : n * lambda / (n + lambda);
      const double precision = hp.lambda0 + k;
      out.kernel_coefficients = {1.0};
      out.components = {
          {DensityKind::kNormal, (hp.lambda0 * hp.mu0 + k * sample.ybar) / precision, 1.0 / precision}};
      break;
    }
  }

  // Each kernel coefficient scales an unnormalized kernel; the mixture weight
  // is that coefficient times the kernel's integral.
  std::vector<double> logw(out.components.size());
  for (std::size_t k = 0; k < logw.size(); ++k) {
    if (out.kernel_coefficients[k] <= 0.0) {
      if (out.kernel_coefficients[k] < 0.0) {
        throw ApproximationUnavailableError("negative mixture coefficient");
      }
      logw[k] = kNegInf;
      continue;
    }
    require_proper(out.components[k]);
    logw[k] = std::log(out.kernel_coefficients[k]) + log_normalizer_of(out.components[k]);
  }
  out.weights = normalize_log_weights(logw);
  return out;
}

PosteriorMoments m_posterior_moments(const Family& family, const IidSample& sample, double lambda,
                                     const Hyperprior& hp) {
  validate(family, hp);
  validate_sample(family, sample);

  auto log_density_u = [&](double u) {
    double log_jac = 0.0;
    const double m = from_unconstrained(family, u, &log_jac);
    if (!family.mean_domain().contains(m)) return kNegInf;
    return m_log_posterior(family, m, sample, lambda, hp) + log_jac;
  };

  // Start from the large-λ posterior mean, clipped to the interior.
  const double n = sample.n;
  double guess = (n * sample.ybar + hp.lambda0 * hp.mu0) / (n + hp.lambda0);
  if (family.kind() == FamilyKind::kBernoulli) guess = std::clamp(guess, 1e-6, 1.0 - 1e-6);
  if (family.kind() == FamilyKind::kPoisson || family.kind() == FamilyKind::kGamma) {
    guess = std::max(guess, 1e-6);
  }
  const double u0 = to_unconstrained(family, guess);
  const double half_width = family.kind() == FamilyKind::kNormal ? 50.0 + 10.0 * std::abs(u0) : 40.0;

  auto neg = [&](double u) {
    const double v = log_density_u(u);
    return std::isfinite(v) ? -v : std::numeric_limits<double>::max();
  };
  const auto [u_mode, neg_max] =
      boost::math::tools::brent_find_minima(neg, u0 - half_width, u0 + half_width, 52);
  const double peak = -neg_max;

  const double h = 1e-4 * (1.0 + std::abs(u_mode));
  const double curvature =
      -(log_density_u(u_mode + h) - 2.0 * peak + log_density_u(u_mode - h)) / (h * h);
  const double scale = curvature > 0.0 ? 1.0 / std::sqrt(curvature) : 1.0;
  const double lo = u_mode - 60.0 * scale;
  const double hi = u_mode + 60.0 * scale;

  using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  auto weight = [&](double u) {
    const double v = log_density_u(u);
    return std::isfinite(v) ? std::exp(v - peak) : 0.0;
  };
  double dummy_jac = 0.0;
  const double z = Quad::integrate(weight, lo, hi, 15, 1e-12);
  const double m1 = Quad::integrate(
      [&](double u) { return from_unconstrained(family, u, &dummy_jac) * weight(u); }, lo, hi, 15,
      1e-12);
  const double mean = m1 / z;
  const double m2 = Quad::integrate(
      [&](double u) {
        const double d = from_unconstrained(family, u, &dummy_jac) - mean;
        return d * d * weight(u);
      },
      lo, hi, 15, 1e-12);
  return {mean, m2 / z};
}

}  // namespace hpglm
