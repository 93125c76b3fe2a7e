#include <cmath>
#include <limits>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "doctest.h"
#include "hpglm/errors.hpp"
#include "hpglm/iid_hpp.hpp"

using namespace hpglm;

namespace {

// Integral of f over the mean domain of the family, by tanh-sinh quadrature on
// the mean scale (independent of the library's unconstrained-scale rule).
template <class F>
double integrate_mean_domain(const Family& family, F f, double lo_hint = 0.0, double hi_hint = 0.0) {
  boost::math::quadrature::tanh_sinh<double> q;
  switch (family.kind()) {
    case FamilyKind::kBernoulli: return q.integrate(f, 0.0, 1.0);
    case FamilyKind::kPoisson:
    case FamilyKind::kGamma: return q.integrate(f, 0.0, hi_hint > 0.0 ? hi_hint : 200.0);
    case FamilyKind::kNormal: return q.integrate(f, lo_hint, hi_hint);
  }
  return 0.0;
}

struct Normalized {
  double log_z;
  double mean;
};

Normalized normalize_exact(const Family& family, const IidSample& s, double lambda, const Hyperprior& hp,
                           double hi = 0.0) {
  // Peak for numerical scaling.
  double peak = -1e300;
  for (int k = 1; k < 2000; ++k) {
    const double m = family.kind() == FamilyKind::kBernoulli ? k / 2000.0 : k * (hi > 0 ? hi : 20.0) / 2000.0;
    peak = std::max(peak, m_log_posterior(family, m, s, lambda, hp));
  }
  auto dens = [&](double m) {
    const double v = m_log_posterior(family, m, s, lambda, hp);
    return std::isfinite(v) ? std::exp(v - peak) : 0.0;
  };
  const double z = integrate_mean_domain(family, dens, 0.0, hi);
  const double m1 = integrate_mean_domain(family, [&](double m) { return m * dens(m); }, 0.0, hi);
  return {std::log(z) + peak, m1 / z};
}

double total_variation(const Family& family, const IidSample& s, double lambda, const Hyperprior& hp,
                       const MixtureApprox& approx, double hi = 0.0) {
  const Normalized norm = normalize_exact(family, s, lambda, hp, hi);
  auto diff = [&](double m) {
    const double v = m_log_posterior(family, m, s, lambda, hp);
    const double p = std::isfinite(v) ? std::exp(v - norm.log_z) : 0.0;
    return std::abs(p - std::exp(approx.log_pdf(m)));
  };
  return 0.5 * integrate_mean_domain(family, diff, 0.0, hi);
}

}  // namespace

TEST_CASE("DY conjugate update") {
  const Family pois(FamilyKind::kPoisson);
  const DyPrior post = dy_update(pois, {10, 2.0}, {5.0, 1.0});
  CHECK(post.lambda == 15.0);
  CHECK(post.m == doctest::Approx(5.0 / 3.0));
  const DyPrior same = dy_update(Family(FamilyKind::kBernoulli), {1, 0.3}, {7.0, 0.3});
  CHECK(same.m == doctest::Approx(0.3));
  CHECK_THROWS_AS(dy_update(pois, {10, 2.0}, {-1.0, 1.0}), DomainError);
  CHECK_THROWS_AS(dy_update(pois, {10, 2.0}, {1.0, 0.0}), DomainError);
}

TEST_CASE("DY posterior mean of mu equals the updated prediction, by quadrature") {
  struct Case {
    FamilyKind kind;
    IidSample s;
    DyPrior prior;
  };
  const Case cases[] = {{FamilyKind::kPoisson, {20, 3.0}, {4.0, 1.0}},
                        {FamilyKind::kBernoulli, {12, 0.25}, {3.0, 0.6}},
                        {FamilyKind::kGamma, {8, 1.5}, {2.0, 0.7}},
                        {FamilyKind::kNormal, {6, -0.4}, {1.5, 2.0}}};
  for (const Case& c : cases) {
    const Family f(c.kind);
    const DyPrior post = dy_update(f, c.s, c.prior);
    const StandardDensity d = conjugate_mean_density(f, post.lambda, post.m);
    auto pdf = [&](double mu) { return std::exp(d.log_pdf(mu)); };
    const double lo = f.kind() == FamilyKind::kNormal ? post.m - 20.0 : 0.0;
    const double hi = f.kind() == FamilyKind::kBernoulli ? 1.0 : post.m + 40.0;
    boost::math::quadrature::tanh_sinh<double> q;
    const double mass = q.integrate(pdf, lo, hi);
    const double mean = q.integrate([&](double mu) { return mu * pdf(mu); }, lo, hi);
    CAPTURE(f.name());
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(mean == doctest::Approx(post.m).epsilon(1e-8));
  }
  const Family pois(FamilyKind::kPoisson);
  CHECK(dy_update(pois, {20, 3.0}, {4.0, 1.0}).m == doctest::Approx(64.0 / 24.0));
}

TEST_CASE("hyperprior standard forms") {
  const StandardDensity beta = hyperprior_standard_form(Family(FamilyKind::kBernoulli), {78.8, 0.3});
  CHECK(beta.kind == DensityKind::kBeta);
  CHECK(beta.first == doctest::Approx(23.64));
  CHECK(beta.second == doctest::Approx(55.16));
  CHECK(beta.cdf(0.4) - beta.cdf(0.2) == doctest::Approx(0.95).epsilon(0.005));

  const StandardDensity norm = hyperprior_standard_form(Family(FamilyKind::kNormal), {4.0, 0.0});
  CHECK(norm.kind == DensityKind::kNormal);
  CHECK(norm.variance() == doctest::Approx(0.25));

  const StandardDensity gam = hyperprior_standard_form(Family(FamilyKind::kPoisson), {2.0, 3.0});
  CHECK(gam.first == doctest::Approx(6.0));
  CHECK(gam.second == doctest::Approx(2.0));
  CHECK(gam.variance() == doctest::Approx(1.5));
  boost::math::quadrature::tanh_sinh<double> q;
  auto pdf = [&](double m) { return std::exp(gam.log_pdf(m)); };
  const double mean = q.integrate([&](double m) { return m * pdf(m); }, 0.0, 100.0);
  const double second = q.integrate([&](double m) { return m * m * pdf(m); }, 0.0, 100.0);
  CHECK(second - mean * mean == doctest::Approx(1.5).epsilon(1e-8));

  const StandardDensity ig = hyperprior_standard_form(Family(FamilyKind::kGamma), {5.0, 2.0});
  CHECK(ig.kind == DensityKind::kInverseGamma);
  CHECK(ig.mean() == doctest::Approx(2.0));
}

TEST_CASE("hyperprior standard form agrees with the conjugate kernel up to a constant") {
  const Family families[] = {Family(FamilyKind::kBernoulli), Family(FamilyKind::kPoisson),
                             Family(FamilyKind::kGamma), Family(FamilyKind::kNormal)};
  const double grid[] = {0.15, 0.3, 0.55, 0.8};
  for (const Family& f : families) {
    const Hyperprior hp{6.0, 0.4};
    const StandardDensity d = hyperprior_standard_form(f, hp);
    CHECK(d.mean() == doctest::Approx(hp.mu0));
    double offset = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const double m = grid[k];
      const double theta = f.canonical(m);
      const double kernel = hp.lambda0 * (theta * hp.mu0 - f.cumulant(theta)) - std::log(f.variance(m));
      if (k == 0) offset = d.log_pdf(m) - kernel;
      CHECK(d.log_pdf(m) - kernel == doctest::Approx(offset).epsilon(1e-12));
    }
  }
}

TEST_CASE("normal family m posterior is the exact convex combination") {
  const Family f(FamilyKind::kNormal);
  const IidSample s{8, 1.4};
  const Hyperprior hp{3.0, -0.5};
  const double lambda = 2.0;
  const double g = hp.lambda0 / (hp.lambda0 + s.n / (1.0 + s.n / lambda));
  const double mean = g * hp.mu0 + (1 - g) * s.ybar;
  const double var = 1.0 / (hp.lambda0 + s.n / (1.0 + s.n / lambda));
  const double ref = m_log_posterior(f, mean, s, lambda, hp);
  for (double m : {-2.0, -1.0, 0.3, 2.5}) {
    CHECK(m_log_posterior(f, m, s, lambda, hp) - ref ==
          doctest::Approx(-0.5 * (m - mean) * (m - mean) / var).epsilon(1e-10));
  }
  const PosteriorMoments mom = m_posterior_moments(f, s, lambda, hp);
  CHECK(mom.mean == doctest::Approx(mean).epsilon(1e-9));
  CHECK(mom.variance == doctest::Approx(var).epsilon(1e-8));
  const MixtureApprox lim = limiting_m_posterior(f, s, lambda, hp);
  CHECK(lim.mean() == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("posterior mean betweenness for the normal family") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 20.0);
  std::uniform_real_distribution<double> loc(-5.0, 5.0);
  const Family f(FamilyKind::kNormal);
  for (int k = 0; k < 200; ++k) {
    const IidSample s{1 + static_cast<int>(u(rng)), loc(rng)};
    const Hyperprior hp{u(rng), loc(rng)};
    const double mean = limiting_m_posterior(f, s, u(rng), hp).mean();
    CHECK(mean >= std::min(s.ybar, hp.mu0) - 1e-12);
    CHECK(mean <= std::max(s.ybar, hp.mu0) + 1e-12);
  }
}

TEST_CASE("m posterior moments agree with quadrature on the mean scale") {
  const Family f(FamilyKind::kBernoulli);
  const IidSample s{30, 0.4};
  const Hyperprior hp{4.0, 0.3};
  const Normalized exact = normalize_exact(f, s, 0.75, hp);
  CHECK(m_posterior_moments(f, s, 0.75, hp).mean == doctest::Approx(exact.mean).epsilon(1e-8));
  const Family g(FamilyKind::kGamma);
  const Normalized exact_g = normalize_exact(g, {15, 2.0}, 3.0, {4.0, 1.5}, 60.0);
  CHECK(m_posterior_moments(g, {15, 2.0}, 3.0, {4.0, 1.5}).mean == doctest::Approx(exact_g.mean).epsilon(1e-7));
}

TEST_CASE("posterior mean of m from the joint (theta, m) integral") {
  // Poisson, n=5, ybar=2, lambda=3, lambda0=2, mu0=1: integrate θ out of the
  // joint density numerically and compare with the closed-form ratio route.
  const Family f(FamilyKind::kPoisson);
  const IidSample s{5, 2.0};
  const double lambda = 3.0;
  const Hyperprior hp{2.0, 1.0};
  auto joint_marginal = [&](double m) {
    // ∫ exp{nȳθ − n e^θ + λ(mθ − e^θ)} dθ / Z(λ, λm) × hyperprior(m).
    auto inner = [&](double t) {
      return std::exp(s.n * s.ybar * t - s.n * std::exp(t) + lambda * (m * t - std::exp(t)));
    };
    const double val = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(inner, -30.0, 6.0, 20, 1e-13);
    const double theta = std::log(m);
    return val * std::exp(-f.log_conjugate_normalizer(lambda, lambda * m) +
                          hp.lambda0 * (theta * hp.mu0 - m) - std::log(m));
  };
  boost::math::quadrature::tanh_sinh<double> q;
  const double z = q.integrate(joint_marginal, 0.0, 60.0);
  const double m1 = q.integrate([&](double m) { return m * joint_marginal(m); }, 0.0, 60.0);
  CHECK(m_posterior_moments(f, s, lambda, hp).mean == doctest::Approx(m1 / z).epsilon(1e-6));
}

TEST_CASE("limiting mixture: plug-in weights and large-lambda accuracy") {
  const Family pois(FamilyKind::kPoisson);
  const MixtureApprox half = limiting_m_posterior(pois, {2, 1.0}, 1.0, {1.0, 1.0});
  REQUIRE(half.kernel_coefficients.size() == 2);
  CHECK(half.kernel_coefficients[0] == doctest::Approx(0.5));
  double wsum = 0.0;
  for (double w : half.weights) {
    CHECK(w >= 0.0);
    CHECK(w <= 1.0);
    wsum += w;
  }
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(limiting_m_posterior(pois, {1, 1.0}, 1.0, {1.0, 1.0}), ApproximationUnavailableError);
  CHECK_THROWS_AS(limiting_m_posterior(Family(FamilyKind::kBernoulli), {5, 1.0}, 1.0, {1.0, 0.5}),
                  ApproximationUnavailableError);

  const MixtureApprox big = limiting_m_posterior(pois, {20, 3.0}, 1e6, {5.0, 2.0});
  CHECK(big.weights[0] > 0.999);
  CHECK(big.components[0].first == doctest::Approx(70.0));
  CHECK(big.components[0].second == doctest::Approx(25.0).epsilon(1e-5));
  CHECK(total_variation(pois, {20, 3.0}, 1e6, {5.0, 2.0}, big, 20.0) < 0.01);

  const Family bern(FamilyKind::kBernoulli);
  const MixtureApprox bl = limiting_m_posterior(bern, {50, 0.4}, 1e6, {10.0, 0.3});
  CHECK(bl.components[0].first == doctest::Approx(23.0));
  CHECK(bl.components[0].second == doctest::Approx(37.0));
  CHECK(total_variation(bern, {50, 0.4}, 1e6, {10.0, 0.3}, bl) < 0.01);
}

TEST_CASE("limiting mixture is closer than the leading component at moderate lambda") {
  const Family pois(FamilyKind::kPoisson);
  const IidSample s{10, 2.0};
  const Hyperprior hp{3.0, 1.5};
  const double lambda = 200.0;
  const MixtureApprox mix = limiting_m_posterior(pois, s, lambda, hp);
  MixtureApprox lead;
  lead.weights = {1.0};
  lead.components = {mix.components[0]};
  lead.kernel_coefficients = {1.0};
  CHECK(total_variation(pois, s, lambda, hp, mix, 15.0) < total_variation(pois, s, lambda, hp, lead, 15.0));

  const Family bern(FamilyKind::kBernoulli);
  const IidSample sb{20, 0.35};
  const Hyperprior hb{5.0, 0.4};
  const MixtureApprox bmix = limiting_m_posterior(bern, sb, lambda, hb);
  MixtureApprox blead;
  blead.weights = {1.0};
  blead.components = {bmix.components[0]};
  blead.kernel_coefficients = {1.0};
  CHECK(total_variation(bern, sb, lambda, hb, bmix) < total_variation(bern, sb, lambda, hb, blead));
}

TEST_CASE("large-lambda posterior mean approaches the conjugate limit") {
  struct Case {
    FamilyKind kind;
    IidSample s;
    Hyperprior hp;
  };
  const Case cases[] = {{FamilyKind::kPoisson, {20, 3.0}, {5.0, 2.0}},
                        {FamilyKind::kBernoulli, {50, 0.4}, {10.0, 0.3}},
                        {FamilyKind::kGamma, {15, 2.0}, {4.0, 1.5}},
                        {FamilyKind::kNormal, {10, 1.0}, {2.0, -1.0}}};
  for (const Case& c : cases) {
    const Family f(c.kind);
    const double target = (c.s.n * c.s.ybar + c.hp.lambda0 * c.hp.mu0) / (c.s.n + c.hp.lambda0);
    CAPTURE(f.name());
    // The gamma-family limit is an inverse gamma whose mean differs from the
    // conjugate point by O(1/(n+λ₀)).
    const double tol = f.kind() == FamilyKind::kGamma ? 0.1 : 1e-3 / (c.s.n + c.hp.lambda0) + 1e-4;
    CHECK(std::abs(m_posterior_moments(f, c.s, 1e6, c.hp).mean - target) < tol);
  }
}

TEST_CASE("posterior piles up at mu0 as lambda0 grows") {
  const Family pois(FamilyKind::kPoisson);
  const IidSample s{10, 3.0};
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda0 : {10.0, 100.0, 1000.0, 10000.0}) {
    const double sd = std::sqrt(m_posterior_moments(pois, s, 1.0, {lambda0, 2.0}).variance);
    CHECK(sd < prev);
    prev = sd;
  }
  CHECK(std::abs(m_posterior_moments(pois, s, 1.0, {1e4, 2.0}).mean - 2.0) < 0.01);
}
