#include <cmath>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>

#include "doctest.h"
#include "hpglm/errors.hpp"
#include "hpglm/expfam.hpp"
#include "test_support.hpp"

using namespace hpglm;

namespace {

const Family kFamilies[] = {Family(FamilyKind::kBernoulli), Family(FamilyKind::kPoisson),
                            Family(FamilyKind::kGamma), Family(FamilyKind::kNormal)};

// log ∫ exp{cθ − a b(θ)} dθ by quadrature over the canonical domain.
double quadrature_log_normalizer(const Family& f, double a, double c) {
  if (f.kind() == FamilyKind::kGamma) {
    boost::math::quadrature::exp_sinh<double> q;
    return std::log(q.integrate([&](double t) { return std::exp(-c * t + a * std::log(t)); }));
  }
  boost::math::quadrature::sinh_sinh<double> q;
  return std::log(q.integrate([&](double th) {
    const double v = c * th - a * f.cumulant(th);
    return std::isfinite(v) ? std::exp(v) : 0.0;
  }));
}

double interior_mean(const Family& f, double u) {
  switch (f.kind()) {
    case FamilyKind::kBernoulli: return 0.05 + 0.9 * u;
    case FamilyKind::kPoisson:
    case FamilyKind::kGamma: return 0.1 + 5.0 * u;
    case FamilyKind::kNormal: return -3.0 + 6.0 * u;
  }
  return u;
}

}  // namespace

TEST_CASE("family names and aliases") {
  CHECK(Family::FromName("logistic") == Family(FamilyKind::kBernoulli));
  CHECK(Family::FromName("gaussian").name() == "normal");
  CHECK_THROWS_AS(Family::FromName("weibull"), ConfigError);
}

TEST_CASE("cumulant values at known points") {
  const Family bern(FamilyKind::kBernoulli);
  CHECK(bern.cumulant(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(bern.mean(0.0) == 0.5);
  CHECK(bern.variance(0.5) == 0.25);
  const Family pois(FamilyKind::kPoisson);
  CHECK(pois.cumulant(0.0) == 1.0);
  CHECK(pois.variance(3.0) == 3.0);
  const Family gam(FamilyKind::kGamma);
  CHECK(gam.mean(-0.5) == doctest::Approx(2.0));
  CHECK(gam.variance(2.0) == doctest::Approx(4.0));
  CHECK(Family(FamilyKind::kNormal).cumulant(2.0) == 2.0);
  // Extreme canonical values stay finite.
  CHECK(std::isfinite(bern.cumulant(800.0)));
  CHECK(bern.cumulant(800.0) == doctest::Approx(800.0));
  CHECK(bern.mean(-800.0) >= 0.0);
}

TEST_CASE("domain violations raise DomainError") {
  const Family gam(FamilyKind::kGamma);
  CHECK_THROWS_AS(gam.cumulant(0.0), DomainError);
  CHECK_THROWS_AS(gam.cumulant(1.0), DomainError);
  CHECK_THROWS_AS(Family(FamilyKind::kBernoulli).canonical(1.0), DomainError);
  CHECK_THROWS_AS(Family(FamilyKind::kPoisson).canonical(0.0), DomainError);
  CHECK_THROWS_AS(Family(FamilyKind::kNormal).cumulant(std::nan("")), DomainError);
}

TEST_CASE("derivatives of b match finite differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const Family& f : kFamilies) {
    for (int k = 0; k < 25; ++k) {
      const double theta = f.canonical(interior_mean(f, u(rng)));
      const double h = 1e-5 * (1.0 + std::abs(theta));
      const double d1 = (f.cumulant(theta + h) - f.cumulant(theta - h)) / (2 * h);
      const double d2 = (f.mean(theta + h) - f.mean(theta - h)) / (2 * h);
      const double d3 = (f.cumulant_second(theta + h) - f.cumulant_second(theta - h)) / (2 * h);
      CHECK(f.mean(theta) == doctest::Approx(d1).epsilon(1e-7));
      CHECK(f.cumulant_second(theta) == doctest::Approx(d2).epsilon(1e-7));
      CHECK(f.cumulant_third(theta) == doctest::Approx(d3).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("mean-canonical bijection round trips and v' matches differences") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const Family& f : kFamilies) {
    for (int k = 0; k < 200; ++k) {
      const double mu = interior_mean(f, u(rng));
      const double theta = mean_canonical_bijection(f, mu, Direction::kToCanonical);
      CHECK(mean_canonical_bijection(f, theta, Direction::kToMean) == doctest::Approx(mu).epsilon(1e-13));
      CHECK(f.variance(mu) == doctest::Approx(f.cumulant_second(theta)).epsilon(1e-12));
      CHECK(f.link_derivative(mu) * f.variance(mu) == doctest::Approx(1.0));
      const double h = 1e-6 * (1.0 + mu);
      CHECK(f.variance_derivative(mu) ==
            doctest::Approx((f.variance(mu + h) - f.variance(mu - h)) / (2 * h)).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("conjugate normalizer matches quadrature over the canonical parameter") {
  struct Case {
    FamilyKind kind;
    double a;
    double c;
  };
  const Case cases[] = {{FamilyKind::kBernoulli, 1.0, 0.5},  {FamilyKind::kBernoulli, 40.0, 12.0},
                        {FamilyKind::kPoisson, 1.0, 2.0},    {FamilyKind::kPoisson, 20.0, 60.0},
                        {FamilyKind::kGamma, 3.0, 4.0},      {FamilyKind::kGamma, 0.5, 1.5},
                        {FamilyKind::kNormal, 2.0, -1.0},    {FamilyKind::kNormal, 50.0, 10.0}};
  for (const Case& cs : cases) {
    const Family f(cs.kind);
    CAPTURE(f.name());
    CHECK(f.log_conjugate_normalizer(cs.a, cs.c) ==
          doctest::Approx(quadrature_log_normalizer(f, cs.a, cs.c)).epsilon(1e-9));
    const double h = 1e-6 * cs.c;
    const double fd = (f.log_conjugate_normalizer(cs.a, cs.c + h) - f.log_conjugate_normalizer(cs.a, cs.c - h)) / (2 * h);
    CHECK(f.log_conjugate_normalizer_dc(cs.a, cs.c) == doctest::Approx(fd).epsilon(1e-6));
  }
  CHECK_THROWS_AS(Family(FamilyKind::kBernoulli).log_conjugate_normalizer(1.0, 1.0), DomainError);
  CHECK_THROWS_AS(Family(FamilyKind::kPoisson).log_conjugate_normalizer(0.0, 1.0), DomainError);
}

TEST_CASE("log likelihood is a normalized density") {
  const Family pois(FamilyKind::kPoisson);
  double total = 0.0;
  for (int y = 0; y < 200; ++y) total += std::exp(log_likelihood(pois, Vector::Constant(1, y), Vector::Constant(1, 1.3)));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  const Family bern(FamilyKind::kBernoulli);
  const double p1 = std::exp(log_likelihood(bern, Vector::Constant(1, 1.0), Vector::Constant(1, 0.4)));
  const double p0 = std::exp(log_likelihood(bern, Vector::Constant(1, 0.0), Vector::Constant(1, 0.4)));
  CHECK(p0 + p1 == doctest::Approx(1.0));
  const Family norm(FamilyKind::kNormal);
  CHECK(log_likelihood(norm, Vector::Constant(1, 1.0), Vector::Constant(1, 1.0)) ==
        doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)));
}

TEST_CASE("log likelihood gradient matches finite differences") {
  std::mt19937_64 rng(5);
  const Matrix X = testing_support::random_design(30, 3, rng, 0.5);
  const Family pois(FamilyKind::kPoisson);
  Vector y(30);
  for (int i = 0; i < 30; ++i) y[i] = i % 4;
  const Vector beta = Vector::Constant(3, 0.2);
  auto f = [&](const Vector& b) { return log_likelihood(pois, y, X * b); };
  CHECK(testing_support::relative_error(log_likelihood_gradient(pois, y, X, beta),
                                        testing_support::numeric_gradient(f, beta)) < 1e-7);
}

TEST_CASE("support violations name the row") {
  const Family bern(FamilyKind::kBernoulli);
  Vector y(3);
  y << 0.0, 1.0, 0.5;
  try {
    check_support(bern, y);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
  CHECK_THROWS_AS(check_support(Family(FamilyKind::kPoisson), Vector::Constant(1, 1.5)), DataError);
  CHECK_NOTHROW(check_support(Family(FamilyKind::kGamma), Vector::Constant(1, 2.5)));
}
