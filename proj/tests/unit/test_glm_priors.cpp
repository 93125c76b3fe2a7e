#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "hpglm/errors.hpp"
#include "hpglm/glm_priors.hpp"
#include "hpglm/iid_hpp.hpp"
#include "hpglm/linear_closed.hpp"
#include "special.hpp"
#include "test_support.hpp"

using namespace hpglm;
using testing_support::numeric_gradient;
using testing_support::random_design;
using testing_support::random_vector;
using testing_support::relative_error;

namespace {

double log_mvn(const Vector& x, const GaussianMoments& g) {
  Eigen::LLT<Matrix> llt(g.covariance);
  const Vector z = llt.matrixL().solve(x - g.mean);
  const double log_det = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
  return -0.5 * z.squaredNorm() - 0.5 * log_det - 0.5 * x.size() * std::log(2 * std::numbers::pi);
}

// Two-factor design with cells (1,0) and (1,1), n1 and n2 rows.
Matrix two_cell_design(int n1, int n2) {
  Matrix X(n1 + n2, 2);
  for (int i = 0; i < n1 + n2; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = i < n1 ? 0.0 : 1.0;
  }
  return X;
}

double intercept_laplace_error(const Family& f, int n, double m, double lambda) {
  const Matrix X = Matrix::Ones(n, 1);
  const double laplace = laplace_log_normconst(lambda, Vector::Constant(n, m), X, f).value;
  const double exact = f.log_conjugate_normalizer(lambda * n, lambda * n * m);
  return std::abs(laplace - exact);
}

}  // namespace

TEST_CASE("CI kernel: plug-in and normal quadratic") {
  const Family bern(FamilyKind::kBernoulli);
  const Matrix X = Matrix::Ones(3, 1);
  CHECK(ci_log_kernel(Vector::Zero(1), {1.0, Vector::Constant(3, 0.5)}, X, bern) ==
        doctest::Approx(-3.0 * std::log(2.0)));

  std::mt19937_64 rng(7);
  const Matrix Xn = random_design(12, 3, rng);
  const Vector m = random_vector(12, rng, -1, 1);
  const double lambda = 0.8;
  const Vector beta_m = (Xn.transpose() * Xn).ldlt().solve(Xn.transpose() * m);
  const Family norm(FamilyKind::kNormal);
  auto quad = [&](const Vector& b) {
    return -0.5 * lambda * (b.dot(Xn.transpose() * Xn * b) - 2.0 * b.dot(Xn.transpose() * Xn * beta_m));
  };
  const Vector b0 = random_vector(3, rng, -1, 1);
  const double offset = ci_log_kernel(b0, {lambda, m}, Xn, norm) - quad(b0);
  for (int k = 0; k < 10; ++k) {
    const Vector b = random_vector(3, rng, -2, 2);
    CHECK(ci_log_kernel(b, {lambda, m}, Xn, norm) - quad(b) == doctest::Approx(offset).epsilon(1e-10));
  }
  CHECK_THROWS_AS(ci_log_kernel(Vector::Zero(2), {1.0, m}, Xn, norm), DimensionError);
}

TEST_CASE("CI kernel gradient vanishes at its own mean prediction") {
  std::mt19937_64 rng(8);
  const Matrix X = random_design(15, 3, rng, 0.5);
  const Vector beta = random_vector(3, rng, -0.5, 0.5);
  for (FamilyKind k : {FamilyKind::kBernoulli, FamilyKind::kPoisson, FamilyKind::kNormal}) {
    const Family f(k);
    Vector m(15);
    const Vector eta = X * beta;
    for (int i = 0; i < 15; ++i) m[i] = f.mean(eta[i]);
    const CiPrior prior{2.0, m};
    auto fn = [&](const Vector& b) { return ci_log_kernel(b, prior, X, f); };
    CHECK(numeric_gradient(fn, beta).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(ci_log_kernel_grad(beta, prior, X, f).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("conjugacy identity: CI kernel plus likelihood is a CI kernel") {
  std::mt19937_64 rng(9);
  const Matrix X = random_design(20, 3, rng, 0.5);
  const Family pois(FamilyKind::kPoisson);
  Vector y(20);
  for (int i = 0; i < 20; ++i) y[i] = i % 5;
  const Vector m = random_vector(20, rng, 0.5, 3.0);
  const double lambda = 1.3;
  const CiPrior prior{lambda, m};
  const CiPrior post{1.0 + lambda, (y + lambda * m) / (1.0 + lambda)};
  double offset = 0.0;
  for (int k = 0; k < 12; ++k) {
    const Vector b = random_vector(3, rng, -0.5, 0.5);
    const double lhs = ci_log_kernel(b, prior, X, pois) + log_likelihood(pois, y, X * b);
    const double rhs = ci_log_kernel(b, post, X, pois);
    if (k == 0) offset = lhs - rhs;
    CHECK(lhs - rhs == doctest::Approx(offset).epsilon(1e-10));
  }
}

TEST_CASE("Laplace constant: exact for the normal family") {
  std::mt19937_64 rng(10);
  const Matrix X = random_design(18, 3, rng);
  const Vector m = random_vector(18, rng, -2, 2);
  const double lambda = 0.6;
  const Matrix G = X.transpose() * X;
  const double exact = 1.5 * std::log(2 * std::numbers::pi) - 0.5 * std::log((lambda * G).determinant()) +
                       0.5 * lambda * m.dot(X * G.ldlt().solve(X.transpose() * m));
  CHECK(laplace_log_normconst(lambda, m, X, Family(FamilyKind::kNormal)).value == doctest::Approx(exact).epsilon(1e-8));
}

TEST_CASE("Laplace constant against exact intercept-only normalizers") {
  const Family bern(FamilyKind::kBernoulli);
  const Family pois(FamilyKind::kPoisson);
  CHECK(intercept_laplace_error(bern, 39, 0.3, 1.0) < 0.05);
  CHECK(intercept_laplace_error(pois, 20, 2.0, 1.0) < 0.05);
  CHECK(intercept_laplace_error(bern, 10, 0.3, 1.0) > intercept_laplace_error(bern, 100, 0.3, 1.0));
  CHECK(intercept_laplace_error(pois, 10, 2.0, 1.0) > intercept_laplace_error(pois, 100, 2.0, 1.0));
  // The exact intercept-only constant is a beta function.
  CHECK(bern.log_conjugate_normalizer(39, 39 * 0.3) == doctest::Approx(detail::log_beta(11.7, 27.3)));
}

TEST_CASE("exact categorical constant") {
  const Family bern(FamilyKind::kBernoulli);
  CHECK(exact_log_normconst_categorical(1.0, Vector::Constant(2, 0.5), {1, 1}, bern) ==
        doctest::Approx(2.0 * std::log(std::numbers::pi)));
  // One cell is the i.i.d. case.
  const Family pois(FamilyKind::kPoisson);
  CHECK(exact_log_normconst_categorical(2.0, Vector::Constant(1, 1.5), {7}, pois) ==
        doctest::Approx(pois.log_conjugate_normalizer(14.0, 21.0)));
  // Normal cells: the constant equals the Gaussian integral.
  const Matrix X = two_cell_design(4, 6);
  std::mt19937_64 rng(11);
  const Vector m = random_vector(10, rng, -1, 1);
  const CategoricalCells cells = categorical_cells(X);
  CHECK(cells.sizes == std::vector<int>{4, 6});
  const Family norm(FamilyKind::kNormal);
  CHECK(exact_log_normconst(0.7, m, cells, norm) ==
        doctest::Approx(laplace_log_normconst(0.7, m, X, norm).value).epsilon(1e-10));
  // Non-categorical designs are rejected.
  CHECK_THROWS_AS(categorical_cells(random_design(10, 2, rng)), UnsupportedDesignError);
}

TEST_CASE("hyperprior density") {
  const Family pois(FamilyKind::kPoisson);
  HppHyper hyper{Vector(2), Vector(2)};
  hyper.lambda0 << 1.0, 2.0;
  hyper.mu0 << 1.0, 1.0;
  CHECK(hpp_hyper_log_pdf(Vector::Constant(2, 1.0), hyper, pois) == doctest::Approx(-3.0));
  CHECK(std::isinf(hpp_hyper_log_pdf(Vector::Constant(2, 0.0), hyper, pois)));

  // n = 1 reduces to the i.i.d. hyperprior, here a Beta density.
  const Family bern(FamilyKind::kBernoulli);
  const HppHyper one = HppHyper::Shared(6.0, Vector::Constant(1, 0.35));
  const StandardDensity beta = hyperprior_standard_form(bern, {6.0, 0.35});
  double offset = 0.0;
  int k = 0;
  for (double m : {0.1, 0.3, 0.5, 0.9}) {
    const double diff = beta.log_pdf(m) - hpp_hyper_log_pdf(Vector::Constant(1, m), one, bern);
    if (k++ == 0) offset = diff;
    CHECK(diff == doctest::Approx(offset).epsilon(1e-12));
  }

  // The ν-scale density peaks at ν = θ(μ₀): its gradient in ν vanishes there.
  for (FamilyKind kind : {FamilyKind::kBernoulli, FamilyKind::kPoisson, FamilyKind::kGamma, FamilyKind::kNormal}) {
    const Family f(kind);
    const double mu0 = 0.4;
    auto nu_density = [&](const Vector& nu) { return 5.0 * (nu[0] * mu0 - f.cumulant(nu[0])); };
    CHECK(std::abs(numeric_gradient(nu_density, Vector::Constant(1, f.canonical(mu0)))[0]) < 1e-8);
  }
}

TEST_CASE("prior means from coefficients") {
  const Matrix X = Matrix::Ones(4, 1);
  CHECK(mu0_from_coefficients(X, Vector::Zero(1), Family(FamilyKind::kBernoulli)).isApprox(Vector::Constant(4, 0.5)));
  CHECK(mu0_from_coefficients(X, Vector::Zero(1), Family(FamilyKind::kPoisson)).isApprox(Vector::Constant(4, 1.0)));
  CHECK_THROWS_AS(mu0_from_coefficients(X, Vector::Constant(1, 60.0), Family(FamilyKind::kBernoulli)), DomainError);
  CHECK_THROWS_AS(mu0_from_coefficients(X, Vector::Constant(1, 1.0), Family(FamilyKind::kGamma)), DomainError);
}

TEST_CASE("joint posterior: normal family equals the Gaussian prior times likelihood") {
  std::mt19937_64 rng(12);
  const Matrix X = random_design(10, 2, rng);
  const Vector y = random_vector(10, rng, -2, 2);
  const Vector mu0 = random_vector(10, rng, -1, 1);
  const double lambda = 0.9, lambda0 = 3.0;
  const Family norm(FamilyKind::kNormal);
  const GaussianMoments prior = lm_joint_prior(X, lambda, lambda0, mu0);
  const GlmData data{y, X};
  const HppHyper hyper = HppHyper::Shared(lambda0, mu0);
  double offset = 0.0;
  for (int k = 0; k < 10; ++k) {
    const Vector b = random_vector(2, rng, -1, 1);
    const Vector m = random_vector(10, rng, -1, 1);
    Vector bm(12);
    bm << b, m;
    const double oracle = log_likelihood(norm, y, X * b) + log_mvn(bm, prior);
    const double value = joint_log_posterior(b, m, data, lambda, hyper, norm, NormConst::kLaplace);
    if (k == 0) offset = value - oracle;
    CHECK(value - oracle == doctest::Approx(offset).epsilon(1e-6));
  }
}

TEST_CASE("joint posterior in beta at m = mu0 with a degenerate hyperprior is the CI posterior") {
  std::mt19937_64 rng(13);
  const Matrix X = random_design(20, 2, rng, 0.5);
  Vector y(20);
  for (int i = 0; i < 20; ++i) y[i] = i % 2;
  const Vector mu0 = random_vector(20, rng, 0.3, 0.7);
  const Family bern(FamilyKind::kBernoulli);
  const HppHyper hyper = HppHyper::Shared(1e8, mu0);
  const double lambda = 1.0;
  const Vector b0 = Vector::Zero(2);
  const double ref = joint_log_posterior(b0, mu0, {y, X}, lambda, hyper, bern, NormConst::kLaplace);
  const double ref_ci = ci_log_kernel(b0, {lambda, mu0}, X, bern) + log_likelihood(bern, y, X * b0);
  for (int k = 0; k < 10; ++k) {
    const Vector b = random_vector(2, rng, -1, 1);
    const double joint = joint_log_posterior(b, mu0, {y, X}, lambda, hyper, bern, NormConst::kLaplace) - ref;
    const double ci = ci_log_kernel(b, {lambda, mu0}, X, bern) + log_likelihood(bern, y, X * b) - ref_ci;
    CHECK(std::abs(joint - ci) < 1e-3);
  }
}

TEST_CASE("joint posterior: Laplace and exact constants agree on a two-cell logistic design") {
  const Matrix X = two_cell_design(20, 25);
  Vector y(45);
  for (int i = 0; i < 45; ++i) y[i] = (i % 3 == 0) ? 1.0 : 0.0;
  const Family bern(FamilyKind::kBernoulli);
  const CategoricalCells cells = categorical_cells(X);
  const HppHyper hyper = HppHyper::Shared(4.0, Vector::Constant(45, 0.4));
  std::mt19937_64 rng(14);
  for (int k = 0; k < 20; ++k) {
    const Vector b = random_vector(2, rng, -1.5, 1.0);
    const Vector m = random_vector(45, rng, 0.2, 0.6);
    const double lap = joint_log_posterior(b, m, {y, X}, 1.0, hyper, bern, NormConst::kLaplace);
    const double ex = joint_log_posterior(b, m, {y, X}, 1.0, hyper, bern, NormConst::kExactCategorical, &cells);
    CHECK(std::abs(lap - ex) < 0.05);
  }
}

TEST_CASE("gradients of the joint posterior match finite differences") {
  std::mt19937_64 rng(15);
  const Family families[] = {Family(FamilyKind::kBernoulli), Family(FamilyKind::kPoisson),
                             Family(FamilyKind::kGamma), Family(FamilyKind::kNormal)};
  for (const Family& f : families) {
    CAPTURE(f.name());
    const Matrix X = two_cell_design(6, 8);
    Vector y(14), mu0(14);
    for (int i = 0; i < 14; ++i) {
      y[i] = f.kind() == FamilyKind::kBernoulli ? (i % 2) : f.kind() == FamilyKind::kNormal ? 0.3 * i - 2 : 0.5 + i % 4;
      mu0[i] = f.kind() == FamilyKind::kNormal ? 0.2 : 0.45;
    }
    const CategoricalCells cells = categorical_cells(X);
    const HppHyper hyper = HppHyper::Shared(3.0, mu0);
    const GlmData data{y, X};
    for (int k = 0; k < 5; ++k) {
      Vector b = random_vector(2, rng, -0.5, 0.5);
      if (f.kind() == FamilyKind::kGamma) b[0] -= 1.5;  // keep Xβ < 0
      const Vector m = random_vector(14, rng, 0.3, 0.6);
      for (NormConst nc : {NormConst::kExactCategorical, NormConst::kLaplace}) {
        CAPTURE(static_cast<int>(nc));
        JointOptions opt;
        opt.normconst = nc;
        opt.cells = &cells;
        const JointEvaluation ev = joint_log_posterior_eval(b, m, data, 0.8, hyper, f, opt);
        auto fb = [&](const Vector& bb) { return joint_log_posterior(bb, m, data, 0.8, hyper, f, nc, &cells); };
        auto fm = [&](const Vector& mm) { return joint_log_posterior(b, mm, data, 0.8, hyper, f, nc, &cells); };
        CHECK(relative_error(ev.grad_beta, numeric_gradient(fb, b)) < 1e-5);
        CHECK(relative_error(ev.grad_m, numeric_gradient(fm, m)) < 1e-5);
      }
    }
  }
}

TEST_CASE("analytic Laplace gradient agrees with finite differences on a continuous design") {
  std::mt19937_64 rng(16);
  const Matrix X = random_design(25, 3, rng, 0.6);
  const Family bern(FamilyKind::kBernoulli);
  const Vector m = random_vector(25, rng, 0.2, 0.8);
  const LaplaceNormConst at = laplace_log_normconst(0.75, m, X, bern);
  const Vector analytic = laplace_log_normconst_grad(0.75, m, X, bern, at, LaplaceGradient::kAnalytic);
  const Vector fd = laplace_log_normconst_grad(0.75, m, X, bern, at, LaplaceGradient::kFiniteDifference);
  CHECK(relative_error(analytic, fd) < 1e-5);
}

TEST_CASE("power prior kernel") {
  const Family pois(FamilyKind::kPoisson);
  Vector y0(6);
  y0 << 1, 3, 0, 2, 4, 2;
  const PowerPriorConfig cfg{0.4, y0, Matrix::Ones(6, 1)};
  // Intercept-only: the DY kernel with λ = a₀ n₀ (per-observation λ = a₀) and m = ȳ₀.
  const CiPrior dy{0.4, Vector::Constant(6, y0.mean())};
  std::mt19937_64 rng(17);
  double offset = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Vector theta = random_vector(1, rng, -3, 3);
    const double diff = power_prior_log_kernel(theta, cfg, pois) - ci_log_kernel(theta, dy, cfg.X0, pois);
    if (k == 0) offset = diff;
    CHECK(diff == doctest::Approx(offset).epsilon(1e-10).scale(1.0));
  }
  PowerPriorConfig tiny = cfg;
  tiny.a0 = 1e-12;
  CHECK(std::abs(power_prior_log_kernel(Vector::Constant(1, 2.0), tiny, pois)) < 1e-9);
  PowerPriorConfig full = cfg;
  full.a0 = 1.0;
  const double c = log_likelihood(pois, y0, Vector::Constant(6, 0.0)) - power_prior_log_kernel(Vector::Zero(1), full, pois);
  CHECK(log_likelihood(pois, y0, Vector::Constant(6, 0.7)) - power_prior_log_kernel(Vector::Constant(1, 0.7), full, pois) ==
        doctest::Approx(c));
  auto fn = [&](const Vector& b) { return power_prior_log_kernel(b, cfg, pois); };
  CHECK(relative_error(power_prior_log_kernel_grad(Vector::Constant(1, 0.3), cfg, pois),
                       numeric_gradient(fn, Vector::Constant(1, 0.3))) < 1e-7);
  CHECK_THROWS_AS(validate(PowerPriorConfig{1.5, y0, cfg.X0}, 1), DomainError);
}

TEST_CASE("Gaussian power prior kernel") {
  const GppConfig cfg{Vector::Zero(2), Vector::Ones(2), 1.0};
  CHECK(gpp_log_kernel(Vector::Ones(2), cfg) == doctest::Approx(-1.0));
  CHECK(gpp_log_kernel(Vector::Zero(2), cfg) == 0.0);
  GppConfig twice = cfg;
  twice.lambda = 2.0;
  std::mt19937_64 rng(18);
  for (int k = 0; k < 10; ++k) {
    const Vector b = random_vector(2, rng, -3, 3);
    CHECK(gpp_log_kernel(b, twice) == doctest::Approx(2.0 * gpp_log_kernel(b, cfg)));
  }
  CHECK_THROWS_AS(validate(GppConfig{Vector::Zero(2), Vector::Zero(2), 1.0}), DomainError);
}
