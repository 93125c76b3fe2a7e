#pragma once

#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace hpglm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class FamilyKind { kBernoulli, kPoisson, kGamma, kNormal };

// Open interval ḃ(Θ) of attainable means.
struct MeanDomain {
  double lower;
  double upper;

  bool contains(double mu) const { return mu > lower && mu < upper; }
  bool closure_contains(double mu) const { return mu >= lower && mu <= upper; }
};

/// One-parameter exponential family with unit dispersion and canonical link.
///
/// The density is exp{yθ − b(θ) + c(y)}. Gamma is the exponential
/// distribution (shape 1) parameterized by θ = −1/μ. Every accessor is a pure
/// function; out-of-domain arguments raise DomainError rather than saturate.
class Family {
 public:
  explicit Family(FamilyKind kind) : kind_(kind) {}

  // Accepts "bernoulli", "poisson", "gamma", "normal" (also "logistic",
  // "binomial" and "gaussian" as aliases).
  static Family FromName(std::string_view name);

  FamilyKind kind() const { return kind_; }
  std::string_view name() const;
  MeanDomain mean_domain() const;

  bool in_canonical_domain(double theta) const;
  bool in_support(double y) const;

  // b(θ) and its first three derivatives.
  double cumulant(double theta) const;
  double mean(double theta) const;
  double cumulant_second(double theta) const;
  double cumulant_third(double theta) const;

  // ḃ⁻¹(μ); μ must lie strictly inside the mean domain.
  double canonical(double mu) const;

  // v(μ) = b̈(ḃ⁻¹(μ)) and dv/dμ.
  double variance(double mu) const;
  double variance_derivative(double mu) const;

  // c(y; 1).
  double log_base_measure(double y) const;

  // Canonical link g = ḃ⁻¹, its inverse, and ġ = 1/v.
  double link(double mu) const { return canonical(mu); }
  double link_inverse(double eta) const { return mean(eta); }
  double link_derivative(double mu) const { return 1.0 / variance(mu); }

  // log Z(a, c) where Z(a, c) = ∫ exp{cθ − a b(θ)} dθ, the normalizer of the
  // conjugate prior with precision a and prediction c / a.
  double log_conjugate_normalizer(double a, double c) const;
  // ∂/∂c log Z(a, c).
  double log_conjugate_normalizer_dc(double a, double c) const;

  friend bool operator==(const Family& lhs, const Family& rhs) { return lhs.kind_ == rhs.kind_; }

 private:
  void require_canonical(double theta) const;
  void require_mean(double mu) const;

  FamilyKind kind_;
};

enum class Direction { kToMean, kToCanonical };

double mean_canonical_bijection(const Family& family, double value, Direction direction);

/// Σ yᵢηᵢ − b(ηᵢ) + c(yᵢ) under the canonical link. Throws DataError when a
/// response is outside the family's support and DomainError for invalid ηᵢ.
double log_likelihood(const Family& family, const Vector& y, const Vector& eta);

// Gradient of log_likelihood(y, Xβ) with respect to β: X′(y − ḃ(Xβ)).
Vector log_likelihood_gradient(const Family& family, const Vector& y, const Matrix& X,
                               const Vector& beta);

// Validates that every response lies in the support; reports the first bad index.
void check_support(const Family& family, const Vector& y);

}  // namespace hpglm
