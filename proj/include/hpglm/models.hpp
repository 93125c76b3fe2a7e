#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hpglm/glm_priors.hpp"

namespace hpglm {

/// A log density on an unconstrained space, as seen by the samplers.
///
/// Implementations may cache state between calls (the HPP model keeps the
/// last inner-fit optimum as a warm start), so each chain works on its own
/// clone.
class LogDensity {
 public:
  virtual ~LogDensity() = default;

  virtual Eigen::Index dim() const = 0;
  // Log density at x; when grad is non-null it receives the gradient. Returns
  // −∞ outside the support and may throw NumericError subclasses.
  virtual double evaluate(const Vector& x, Vector* grad) = 0;
  virtual std::unique_ptr<LogDensity> clone() const = 0;

  virtual Vector initial_point() const = 0;
  // Reported parameters for an unconstrained state (the mean-scale m for HPP runs).
  virtual Vector to_output(const Vector& x) const { return x; }
  virtual std::vector<std::string> output_names() const;
  // Leading coordinates summarized by default (β for HPP runs).
  virtual Eigen::Index primary_dim() const { return dim(); }
};

struct MTransform {
  Vector m_tilde;
  double log_jacobian;
};

/// Unconstrained coordinates for m: logit (bernoulli), log (poisson, gamma),
/// identity (normal), with log|dm/dm̃| summed over components.
MTransform transform_m(const Family& family, const Vector& m);
Vector inverse_transform_m(const Family& family, const Vector& m_tilde);

/// Joint posterior of (β, m̃) under the HPP. The state is β followed by m̃.
class HppPosterior : public LogDensity {
 public:
  HppPosterior(Family family, GlmData data, double lambda, HppHyper hyper,
               NormConst normconst = NormConst::kLaplace,
               LaplaceGradient gradient = LaplaceGradient::kAnalytic);

  Eigen::Index dim() const override;
  double evaluate(const Vector& x, Vector* grad) override;
  std::unique_ptr<LogDensity> clone() const override;
  Vector initial_point() const override;
  Vector to_output(const Vector& x) const override;
  std::vector<std::string> output_names() const override;
  Eigen::Index primary_dim() const override { return data_.X.cols(); }

  void set_beta_names(std::vector<std::string> names) { beta_names_ = std::move(names); }
  void set_gradient_mode(LaplaceGradient mode) { gradient_ = mode; }

 private:
  Family family_;
  GlmData data_;
  double lambda_;
  HppHyper hyper_;
  NormConst normconst_;
  LaplaceGradient gradient_;
  std::optional<CategoricalCells> cells_;
  std::vector<std::string> beta_names_;
  Vector warm_start_;
};

enum class FixedPrior { kCi, kPowerPrior, kGaussianPowerPrior, kFlat };

/// Posterior of β alone: log likelihood plus a fixed prior kernel.
class FixedPriorPosterior : public LogDensity {
 public:
  static FixedPriorPosterior Ci(Family family, GlmData data, CiPrior prior);
  static FixedPriorPosterior Power(Family family, GlmData data, PowerPriorConfig cfg);
  static FixedPriorPosterior Gaussian(Family family, GlmData data, GppConfig cfg);
  static FixedPriorPosterior Flat(Family family, GlmData data);

  Eigen::Index dim() const override { return data_.X.cols(); }
  double evaluate(const Vector& x, Vector* grad) override;
  std::unique_ptr<LogDensity> clone() const override;
  Vector initial_point() const override;
  std::vector<std::string> output_names() const override;

  void set_beta_names(std::vector<std::string> names) { beta_names_ = std::move(names); }
  FixedPrior kind() const { return kind_; }

 private:
  FixedPriorPosterior(Family family, GlmData data, FixedPrior kind);

  Family family_;
  GlmData data_;
  FixedPrior kind_;
  std::optional<CiPrior> ci_;
  std::optional<PowerPriorConfig> pp_;
  std::optional<GppConfig> gpp_;
  std::vector<std::string> beta_names_;
};

// "beta0", "beta1", ... unless names are given.
std::vector<std::string> default_beta_names(Eigen::Index p);

}  // namespace hpglm
