#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hpglm/models.hpp"

namespace hpglm {

enum class Algorithm {
  kAdaptiveRw,  // componentwise random walk, gradient-free
  kHmc,         // static HMC on the model's analytic gradient
  kHmcFd,       // static HMC with a finite-difference m-gradient of log Ẑ_L
};

const char* algorithm_name(Algorithm algorithm);
// Accepts "adaptive_rw", "hmc", "hmc_fd"; throws ConfigError otherwise.
Algorithm parse_algorithm(const std::string& name);

struct SamplerConfig {
  int n_chains = 4;
  int n_warmup = 1000;
  int n_keep = 6000;  // kept draws per chain, after thinning
  std::uint64_t seed = 20240101;
  Algorithm algorithm = Algorithm::kAdaptiveRw;
  double target_accept = 0.8;
  int thinning = 1;
  int leapfrog_steps = 32;

  void validate() const;
};

/// Kept draws on the reported scale (m on the mean scale for HPP runs).
struct Draws {
  std::vector<std::string> names;
  Eigen::Index n_primary = 0;  // leading β columns; the rest are m
  std::vector<Matrix> chains;  // one kept × dim matrix per chain
  std::vector<double> acceptance_rate;
  std::vector<Vector> log_posterior;  // on the sampled scale, Jacobian included
  std::vector<int> divergences;

  Eigen::Index dim() const { return chains.empty() ? 0 : chains.front().cols(); }
  Eigen::Index total() const;
  // Chains stacked in order.
  Matrix pooled() const;
  // One coordinate, split by chain.
  std::vector<Vector> coordinate(Eigen::Index j) const;
};

/// Runs cfg.n_chains independent chains in parallel. Chain c draws from an
/// mt19937_64 seeded with (seed, c), so results do not depend on scheduling.
///
/// Throws StuckChainError when a chain accepts fewer than 0.1% of its warmup
/// proposals. Proposals whose log density is non-finite, or whose evaluation
/// throws a NumericError, are rejected.
Draws sample_posterior(const LogDensity& model, const SamplerConfig& cfg);

/// Multi-chain effective sample size with Geyer's initial monotone sequence.
/// Antithetic chains can give values above the number of draws; they are not clipped.
double effective_sample_size(const std::vector<Vector>& chains);

// Split R̂; absent when a chain has fewer than 4 draws.
std::optional<double> split_rhat(const std::vector<Vector>& chains);

struct Diagnostics {
  Vector ess;
  std::vector<std::optional<double>> rhat;
};

Diagnostics diagnostics(const Draws& draws);

}  // namespace hpglm
