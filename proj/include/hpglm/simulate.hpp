#pragma once

#include <cstdint>
#include <string>

#include "hpglm/data_io.hpp"

namespace hpglm {

/// Poisson regression data in the layout of a two-arm trial: columns y,
/// treatment (Bernoulli), race (Bernoulli) and age, standardized as
/// (age − age_mean)/age_sd. Coefficients are ordered (intercept, treatment,
/// race, age).
struct SimSpec {
  int n = 75;
  int n0 = 50;
  Vector beta_current;
  Vector beta_historical;
  double p_treatment = 0.5;
  double p_race = 0.5;
  double age_mean = 30.0;
  double age_sd = 5.0;
  std::uint64_t seed = 1;

  // "compatible" (current treatment effect 0.048) or "incompatible" (0).
  static SimSpec Scenario(const std::string& name);
  void validate() const;
};

struct SimulatedData {
  Table historical;
  Table current;
};

/// Historical and current rows come from separate streams of the seed, so
/// the historical table does not depend on the scenario.
SimulatedData simulate(const SimSpec& spec);

}  // namespace hpglm
