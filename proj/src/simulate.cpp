#include "hpglm/simulate.hpp"

#include <random>

#include "hpglm/errors.hpp"

namespace hpglm {
namespace {

// Intercept, race and age effects: a baseline mean count near 330.
constexpr double kIntercept = 5.8;
constexpr double kRace = 0.12;
constexpr double kAge = -0.06;
constexpr double kTreatment = 0.048;

Table draw_table(const SimSpec& spec, int n, const Vector& beta, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed & 0xffffffffu), static_cast<std::uint32_t>(spec.seed >> 32),
                    stream};
  std::mt19937_64 rng(seq);
  std::bernoulli_distribution treatment(spec.p_treatment), race(spec.p_race);
  std::normal_distribution<double> age(spec.age_mean, spec.age_sd);
  Table t;
  t.columns = {"y", "treatment", "race", "age"};
  t.values.resize(n, 4);
  for (int i = 0; i < n; ++i) {
    const double x1 = treatment(rng);
    const double x2 = race(rng);
    const double x3 = (age(rng) - spec.age_mean) / spec.age_sd;
    const double mu = std::exp(beta[0] + beta[1] * x1 + beta[2] * x2 + beta[3] * x3);
    std::poisson_distribution<long> counts(mu);
    t.values(i, 0) = static_cast<double>(counts(rng));
    t.values(i, 1) = x1;
    t.values(i, 2) = x2;
    t.values(i, 3) = x3;
  }
  return t;
}

}  // namespace

SimSpec SimSpec::Scenario(const std::string& name) {
  SimSpec spec;
  spec.beta_historical = Eigen::Vector4d(kIntercept, kTreatment, kRace, kAge);
  spec.beta_current = spec.beta_historical;
  if (name == "incompatible") {
    spec.beta_current[1] = 0.0;
  } else if (name != "compatible") {
    throw ConfigError("unknown scenario '" + name + "' (expected compatible or incompatible)");
  }
  return spec;
}

void SimSpec::validate() const {
  if (n < 1 || n0 < 1) throw ConfigError("simulate: sample sizes must be positive");
  if (beta_current.size() != 4 || beta_historical.size() != 4) {
    throw ConfigError("simulate: coefficients are (intercept, treatment, race, age)");
  }
  if (!(p_treatment >= 0.0 && p_treatment <= 1.0) || !(p_race >= 0.0 && p_race <= 1.0)) {
    throw ConfigError("simulate: covariate proportions must lie in [0, 1]");
  }
  if (!(age_sd > 0.0)) throw ConfigError("simulate: age_sd must be positive");
}

SimulatedData simulate(const SimSpec& spec) {
  spec.validate();
  return {draw_table(spec, spec.n0, spec.beta_historical, 0), draw_table(spec, spec.n, spec.beta_current, 1)};
}

}  // namespace hpglm
