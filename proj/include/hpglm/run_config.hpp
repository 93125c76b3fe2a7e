#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hpglm/data_io.hpp"
#include "hpglm/elicitation.hpp"
#include "hpglm/linear_closed.hpp"
#include "hpglm/sampler.hpp"
#include "hpglm/summary.hpp"

namespace hpglm {

enum class PriorKind { kHpp, kCi, kPowerPrior, kGpp, kFlat };

const char* prior_name(PriorKind prior);
// "hpp", "ci", "pp", "gpp", "flat"; throws ConfigError otherwise.
PriorKind parse_prior(const std::string& name);

struct CovariateSpec {
  std::string name;    // coefficient name
  std::string column;  // source column
  bool log = false;    // use log(column)
};

struct DataSpec {
  std::filesystem::path path;
  std::string response = "y";
  std::vector<CovariateSpec> covariates;  // empty: every column but the response
  bool intercept = true;
};

struct Design {
  Vector y;
  Matrix X;
  std::vector<std::string> names;  // one per column of X
  Table table;                     // the raw file
};

Design load_design(const DataSpec& spec);

// μ₀ᵢ = value for rows where column < below (or ≥ at_least); a rule with
// neither bound matches every row. The first matching rule wins.
struct Mu0Rule {
  std::string column;
  std::optional<double> below;
  std::optional<double> at_least;
  double value = 0.0;
};

struct HyperSpec {
  enum class Lambda0 { kScalar, kVector, kFromSummary, kFile };
  enum class Mu0 { kConstant, kVector, kRules, kFromCoefficients, kFromSummary, kFile };

  Lambda0 lambda0_mode = Lambda0::kScalar;
  double lambda0 = 1.0;
  Vector lambda0_values;

  Mu0 mu0_mode = Mu0::kConstant;
  double mu0 = 0.0;
  Vector mu0_values;
  std::vector<Mu0Rule> rules;
  std::vector<std::string> alpha_columns;
  Vector alpha0;

  std::filesystem::path file;  // output of `hpglm elicit`
};

struct HistoricalSpec {
  std::optional<DataSpec> data;
  std::optional<std::filesystem::path> summary;
  std::optional<double> a0;  // defaults to lambda
};

struct OutputSpec {
  std::filesystem::path dir = "hpglm_out";
  double level = 0.95;
  bool summarize_m = false;
};

struct CompareSpec {
  std::vector<double> lambdas{0.5, 0.75, 1.0};
  std::vector<PriorKind> priors{PriorKind::kHpp, PriorKind::kCi, PriorKind::kPowerPrior, PriorKind::kGpp};
  std::string parameter;  // coefficient to report; default the second column
};

struct RunConfig {
  Family family{FamilyKind::kBernoulli};
  PriorKind prior = PriorKind::kHpp;
  double lambda = 1.0;
  NormConst normconst = NormConst::kLaplace;
  DataSpec data;
  HyperSpec hyper;
  HistoricalSpec historical;
  SamplerConfig sampler;
  OutputSpec output;
  CompareSpec compare;
};

/// Parses the YAML run configuration. Relative data paths are resolved
/// against base_dir; unknown keys are rejected. Throws ConfigError.
RunConfig parse_run_config(const std::string& yaml_text, const std::filesystem::path& base_dir);

/// Historical summary file:
///   coefficients:
///     - {name: intercept, estimate: 5.8, se: 0.02}
/// Entries are matched to `names` by name.
HistoricalSummary read_summary_file(const std::filesystem::path& path, const std::vector<std::string>& names);
std::string format_summary_file(const std::vector<std::string>& names, const HistoricalSummary& summary);

// The hyperparameter table written by `hpglm elicit`: row, mu0, lambda0, capped.
Table hyper_table(const ElicitedHyper& hyper);
HppHyper read_hyper_file(const std::filesystem::path& path, Eigen::Index n);

/// Posterior mean of mᵢ within [min(μ₀ᵢ, μ̂ᵢ), max(μ₀ᵢ, μ̂ᵢ)] ± 2 MC SEs, with
/// μ̂ the maximum likelihood fit on the current data.
struct Betweenness {
  bool checked = false;
  std::string reason;       // why it was not checked
  std::vector<int> violations;  // 1-based rows
};

struct RunResult {
  Draws draws;
  std::vector<SummaryRow> rows;
  std::vector<SummaryRow> m_rows;
  Betweenness betweenness;
  std::vector<std::string> warnings;
  bool closed_form = false;
  std::vector<std::filesystem::path> inputs;
};

/// Loads the data, resolves the prior and runs the sampler, or draws exactly
/// for normal-family hpp, ci and flat runs.
RunResult run_analysis(const RunConfig& cfg);

}  // namespace hpglm
