#include "hpglm/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "hpglm/errors.hpp"
#include "hpglm/irls.hpp"

namespace hpglm {
namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  throw ConfigError("config: " + where + ": " + what);
}

void check_keys(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) config_error(where, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      std::string list;
      for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
      config_error(where, "unknown key '" + key + "' (allowed: " + list + ")");
    }
  }
}

double as_double(const YAML::Node& node, const std::string& where) {
  if (!node.IsScalar()) config_error(where, "expected a number");
  std::string text = node.Scalar();
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "inf" || lower == ".inf" || lower == "infinity" || lower == "+inf") {
    return std::numeric_limits<double>::infinity();
  }
  try {
    return node.as<double>();
  } catch (const YAML::Exception&) {
    config_error(where, "'" + text + "' is not a number");
  }
}

long long as_integer(const YAML::Node& node, const std::string& where) {
  try {
    return node.as<long long>();
  } catch (const YAML::Exception&) {
    config_error(where, "expected an integer");
  }
}

std::string as_string(const YAML::Node& node, const std::string& where) {
  if (!node.IsScalar()) config_error(where, "expected a string");
  return node.Scalar();
}

bool as_bool(const YAML::Node& node, const std::string& where) {
  try {
    return node.as<bool>();
  } catch (const YAML::Exception&) {
    config_error(where, "expected true or false");
  }
}

Vector as_vector(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence()) config_error(where, "expected a list of numbers");
  Vector v(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = as_double(node[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_absolute() ? p : base / p; }

DataSpec parse_data(const YAML::Node& node, const std::string& where, const fs::path& base) {
  check_keys(node, where, {"path", "response", "covariates", "intercept"});
  DataSpec spec;
  if (!node["path"]) config_error(where, "missing 'path'");
  spec.path = resolve(as_string(node["path"], where + ".path"), base);
  if (node["response"]) spec.response = as_string(node["response"], where + ".response");
  if (node["intercept"]) spec.intercept = as_bool(node["intercept"], where + ".intercept");
  if (const YAML::Node cov = node["covariates"]) {
    if (!cov.IsSequence()) config_error(where + ".covariates", "expected a list");
    for (std::size_t i = 0; i < cov.size(); ++i) {
      const std::string w = where + ".covariates[" + std::to_string(i) + "]";
      CovariateSpec c;
      if (cov[i].IsScalar()) {
        c.column = c.name = cov[i].Scalar();
      } else {
        check_keys(cov[i], w, {"column", "name", "transform"});
        if (!cov[i]["column"]) config_error(w, "missing 'column'");
        c.column = as_string(cov[i]["column"], w + ".column");
        const std::string transform = cov[i]["transform"] ? as_string(cov[i]["transform"], w + ".transform") : "none";
        if (transform == "log") {
          c.log = true;
        } else if (transform != "none") {
          config_error(w + ".transform", "expected none or log");
        }
        c.name = cov[i]["name"] ? as_string(cov[i]["name"], w + ".name") : (c.log ? "log_" + c.column : c.column);
      }
      spec.covariates.push_back(c);
    }
  }
  return spec;
}

void parse_hyper(const YAML::Node& node, const fs::path& base, HyperSpec& h) {
  check_keys(node, "hyper", {"lambda0", "mu0", "file"});
  if (node["file"]) {
    h.file = resolve(as_string(node["file"], "hyper.file"), base);
    h.lambda0_mode = HyperSpec::Lambda0::kFile;
    h.mu0_mode = HyperSpec::Mu0::kFile;
    if (node["lambda0"] || node["mu0"]) config_error("hyper", "'file' excludes 'lambda0' and 'mu0'");
    return;
  }
  if (const YAML::Node l0 = node["lambda0"]) {
    if (l0.IsSequence()) {
      h.lambda0_mode = HyperSpec::Lambda0::kVector;
      h.lambda0_values = as_vector(l0, "hyper.lambda0");
    } else if (l0.IsScalar() && l0.Scalar() == "from-summary") {
      h.lambda0_mode = HyperSpec::Lambda0::kFromSummary;
      h.mu0_mode = HyperSpec::Mu0::kFromSummary;
    } else {
      h.lambda0 = as_double(l0, "hyper.lambda0");
    }
  }
  const YAML::Node mu = node["mu0"];
  if (!mu) return;
  if (h.lambda0_mode == HyperSpec::Lambda0::kFromSummary && !(mu.IsScalar() && mu.Scalar() == "from-summary")) {
    config_error("hyper.mu0", "lambda0: from-summary fixes mu0 = g^-1(X beta0_hat); set mu0: from-summary or omit it");
  }
  if (mu.IsSequence()) {
    h.mu0_mode = HyperSpec::Mu0::kVector;
    h.mu0_values = as_vector(mu, "hyper.mu0");
  } else if (mu.IsScalar()) {
    if (mu.Scalar() == "from-summary") {
      h.mu0_mode = HyperSpec::Mu0::kFromSummary;
    } else {
      h.mu0_mode = HyperSpec::Mu0::kConstant;
      h.mu0 = as_double(mu, "hyper.mu0");
    }
  } else {
    check_keys(mu, "hyper.mu0", {"rules", "from_coefficients"});
    if (const YAML::Node rules = mu["rules"]) {
      h.mu0_mode = HyperSpec::Mu0::kRules;
      if (!rules.IsSequence()) config_error("hyper.mu0.rules", "expected a list");
      for (std::size_t i = 0; i < rules.size(); ++i) {
        const std::string w = "hyper.mu0.rules[" + std::to_string(i) + "]";
        check_keys(rules[i], w, {"column", "below", "at_least", "value"});
        Mu0Rule r;
        if (!rules[i]["value"]) config_error(w, "missing 'value'");
        r.value = as_double(rules[i]["value"], w + ".value");
        if (rules[i]["below"]) r.below = as_double(rules[i]["below"], w + ".below");
        if (rules[i]["at_least"]) r.at_least = as_double(rules[i]["at_least"], w + ".at_least");
        if ((r.below || r.at_least) && !rules[i]["column"]) config_error(w, "a bounded rule needs 'column'");
        if (rules[i]["column"]) r.column = as_string(rules[i]["column"], w + ".column");
        h.rules.push_back(r);
      }
    } else if (const YAML::Node fc = mu["from_coefficients"]) {
      h.mu0_mode = HyperSpec::Mu0::kFromCoefficients;
      check_keys(fc, "hyper.mu0.from_coefficients", {"columns", "alpha0"});
      if (!fc["columns"] || !fc["alpha0"]) config_error("hyper.mu0.from_coefficients", "needs 'columns' and 'alpha0'");
      for (const auto& c : fc["columns"]) h.alpha_columns.push_back(as_string(c, "hyper.mu0.from_coefficients.columns"));
      h.alpha0 = as_vector(fc["alpha0"], "hyper.mu0.from_coefficients.alpha0");
      if (h.alpha0.size() != static_cast<Eigen::Index>(h.alpha_columns.size())) {
        config_error("hyper.mu0.from_coefficients", "columns and alpha0 differ in length");
      }
    } else {
      config_error("hyper.mu0", "expected a number, a list, from-summary, rules or from_coefficients");
    }
  }
}

void parse_sampler(const YAML::Node& node, SamplerConfig& s) {
  check_keys(node, "sampler",
             {"algorithm", "chains", "warmup", "keep", "seed", "thinning", "target_accept", "leapfrog_steps"});
  if (node["algorithm"]) s.algorithm = parse_algorithm(as_string(node["algorithm"], "sampler.algorithm"));
  if (node["chains"]) s.n_chains = static_cast<int>(as_integer(node["chains"], "sampler.chains"));
  if (node["warmup"]) s.n_warmup = static_cast<int>(as_integer(node["warmup"], "sampler.warmup"));
  if (node["keep"]) s.n_keep = static_cast<int>(as_integer(node["keep"], "sampler.keep"));
  if (node["thinning"]) s.thinning = static_cast<int>(as_integer(node["thinning"], "sampler.thinning"));
  if (node["leapfrog_steps"]) s.leapfrog_steps = static_cast<int>(as_integer(node["leapfrog_steps"], "sampler.leapfrog_steps"));
  if (node["target_accept"]) s.target_accept = as_double(node["target_accept"], "sampler.target_accept");
  if (node["seed"]) {
    try {
      s.seed = node["seed"].as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      config_error("sampler.seed", "expected a non-negative 64-bit integer");
    }
  }
}

Eigen::Index name_index(const std::vector<std::string>& names, const std::string& name, const std::string& where) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError(where + ": no coefficient named '" + name + "' (have: " + list + ")");
  }
  return it - names.begin();
}

Vector constant_or_vector(double value, const Vector& values, Eigen::Index n, bool is_vector, const std::string& what) {
  if (!is_vector) return Vector::Constant(n, value);
  if (values.size() != n) {
    throw ConfigError("config: " + what + " has " + std::to_string(values.size()) + " entries but the data have " +
                      std::to_string(n) + " rows");
  }
  return values;
}

Vector apply_rules(const std::vector<Mu0Rule>& rules, const Table& table) {
  const Eigen::Index n = table.values.rows();
  Vector mu0(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    bool matched = false;
    for (const Mu0Rule& r : rules) {
      if (!r.column.empty()) {
        const double v = table.values(i, table.column_index(r.column));
        if (r.below && !(v < *r.below)) continue;
        if (r.at_least && !(v >= *r.at_least)) continue;
      }
      mu0[i] = r.value;
      matched = true;
      break;
    }
    if (!matched) throw ConfigError("config: hyper.mu0.rules: no rule matches data row " + std::to_string(i + 1));
  }
  return mu0;
}

// Exact draws for the normal family, laid out like MCMC output.
Draws exact_draws(const GaussianMoments& moments, const SamplerConfig& cfg, std::vector<std::string> names,
                  Eigen::Index n_primary) {
  Draws d;
  d.names = std::move(names);
  d.n_primary = n_primary;
  for (int c = 0; c < cfg.n_chains; ++c) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(c)};
    std::mt19937_64 rng(seq);
    d.chains.push_back(draw_gaussian(moments, static_cast<std::size_t>(cfg.n_keep), rng));
    d.acceptance_rate.push_back(1.0);
    d.divergences.push_back(0);
  }
  return d;
}

Betweenness check_betweenness(const RunConfig& cfg, const Design& design, const Vector& mu0, const Draws& draws,
                              double level) {
  Betweenness b;
  Vector mu_hat;
  try {
    const FitResult fit = irls(cfg.family, design.y, design.X, 1.0);
    mu_hat = (design.X * fit.beta_hat).unaryExpr([&](double e) { return cfg.family.link_inverse(e); });
  } catch (const NumericError& e) {
    b.reason = std::string("no maximum likelihood fit on the current data: ") + e.what();
    return b;
  }
  const auto rows = summarize(draws, level, SummaryScope::kAll);
  const Eigen::Index p = design.X.cols();
  for (Eigen::Index i = 0; i < mu0.size(); ++i) {
    const SummaryRow& r = rows[static_cast<std::size_t>(p + i)];
    const double slack = 2.0 * (std::isfinite(r.mc_se) ? r.mc_se : 0.0);
    const double lo = std::min(mu0[i], mu_hat[i]) - slack;
    const double hi = std::max(mu0[i], mu_hat[i]) + slack;
    if (!(r.mean >= lo && r.mean <= hi)) b.violations.push_back(static_cast<int>(i + 1));
  }
  b.checked = true;
  return b;
}

}  // namespace

const char* prior_name(PriorKind prior) {
  switch (prior) {
    case PriorKind::kHpp: return "hpp";
    case PriorKind::kCi: return "ci";
    case PriorKind::kPowerPrior: return "pp";
    case PriorKind::kGpp: return "gpp";
    case PriorKind::kFlat: return "flat";
  }
  return "?";
}

PriorKind parse_prior(const std::string& name) {
  if (name == "hpp") return PriorKind::kHpp;
  if (name == "ci") return PriorKind::kCi;
  if (name == "pp") return PriorKind::kPowerPrior;
  if (name == "gpp") return PriorKind::kGpp;
  if (name == "flat") return PriorKind::kFlat;
  throw ConfigError("unknown prior '" + name + "' (expected hpp, ci, pp, gpp or flat)");
}

Design load_design(const DataSpec& spec) {
  Design d;
  d.table = read_csv(spec.path);
  const std::string file = spec.path.string();
  auto column = [&](const std::string& name) {
    try {
      return d.table.column(name);
    } catch (const DataError& e) {
      throw DataError(file + ": " + e.what());
    }
  };
  d.y = column(spec.response);
  std::vector<CovariateSpec> covs = spec.covariates;
  if (covs.empty()) {
    for (const auto& c : d.table.columns) {
      if (c != spec.response) covs.push_back({c, c, false});
    }
  }
  const Eigen::Index n = d.y.size();
  const Eigen::Index p = static_cast<Eigen::Index>(covs.size()) + (spec.intercept ? 1 : 0);
  if (p == 0) throw ConfigError("config: the model has no columns (no covariates and no intercept)");
  d.X.resize(n, p);
  Eigen::Index j = 0;
  if (spec.intercept) {
    d.X.col(j++).setOnes();
    d.names.push_back("intercept");
  }
  for (const CovariateSpec& c : covs) {
    Vector v = column(c.column);
    if (c.log) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!(v[i] > 0.0)) {
          throw DataError(file + ": row " + std::to_string(i + 2) + ": column '" + c.column +
                          "' must be positive to take its log");
        }
        v[i] = std::log(v[i]);
      }
    }
    d.X.col(j++) = v;
    d.names.push_back(c.name);
  }
  if (std::set<std::string>(d.names.begin(), d.names.end()).size() != d.names.size()) {
    throw ConfigError("config: coefficient names must be unique");
  }
  return d;
}

RunConfig parse_run_config(const std::string& yaml_text, const fs::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: not valid YAML: ") + e.what());
  }
  check_keys(root, "top level",
             {"family", "prior", "lambda", "normalizer", "data", "hyper", "historical", "sampler", "output", "compare"});
  RunConfig cfg;
  if (!root["family"]) config_error("top level", "missing 'family'");
  try {
    cfg.family = Family::FromName(as_string(root["family"], "family"));
  } catch (const Error& e) {
    config_error("family", e.what());
  }
  if (root["prior"]) cfg.prior = parse_prior(as_string(root["prior"], "prior"));
  if (root["lambda"]) cfg.lambda = as_double(root["lambda"], "lambda");
  if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda)) config_error("lambda", "must be positive and finite");
  if (root["normalizer"]) {
    const std::string nc = as_string(root["normalizer"], "normalizer");
    if (nc == "laplace") {
      cfg.normconst = NormConst::kLaplace;
    } else if (nc == "exact") {
      cfg.normconst = NormConst::kExactCategorical;
    } else {
      config_error("normalizer", "expected laplace or exact");
    }
  }
  if (!root["data"]) config_error("top level", "missing 'data'");
  cfg.data = parse_data(root["data"], "data", base_dir);
  if (root["hyper"]) parse_hyper(root["hyper"], base_dir, cfg.hyper);
  if (const YAML::Node h = root["historical"]) {
    check_keys(h, "historical", {"data", "summary", "a0"});
    if (h["data"]) cfg.historical.data = parse_data(h["data"], "historical.data", base_dir);
    if (h["summary"]) cfg.historical.summary = resolve(as_string(h["summary"], "historical.summary"), base_dir);
    if (h["a0"]) {
      cfg.historical.a0 = as_double(h["a0"], "historical.a0");
      if (!(*cfg.historical.a0 > 0.0 && *cfg.historical.a0 <= 1.0)) config_error("historical.a0", "must lie in (0, 1]");
    }
  }
  if (root["sampler"]) parse_sampler(root["sampler"], cfg.sampler);
  if (const YAML::Node o = root["output"]) {
    check_keys(o, "output", {"dir", "level", "summarize_m"});
    if (o["dir"]) cfg.output.dir = as_string(o["dir"], "output.dir");
    if (o["level"]) cfg.output.level = as_double(o["level"], "output.level");
    if (o["summarize_m"]) cfg.output.summarize_m = as_bool(o["summarize_m"], "output.summarize_m");
    if (!(cfg.output.level > 0.0 && cfg.output.level < 1.0)) config_error("output.level", "must lie in (0, 1)");
  }
  if (const YAML::Node c = root["compare"]) {
    check_keys(c, "compare", {"lambdas", "priors", "parameter"});
    if (c["lambdas"]) {
      const Vector l = as_vector(c["lambdas"], "compare.lambdas");
      cfg.compare.lambdas.assign(l.data(), l.data() + l.size());
      for (double v : cfg.compare.lambdas) {
        if (!(v > 0.0) || !std::isfinite(v)) config_error("compare.lambdas", "must be positive and finite");
      }
    }
    if (c["priors"]) {
      cfg.compare.priors.clear();
      for (const auto& p : c["priors"]) cfg.compare.priors.push_back(parse_prior(as_string(p, "compare.priors")));
    }
    if (c["parameter"]) cfg.compare.parameter = as_string(c["parameter"], "compare.parameter");
  }
  try {
    cfg.sampler.validate();
  } catch (const ConfigError& e) {
    config_error("sampler", e.what());
  }
  return cfg;
}

HistoricalSummary read_summary_file(const fs::path& path, const std::vector<std::string>& names) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    throw DataError(path.string() + ": cannot open the summary file");
  } catch (const YAML::Exception& e) {
    throw DataError(path.string() + ": not valid YAML: " + e.what());
  }
  const YAML::Node list = root["coefficients"];
  if (!list || !list.IsSequence()) throw DataError(path.string() + ": expected a 'coefficients' list");
  HistoricalSummary s{Vector::Constant(static_cast<Eigen::Index>(names.size()), std::nan("")),
                      Vector::Constant(static_cast<Eigen::Index>(names.size()), std::nan(""))};
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = path.string() + ": coefficients[" + std::to_string(i) + "]";
    try {
      const auto name = list[i]["name"].as<std::string>();
      const auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end()) throw DataError(where + ": '" + name + "' is not a coefficient of the model");
      const auto j = it - names.begin();
      s.beta0_hat[j] = list[i]["estimate"].as<double>();
      s.se0[j] = list[i]["se"].as<double>();
    } catch (const YAML::Exception&) {
      throw DataError(where + ": needs name, estimate and se");
    }
  }
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (std::isnan(s.beta0_hat[static_cast<Eigen::Index>(j)])) {
      throw DataError(path.string() + ": no entry for coefficient '" + names[j] + "'");
    }
  }
  s.validate();
  return s;
}

std::string format_summary_file(const std::vector<std::string>& names, const HistoricalSummary& summary) {
  std::ostringstream out;
  out << "coefficients:\n";
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    out << "  - {name: " << names[j] << ", estimate: " << format_double(summary.beta0_hat[k])
        << ", se: " << format_double(summary.se0[k]) << "}\n";
  }
  return out.str();
}

Table hyper_table(const ElicitedHyper& hyper) {
  Table t;
  t.columns = {"row", "mu0", "lambda0", "capped"};
  const Eigen::Index n = hyper.hyper.mu0.size();
  t.values.resize(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    t.values(i, 0) = static_cast<double>(i + 1);
    t.values(i, 1) = hyper.hyper.mu0[i];
    t.values(i, 2) = hyper.hyper.lambda0[i];
    t.values(i, 3) = hyper.capped[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  }
  return t;
}

HppHyper read_hyper_file(const fs::path& path, Eigen::Index n) {
  const Table t = read_csv(path);
  HppHyper h{t.column("lambda0"), t.column("mu0")};
  if (h.mu0.size() != n) {
    throw DataError(path.string() + ": " + std::to_string(h.mu0.size()) + " rows, but the data have " +
                    std::to_string(n));
  }
  return h;
}

RunResult run_analysis(const RunConfig& cfg) {
  RunResult result;
  const Design design = load_design(cfg.data);
  result.inputs.push_back(cfg.data.path);
  try {
    check_support(cfg.family, design.y);
  } catch (const DataError& e) {
    throw DataError(cfg.data.path.string() + ": " + e.what());
  }
  const Eigen::Index n = design.X.rows();
  const Eigen::Index p = design.X.cols();

  std::optional<Design> historical;
  auto historical_design = [&]() -> const Design& {
    if (!historical) {
      if (!cfg.historical.data) throw ConfigError("config: this prior needs historical.data");
      DataSpec spec = *cfg.historical.data;
      historical = load_design(spec);
      result.inputs.push_back(spec.path);
      if (historical->names != design.names) {
        throw ConfigError("config: historical and current data must have the same coefficients");
      }
    }
    return *historical;
  };
  auto summary = [&]() -> HistoricalSummary {
    if (cfg.historical.summary) {
      result.inputs.push_back(*cfg.historical.summary);
      return read_summary_file(*cfg.historical.summary, design.names);
    }
    if (cfg.historical.data) {
      const Design& h = historical_design();
      return HistoricalSummary::FromData(cfg.family, h.y, h.X);
    }
    throw ConfigError("config: this prior needs historical.summary or historical.data");
  };

  std::optional<ElicitedHyper> elicited;
  auto elicit = [&]() -> const ElicitedHyper& {
    if (!elicited) {
      elicited = build_hpp_from_summary(design.X, summary(), cfg.family);
      if (elicited->any_capped()) {
        result.warnings.push_back("lambda0 capped at 1e12 for rows with zero delta-method variance (CI-prior limit)");
      }
    }
    return *elicited;
  };

  auto resolve_mu0 = [&]() -> Vector {
    using M = HyperSpec::Mu0;
    switch (cfg.hyper.mu0_mode) {
      case M::kConstant:
      case M::kVector:
        return constant_or_vector(cfg.hyper.mu0, cfg.hyper.mu0_values, n, cfg.hyper.mu0_mode == M::kVector, "hyper.mu0");
      case M::kRules: return apply_rules(cfg.hyper.rules, design.table);
      case M::kFromCoefficients: {
        Matrix X1(n, static_cast<Eigen::Index>(cfg.hyper.alpha_columns.size()));
        for (std::size_t k = 0; k < cfg.hyper.alpha_columns.size(); ++k) {
          X1.col(static_cast<Eigen::Index>(k)) =
              design.X.col(name_index(design.names, cfg.hyper.alpha_columns[k], "hyper.mu0.from_coefficients"));
        }
        return mu0_from_coefficients(X1, cfg.hyper.alpha0, cfg.family);
      }
      case M::kFromSummary: return elicit().hyper.mu0;
      case M::kFile: result.inputs.push_back(cfg.hyper.file); return read_hyper_file(cfg.hyper.file, n).mu0;
    }
    return {};
  };
  auto resolve_lambda0 = [&]() -> Vector {
    using L = HyperSpec::Lambda0;
    switch (cfg.hyper.lambda0_mode) {
      case L::kScalar:
      case L::kVector:
        return constant_or_vector(cfg.hyper.lambda0, cfg.hyper.lambda0_values, n, cfg.hyper.lambda0_mode == L::kVector,
                                  "hyper.lambda0");
      case L::kFromSummary: return elicit().hyper.lambda0;
      case L::kFile: return read_hyper_file(cfg.hyper.file, n).lambda0;
    }
    return {};
  };

  PriorKind prior = cfg.prior;
  Vector mu0;
  Vector lambda0;
  if (prior == PriorKind::kHpp || prior == PriorKind::kCi) mu0 = resolve_mu0();
  if (prior == PriorKind::kHpp) {
    lambda0 = resolve_lambda0();
    if ((lambda0.array() == std::numeric_limits<double>::infinity()).all()) {
      result.warnings.push_back("lambda0 = inf: the HPP reduces to the CI prior with m = mu0");
      prior = PriorKind::kCi;
    }
  }

  const GlmData data{design.y, design.X};
  std::unique_ptr<LogDensity> model;
  std::optional<GaussianMoments> exact;
  const bool normal = cfg.family.kind() == FamilyKind::kNormal;
  switch (prior) {
    case PriorKind::kHpp: {
      HppHyper hyper{lambda0, mu0};
      validate(cfg.family, hyper);
      if (normal) {
        exact = lm_joint_posterior(design.X, design.y, cfg.lambda, lambda0, mu0);
      } else {
        auto hpp = std::make_unique<HppPosterior>(cfg.family, data, cfg.lambda, hyper, cfg.normconst);
        hpp->set_beta_names(design.names);
        model = std::move(hpp);
      }
      break;
    }
    case PriorKind::kCi: {
      CiPrior ci{cfg.lambda, mu0};
      validate(cfg.family, ci, design.X);
      if (normal) {
        const Matrix G = (design.X.transpose() * design.X).inverse();
        exact = GaussianMoments{G * design.X.transpose() * (design.y + cfg.lambda * mu0) / (1.0 + cfg.lambda),
                                G / (1.0 + cfg.lambda)};
      } else {
        auto m = std::make_unique<FixedPriorPosterior>(FixedPriorPosterior::Ci(cfg.family, data, ci));
        m->set_beta_names(design.names);
        model = std::move(m);
      }
      break;
    }
    case PriorKind::kPowerPrior: {
      const Design& h = historical_design();
      auto m = std::make_unique<FixedPriorPosterior>(FixedPriorPosterior::Power(
          cfg.family, data, PowerPriorConfig{cfg.historical.a0.value_or(std::min(cfg.lambda, 1.0)), h.y, h.X}));
      if (!cfg.historical.a0 && cfg.lambda > 1.0) result.warnings.push_back("power prior: a0 = min(lambda, 1) = 1");
      m->set_beta_names(design.names);
      model = std::move(m);
      break;
    }
    case PriorKind::kGpp: {
      const HistoricalSummary s = summary();
      if ((s.se0.array() <= 0.0).any()) throw DataError("gpp: every standard error must be positive");
      auto m = std::make_unique<FixedPriorPosterior>(
          FixedPriorPosterior::Gaussian(cfg.family, data, GppConfig{s.beta0_hat, s.se0, cfg.lambda}));
      m->set_beta_names(design.names);
      model = std::move(m);
      break;
    }
    case PriorKind::kFlat: {
      if (normal) {
        const Matrix G = (design.X.transpose() * design.X).inverse();
        exact = GaussianMoments{G * design.X.transpose() * design.y, G};
      } else {
        auto m = std::make_unique<FixedPriorPosterior>(FixedPriorPosterior::Flat(cfg.family, data));
        m->set_beta_names(design.names);
        model = std::move(m);
      }
      break;
    }
  }

  if (exact) {
    result.closed_form = true;
    std::vector<std::string> names = design.names;
    if (prior == PriorKind::kHpp) {
      for (Eigen::Index i = 0; i < n; ++i) names.push_back("m" + std::to_string(i + 1));
    }
    result.draws = exact_draws(*exact, cfg.sampler, names, p);
  } else {
    result.draws = sample_posterior(*model, cfg.sampler);
  }

  result.rows = summarize(result.draws, cfg.output.level, SummaryScope::kPrimary);
  if (prior == PriorKind::kHpp) {
    if (cfg.output.summarize_m) {
      auto all = summarize(result.draws, cfg.output.level, SummaryScope::kAll);
      result.m_rows.assign(all.begin() + p, all.end());
    }
    result.betweenness = check_betweenness(cfg, design, mu0, result.draws, cfg.output.level);
    if (result.betweenness.checked && !result.betweenness.violations.empty()) {
      result.warnings.push_back("posterior mean of m outside [mu0, mu_hat] +- 2 MC SE at " +
                                std::to_string(result.betweenness.violations.size()) + " row(s)");
    }
  } else {
    result.betweenness.reason = "only checked for hpp runs";
  }
  for (const SummaryRow& r : result.rows) {
    if (r.rhat && *r.rhat > 1.01) result.warnings.push_back("R-hat above 1.01 for " + r.name);
  }
  return result;
}

}  // namespace hpglm
