#include "hpglm/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "hpglm/elicitation.hpp"
#include "hpglm/errors.hpp"
#include "hpglm/iid_hpp.hpp"
#include "hpglm/irls.hpp"
#include "hpglm/run_config.hpp"
#include "hpglm/simulate.hpp"
#include "hpglm/summary.hpp"

namespace hpglm {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return fmt::format("{:016x}", h);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  std::uint64_t z = seed ^ std::stoull(fnv1a_hex(label), nullptr, 16);
  // splitmix64 finalizer
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::string draws_csv(const Draws& draws, bool primary_only) {
  const Eigen::Index cols = primary_only ? draws.n_primary : draws.dim();
  const bool with_lp = !draws.log_posterior.empty();
  std::string out = "chain,draw";
  for (Eigen::Index j = 0; j < cols; ++j) out += "," + draws.names[static_cast<std::size_t>(j)];
  if (with_lp) out += ",log_posterior";
  out += '\n';
  for (std::size_t c = 0; c < draws.chains.size(); ++c) {
    const Matrix& m = draws.chains[c];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      out += std::to_string(c + 1) + "," + std::to_string(i + 1);
      for (Eigen::Index j = 0; j < cols; ++j) {
        out += ',';
        out += format_double(m(i, j));
      }
      if (with_lp) {
        out += ',';
        out += format_double(draws.log_posterior[c][i]);
      }
      out += '\n';
    }
  }
  return out;
}

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json optional_json(const auto& v) { return v ? json(*v) : json(nullptr); }

template <class T>
void optional_from(const json& j, const char* key, std::optional<T>& v) {
  if (j.contains(key) && !j[key].is_null()) v = j[key].get<T>();
}

json row_json(const SummaryRow& r) {
  return json{{"name", r.name},
              {"mean", r.mean},
              {"sd", r.sd},
              {"hpd_lower", r.hpd_lower},
              {"hpd_upper", r.hpd_upper},
              {"q_lower", r.q_lower},
              {"q_upper", r.q_upper},
              {"prob_nonpositive", r.prob_nonpositive},
              {"ess", r.ess},
              {"rhat", optional_json(r.rhat)},
              {"mc_se", r.mc_se},
              {"insufficient_variation", r.insufficient_variation}};
}

void warn(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

// Where a run's configuration comes from: a file, or the copy kept in a manifest.
struct ConfigSource {
  std::string text;
  fs::path dir;
};

// Options shared by fit, elicit and compare.
struct RunOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> chains;
  std::optional<int> warmup;
  std::optional<int> keep;
  std::optional<std::string> algorithm;

  json to_json() const {
    return json{{"seed", optional_json(seed)},
                {"chains", optional_json(chains)},
                {"warmup", optional_json(warmup)},
                {"keep", optional_json(keep)},
                {"algorithm", optional_json(algorithm)}};
  }
  void from_json(const json& j) {
    optional_from(j, "seed", seed);
    optional_from(j, "chains", chains);
    optional_from(j, "warmup", warmup);
    optional_from(j, "keep", keep);
    optional_from(j, "algorithm", algorithm);
  }
  void apply(SamplerConfig& s) const {
    if (seed) s.seed = *seed;
    if (chains) s.n_chains = *chains;
    if (warmup) s.n_warmup = *warmup;
    if (keep) s.n_keep = *keep;
    if (algorithm) s.algorithm = parse_algorithm(*algorithm);
    s.validate();
  }
};

struct SimOptions {
  std::string scenario = "compatible";
  std::uint64_t seed = 1;
  int n = 75;
  int n0 = 50;
  double p_treatment = 0.5;
  double p_race = 0.5;
  double age_mean = 30.0;
  double age_sd = 5.0;

  json to_json() const {
    return json{{"scenario", scenario}, {"seed", seed},         {"n", n},
                {"n0", n0},             {"p_treatment", p_treatment}, {"p_race", p_race},
                {"age_mean", age_mean}, {"age_sd", age_sd}};
  }
  void from_json(const json& j) {
    scenario = j.at("scenario").get<std::string>();
    seed = j.at("seed").get<std::uint64_t>();
    n = j.at("n").get<int>();
    n0 = j.at("n0").get<int>();
    p_treatment = j.at("p_treatment").get<double>();
    p_race = j.at("p_race").get<double>();
    age_mean = j.at("age_mean").get<double>();
    age_sd = j.at("age_sd").get<double>();
  }
};

struct IidOptions {
  std::string family;
  int n = 0;
  double ybar = 0.0;
  double lambda = 1.0;
  double lambda0 = 1.0;
  double mu0 = 0.5;

  json to_json() const {
    return json{{"family", family}, {"n", n},         {"ybar", ybar},
                {"lambda", lambda}, {"lambda0", lambda0}, {"mu0", mu0}};
  }
  void from_json(const json& j) {
    family = j.at("family").get<std::string>();
    n = j.at("n").get<int>();
    ybar = j.at("ybar").get<double>();
    lambda = j.at("lambda").get<double>();
    lambda0 = j.at("lambda0").get<double>();
    mu0 = j.at("mu0").get<double>();
  }
};

struct Manifest {
  json body;

  static Manifest Load(const fs::path& path, const std::string& command) {
    json j;
    try {
      j = json::parse(read_text(path));
    } catch (const json::exception& e) {
      throw ConfigError(path.string() + ": not a valid manifest: " + e.what());
    }
    if (j.value("command", "") != command) {
      throw ConfigError(path.string() + ": manifest is for '" + j.value("command", "?") + "', not '" + command + "'");
    }
    if (j.value("version", "") != kVersion) {
      warn(fmt::format("manifest written by version {}, running {}", j.value("version", "?"), kVersion));
    }
    if (j.contains("config") && !j["config"].is_null()) {
      const std::string text = j["config"].get<std::string>();
      if (fnv1a_hex(text) != j.value("config_hash", "")) throw ConfigError(path.string() + ": config hash mismatch");
    }
    for (const auto& in : j.value("inputs", json::array())) {
      const fs::path p = in.at("path").get<std::string>();
      std::error_code ec;
      if (!fs::exists(p, ec)) throw DataError(p.string() + ": input recorded in the manifest is missing");
      if (fnv1a_hex(read_text(p)) != in.at("fnv1a").get<std::string>()) {
        warn(p.string() + ": contents differ from the run recorded in the manifest");
      }
    }
    return Manifest{j};
  }

  ConfigSource config() const {
    return {body.at("config").get<std::string>(), fs::path(body.at("config_dir").get<std::string>())};
  }
};

json make_manifest(const std::string& command, const json& options, const ConfigSource* config,
                   std::optional<std::uint64_t> seed, const std::vector<fs::path>& inputs) {
  json j{{"version", kVersion}, {"command", command}};
  if (config != nullptr) {
    j["config"] = config->text;
    j["config_dir"] = config->dir.string();
    j["config_hash"] = fnv1a_hex(config->text);
  } else {
    j["config"] = nullptr;
  }
  j["options"] = options;
  j["seed"] = optional_json(seed);
  json list = json::array();
  std::vector<std::string> seen;
  for (const fs::path& p : inputs) {
    const std::string abs = fs::absolute(p).lexically_normal().string();
    if (std::find(seen.begin(), seen.end(), abs) != seen.end()) continue;
    seen.push_back(abs);
    list.push_back(json{{"path", abs}, {"fnv1a", fnv1a_hex(read_text(p))}});
  }
  j["inputs"] = list;
  return j;
}

ConfigSource read_config(const std::string& path) {
  if (path.empty()) throw ConfigError("--config or --manifest is required");
  const fs::path p(path);
  return {read_text(p), fs::absolute(p).parent_path().lexically_normal()};
}

fs::path prepare_out(const std::string& cli_out, const std::string& fallback) {
  const fs::path dir = cli_out.empty() ? fs::path(fallback) : fs::path(cli_out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(dir.string() + ": cannot create the output directory: " + ec.message());
  return dir;
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

json sampler_json(const SamplerConfig& s, const Draws& d, bool closed_form) {
  return json{{"method", closed_form ? "exact" : algorithm_name(s.algorithm)},
              {"chains", s.n_chains},
              {"warmup", closed_form ? 0 : s.n_warmup},
              {"keep_per_chain", s.n_keep},
              {"seed", s.seed},
              {"acceptance_rate", d.acceptance_rate},
              {"divergences", d.divergences}};
}

int cmd_fit(const RunOptions& opt, const ConfigSource& src, const std::string& out_flag) {
  RunConfig cfg = parse_run_config(src.text, src.dir);
  opt.apply(cfg.sampler);
  const RunResult result = run_analysis(cfg);
  for (const auto& w : result.warnings) warn(w);
  const fs::path out = prepare_out(out_flag, cfg.output.dir);

  write_file_atomic(out / "draws.csv", draws_csv(result.draws));
  std::string text = fmt::format("family {}, prior {}, lambda {}, {}\n", cfg.family.name(), prior_name(cfg.prior),
                                 cfg.lambda, result.closed_form ? "exact draws" : algorithm_name(cfg.sampler.algorithm));
  text += format_summary_table(result.rows, cfg.output.level);
  if (!result.m_rows.empty()) text += "\n" + format_summary_table(result.m_rows, cfg.output.level);
  for (const auto& w : result.warnings) text += "warning: " + w + "\n";
  write_file_atomic(out / "summary.txt", text);

  json rows = json::array();
  for (const auto& r : result.rows) rows.push_back(row_json(r));
  json m_rows = json::array();
  for (const auto& r : result.m_rows) m_rows.push_back(row_json(r));
  json summary{{"family", cfg.family.name()},
               {"prior", prior_name(cfg.prior)},
               {"lambda", cfg.lambda},
               {"level", cfg.output.level},
               {"closed_form", result.closed_form},
               {"sampler", sampler_json(cfg.sampler, result.draws, result.closed_form)},
               {"coefficients", rows},
               {"m", m_rows},
               {"betweenness",
                {{"checked", result.betweenness.checked},
                 {"reason", result.betweenness.reason},
                 {"violations", result.betweenness.violations}}},
               {"warnings", result.warnings}};
  write_json(out / "summary.json", summary);
  write_json(out / "manifest.json", make_manifest("fit", opt.to_json(), &src, cfg.sampler.seed, result.inputs));
  std::cout << text;
  return 0;
}

int cmd_elicit(const RunOptions& opt, const ConfigSource& src, const std::string& out_flag) {
  RunConfig cfg = parse_run_config(src.text, src.dir);
  const Design design = load_design(cfg.data);
  std::vector<fs::path> inputs{cfg.data.path};
  HistoricalSummary summary;
  if (cfg.historical.summary) {
    summary = read_summary_file(*cfg.historical.summary, design.names);
    inputs.push_back(*cfg.historical.summary);
  } else if (cfg.historical.data) {
    const Design h = load_design(*cfg.historical.data);
    if (h.names != design.names) throw ConfigError("config: historical and current data must have the same coefficients");
    summary = HistoricalSummary::FromData(cfg.family, h.y, h.X);
    inputs.push_back(cfg.historical.data->path);
  } else {
    throw ConfigError("config: elicit needs historical.summary or historical.data");
  }
  const ElicitedHyper hyper = build_hpp_from_summary(design.X, summary, cfg.family);
  if (hyper.any_capped()) warn("lambda0 capped at 1e12 for rows with zero delta-method variance (CI-prior limit)");
  const fs::path out = prepare_out(out_flag, cfg.output.dir);
  write_file_atomic(out / "hyper.csv", to_csv(hyper_table(hyper)));
  write_json(out / "manifest.json", make_manifest("elicit", opt.to_json(), &src, std::nullopt, inputs));
  std::cout << fmt::format("wrote {} rows to {}\n", hyper.hyper.mu0.size(), (out / "hyper.csv").string());
  return 0;
}

int cmd_simulate(const SimOptions& opt, const std::string& out_flag) {
  SimSpec spec = SimSpec::Scenario(opt.scenario);
  spec.seed = opt.seed;
  spec.n = opt.n;
  spec.n0 = opt.n0;
  spec.p_treatment = opt.p_treatment;
  spec.p_race = opt.p_race;
  spec.age_mean = opt.age_mean;
  spec.age_sd = opt.age_sd;
  spec.validate();
  const SimulatedData data = simulate(spec);
  const fs::path out = prepare_out(out_flag, "hpglm_sim");
  write_file_atomic(out / "historical.csv", to_csv(data.historical));
  write_file_atomic(out / "current.csv", to_csv(data.current));

  const Family poisson(FamilyKind::kPoisson);
  const Vector y0 = data.historical.column("y");
  Matrix X0(y0.size(), 4);
  X0.col(0).setOnes();
  X0.col(1) = data.historical.column("treatment");
  X0.col(2) = data.historical.column("race");
  X0.col(3) = data.historical.column("age");
  const HistoricalSummary summary = HistoricalSummary::FromData(poisson, y0, X0);
  write_file_atomic(out / "historical_summary.yaml",
                    format_summary_file({"intercept", "treatment", "race", "age"}, summary));
  write_json(out / "manifest.json", make_manifest("simulate", opt.to_json(), nullptr, opt.seed, {}));
  std::cout << fmt::format("wrote historical.csv ({} rows), current.csv ({} rows) and historical_summary.yaml to {}\n",
                           spec.n0, spec.n, out.string());
  return 0;
}

int cmd_iid(const IidOptions& opt, const std::string& out_flag) {
  const Family family = Family::FromName(opt.family);
  const IidSample sample{opt.n, opt.ybar};
  const Hyperprior hp{opt.lambda0, opt.mu0};
  validate(family, hp);
  const DyPrior dy_post = dy_update(family, sample, DyPrior{opt.lambda, opt.mu0});
  const PosteriorMoments moments = m_posterior_moments(family, sample, opt.lambda, hp);
  const StandardDensity prior_m = hyperprior_standard_form(family, hp);
  const StandardDensity dy_mu = conjugate_mean_density(family, dy_post.lambda, dy_post.m);

  std::string text = fmt::format("family {}, n {}, ybar {}, lambda {}, lambda0 {}, mu0 {}\n", family.name(), opt.n,
                                 opt.ybar, opt.lambda, opt.lambda0, opt.mu0);
  text += fmt::format("hyperprior of m: {}\n", prior_m.describe());
  text += fmt::format("posterior of m: mean {:.6g}, sd {:.6g}\n", moments.mean, std::sqrt(moments.variance));
  text += fmt::format("DY posterior of mu with m = mu0: {} (precision {}, location {:.6g})\n", dy_mu.describe(),
                      dy_post.lambda, dy_post.m);
  json mixture = nullptr;
  try {
    const MixtureApprox mix = limiting_m_posterior(family, sample, opt.lambda, hp);
    mixture = json::array();
    text += "large-lambda approximation of the posterior of m:\n";
    for (std::size_t k = 0; k < mix.components.size(); ++k) {
      text += fmt::format("  weight {:.6g}  {}\n", mix.weights[k], mix.components[k].describe());
      mixture.push_back(json{{"weight", mix.weights[k]}, {"component", mix.components[k].describe()}});
    }
  } catch (const ApproximationUnavailableError& e) {
    text += fmt::format("large-lambda approximation unavailable: {}\n", e.what());
  }
  std::cout << text;
  if (!out_flag.empty()) {
    const fs::path out = prepare_out(out_flag, out_flag);
    json j{{"hyperprior", prior_m.describe()},
           {"m_posterior_mean", moments.mean},
           {"m_posterior_variance", moments.variance},
           {"dy_posterior", {{"lambda", dy_post.lambda}, {"m", dy_post.m}}},
           {"limiting_mixture", mixture}};
    write_json(out / "iid.json", j);
    write_json(out / "manifest.json", make_manifest("iid", opt.to_json(), nullptr, std::nullopt, {}));
  }
  return 0;
}

struct Cell {
  PriorKind prior;
  std::optional<double> lambda;  // absent for the flat baseline
  std::string label;
  std::optional<SummaryRow> row;
  Draws draws;
  std::string status = "ok";
  int exit_status = 0;
};

int cmd_compare(const RunOptions& opt, const ConfigSource& src, const std::string& out_flag) {
  RunConfig base = parse_run_config(src.text, src.dir);
  opt.apply(base.sampler);
  const Design design = load_design(base.data);
  std::string parameter = base.compare.parameter;
  if (parameter.empty()) parameter = design.names.size() > 1 ? design.names[1] : design.names[0];
  if (std::find(design.names.begin(), design.names.end(), parameter) == design.names.end()) {
    throw ConfigError("config: compare.parameter '" + parameter + "' is not a coefficient of the model");
  }

  std::vector<Cell> cells;
  for (PriorKind prior : base.compare.priors) {
    if (prior == PriorKind::kFlat) {
      cells.push_back(Cell{prior, std::nullopt, "flat", {}, {}, "ok", 0});
      continue;
    }
    for (double lambda : base.compare.lambdas) {
      cells.push_back(Cell{prior, lambda, fmt::format("{}_lambda_{}", prior_name(prior), lambda), {}, {}, "ok", 0});
    }
  }

  std::vector<fs::path> inputs;
  std::mutex inputs_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      Cell& cell = cells[k];
      RunConfig cfg = base;
      cfg.prior = cell.prior;
      if (cell.lambda) cfg.lambda = *cell.lambda;
      // In a comparison λ plays the role of a₀ for the power prior.
      cfg.historical.a0.reset();
      cfg.sampler.seed = derive_seed(base.sampler.seed, cell.label);
      try {
        RunResult r = run_analysis(cfg);
        for (const auto& w : r.warnings) warn(cell.label + ": " + w);
        for (const auto& row : r.rows) {
          if (row.name == parameter) cell.row = row;
        }
        cell.draws = std::move(r.draws);
        std::lock_guard lock(inputs_mutex);
        inputs.insert(inputs.end(), r.inputs.begin(), r.inputs.end());
      } catch (const Error& e) {
        cell.status = std::string("failed: ") + e.what();
        cell.exit_status = static_cast<int>(e.exit_status());
      } catch (const std::exception& e) {
        cell.status = std::string("failed: ") + e.what();
        cell.exit_status = static_cast<int>(ExitStatus::kNumeric);
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers =
      std::clamp<std::size_t>(hw / static_cast<unsigned>(std::max(1, base.sampler.n_chains)), 1, cells.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  const fs::path out = prepare_out(out_flag, base.output.dir);
  fs::create_directories(out / "draws");
  std::string csv = "prior,lambda,mean,sd,hpd_lower,hpd_upper,prob_nonpositive,mc_se,ess,status\n";
  std::string text = fmt::format("{} posterior, {} HPD level {}\n", parameter, base.family.name(), base.output.level);
  text += fmt::format("{:<6} {:>7} {:>10} {:>10} {:>10} {:>10} {:>8} {:>10} {:>8}  {}\n", "prior", "lambda", "mean",
                      "sd", "hpd_lo", "hpd_hi", "P(<=0)", "mc_se", "ess", "status");
  json rows = json::array();
  int status = 0;
  for (const Cell& cell : cells) {
    const std::string lam = cell.lambda ? format_double(*cell.lambda) : "";
    if (cell.row) {
      const SummaryRow& r = *cell.row;
      csv += fmt::format("{},{},{},{},{},{},{},{},{},ok\n", prior_name(cell.prior), lam, format_double(r.mean),
                         format_double(r.sd), format_double(r.hpd_lower), format_double(r.hpd_upper),
                         format_double(r.prob_nonpositive), format_double(r.mc_se), format_double(r.ess));
      text += fmt::format("{:<6} {:>7} {:>10.5f} {:>10.5f} {:>10.5f} {:>10.5f} {:>8.4f} {:>10.2e} {:>8.0f}  ok\n",
                          prior_name(cell.prior), cell.lambda ? fmt::format("{}", *cell.lambda) : "-", r.mean, r.sd,
                          r.hpd_lower, r.hpd_upper, r.prob_nonpositive, r.mc_se, r.ess);
      json j = row_json(r);
      j["prior"] = prior_name(cell.prior);
      j["lambda"] = optional_json(cell.lambda);
      j["status"] = "ok";
      rows.push_back(j);
      write_file_atomic(out / "draws" / (cell.label + ".csv"), draws_csv(cell.draws, true));
    } else {
      std::string message = cell.status;
      std::replace(message.begin(), message.end(), ',', ';');
      std::replace(message.begin(), message.end(), '\n', ' ');
      csv += fmt::format("{},{},,,,,,,,{}\n", prior_name(cell.prior), lam, message);
      text += fmt::format("{:<6} {:>7}  {}\n", prior_name(cell.prior), cell.lambda ? fmt::format("{}", *cell.lambda) : "-",
                          cell.status);
      rows.push_back(json{{"prior", prior_name(cell.prior)}, {"lambda", optional_json(cell.lambda)}, {"status", cell.status}});
      std::cerr << "error: " << cell.label << ": " << cell.status << '\n';
      if (status == 0) status = cell.exit_status;
    }
  }

  // Maximum likelihood reference on the current data.
  json mle = nullptr;
  try {
    const MleFit fit = mle_with_se(base.family, design.y, design.X);
    const auto j = std::find(design.names.begin(), design.names.end(), parameter) - design.names.begin();
    mle = json{{"estimate", fit.fit.beta_hat[j]}, {"se", fit.standard_errors[j]}};
    text += fmt::format("maximum likelihood on the current data: {:.5f} (se {:.5f})\n", fit.fit.beta_hat[j],
                        fit.standard_errors[j]);
  } catch (const NumericError& e) {
    text += fmt::format("maximum likelihood on the current data: unavailable ({})\n", e.what());
  }

  write_file_atomic(out / "comparison.csv", csv);
  write_file_atomic(out / "comparison.txt", text);
  write_json(out / "comparison.json", json{{"parameter", parameter},
                                           {"family", base.family.name()},
                                           {"level", base.output.level},
                                           {"seed", base.sampler.seed},
                                           {"cells", rows},
                                           {"mle", mle}});
  inputs.insert(inputs.begin(), base.data.path);
  std::sort(inputs.begin(), inputs.end());
  write_json(out / "manifest.json", make_manifest("compare", opt.to_json(), &src, base.sampler.seed, inputs));
  std::cout << text;
  return status;
}

void add_run_options(CLI::App* sub, RunOptions& o, std::string& manifest, std::string& out, bool sampler) {
  sub->add_option("-c,--config", o.config, "run configuration (YAML)");
  sub->add_option("--manifest", manifest, "rerun from a manifest.json");
  sub->add_option("-o,--out", out, "output directory (default: output.dir of the config)");
  if (!sampler) return;
  sub->add_option("--seed", o.seed, "override sampler.seed");
  sub->add_option("--chains", o.chains, "override sampler.chains");
  sub->add_option("--warmup", o.warmup, "override sampler.warmup");
  sub->add_option("--keep", o.keep, "override sampler.keep (draws kept per chain)");
  sub->add_option("--algorithm", o.algorithm, "override sampler.algorithm (adaptive_rw, hmc, hmc_fd)");
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Bayesian GLMs with the hierarchical prediction prior"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RunOptions fit_opt, elicit_opt, compare_opt;
  SimOptions sim_opt;
  IidOptions iid_opt;
  std::string manifest, out;

  auto* fit = app.add_subcommand("fit", "fit one model and write draws, summary and manifest");
  add_run_options(fit, fit_opt, manifest, out, true);
  auto* elicit = app.add_subcommand("elicit", "derive mu0 and lambda0 for each row from a historical summary");
  add_run_options(elicit, elicit_opt, manifest, out, false);
  auto* compare = app.add_subcommand("compare", "run several priors over a lambda grid on the same data");
  add_run_options(compare, compare_opt, manifest, out, true);

  auto* sim = app.add_subcommand("simulate", "simulate historical and current Poisson trial data");
  sim->add_option("--scenario", sim_opt.scenario, "compatible or incompatible")
      ->check(CLI::IsMember({"compatible", "incompatible"}));
  sim->add_option("--seed", sim_opt.seed);
  sim->add_option("--n", sim_opt.n, "current sample size");
  sim->add_option("--n0", sim_opt.n0, "historical sample size");
  sim->add_option("--p-treatment", sim_opt.p_treatment);
  sim->add_option("--p-race", sim_opt.p_race);
  sim->add_option("--age-mean", sim_opt.age_mean);
  sim->add_option("--age-sd", sim_opt.age_sd);
  sim->add_option("--manifest", manifest, "rerun from a manifest.json");
  sim->add_option("-o,--out", out, "output directory (default hpglm_sim)");

  auto* iid = app.add_subcommand("iid", "posterior of the common mean m for i.i.d. data");
  iid->add_option("--family", iid_opt.family, "bernoulli, poisson, normal or gamma");
  iid->add_option("--n", iid_opt.n);
  iid->add_option("--ybar", iid_opt.ybar);
  iid->add_option("--lambda", iid_opt.lambda);
  iid->add_option("--lambda0", iid_opt.lambda0);
  iid->add_option("--mu0", iid_opt.mu0);
  iid->add_option("--manifest", manifest, "rerun from a manifest.json");
  iid->add_option("-o,--out", out, "write iid.json and manifest.json here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitStatus::kConfig);
  }

  try {
    auto run_with = [&](const std::string& command, RunOptions& o, auto&& body) {
      if (!manifest.empty()) {
        const Manifest m = Manifest::Load(manifest, command);
        RunOptions replay;
        replay.from_json(m.body.at("options"));
        return body(replay, m.config());
      }
      return body(o, read_config(o.config));
    };
    if (*fit) {
      return run_with("fit", fit_opt, [&](const RunOptions& o, const ConfigSource& s) { return cmd_fit(o, s, out); });
    }
    if (*elicit) {
      return run_with("elicit", elicit_opt,
                      [&](const RunOptions& o, const ConfigSource& s) { return cmd_elicit(o, s, out); });
    }
    if (*compare) {
      return run_with("compare", compare_opt,
                      [&](const RunOptions& o, const ConfigSource& s) { return cmd_compare(o, s, out); });
    }
    if (*sim) {
      if (!manifest.empty()) sim_opt.from_json(Manifest::Load(manifest, "simulate").body.at("options"));
      return cmd_simulate(sim_opt, out);
    }
    if (*iid) {
      if (!manifest.empty()) iid_opt.from_json(Manifest::Load(manifest, "iid").body.at("options"));
      if (iid_opt.family.empty()) throw ConfigError("iid: --family is required");
      return cmd_iid(iid_opt, out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_status());
  } catch (const json::exception& e) {
    std::cerr << "error: malformed manifest: " << e.what() << '\n';
    return static_cast<int>(ExitStatus::kConfig);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitStatus::kData);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitStatus::kNumeric);
  }
  return 0;
}

}  // namespace hpglm
