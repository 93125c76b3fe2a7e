#include "hpglm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <exception>
#include <limits>
#include <random>
#include <thread>

#include <unsupported/Eigen/FFT>

#include "hpglm/errors.hpp"

namespace hpglm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kDivergenceThreshold = 1000.0;

// The model's log density with numeric failures mapped to rejection.
class Target {
 public:
  explicit Target(LogDensity& model) : model_(model) {}

  double operator()(const Vector& x, Vector* grad) {
    try {
      const double value = model_.evaluate(x, grad);
      if (!std::isfinite(value) || (grad != nullptr && !grad->allFinite())) return kNegInf;
      return value;
    } catch (const NumericError&) {
      return kNegInf;
    }
  }

 private:
  LogDensity& model_;
};

// Per-coordinate scale 1/sqrt(−∂²log p/∂xⱼ²) by central differences, 1 where
// the curvature is not usefully negative.
Vector curvature_scales(Target& f, const Vector& x, double fx) {
  Vector sd = Vector::Ones(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-4 * (1.0 + std::abs(x[j]));
    Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const double c = -(f(xp, nullptr) - 2.0 * fx + f(xm, nullptr)) / (h * h);
    if (std::isfinite(c) && c > 1e-10) sd[j] = std::clamp(1.0 / std::sqrt(c), 1e-8, 1e4);
  }
  return sd;
}

struct ChainOutput {
  Matrix kept;
  Vector log_posterior;
  double acceptance = 0.0;
  int divergences = 0;
};

class ChainRecorder {
 public:
  ChainRecorder(const LogDensity& model, const SamplerConfig& cfg)
      : model_(model), thinning_(cfg.thinning), n_warmup_(cfg.n_warmup) {
    out_.kept.resize(cfg.n_keep, static_cast<Eigen::Index>(model.output_names().size()));
    out_.log_posterior.resize(cfg.n_keep);
  }

  // Called once per post-warmup iteration.
  void offer(int iteration, const Vector& x, double lp) {
    const int t = iteration - n_warmup_ + 1;
    if (t % thinning_ != 0) return;
    out_.kept.row(row_) = model_.to_output(x).transpose();
    out_.log_posterior[row_] = lp;
    ++row_;
  }

  ChainOutput& output() { return out_; }

 private:
  const LogDensity& model_;
  int thinning_;
  int n_warmup_;
  Eigen::Index row_ = 0;
  ChainOutput out_;
};

void check_warmup(int chain, long accepted, long proposed) {
  if (proposed > 0 && static_cast<double>(accepted) < 0.001 * static_cast<double>(proposed)) {
    throw StuckChainError("chain " + std::to_string(chain + 1) + " accepted " + std::to_string(accepted) +
                          " of " + std::to_string(proposed) +
                          " warmup proposals; check the initial values and the prior");
  }
}

ChainOutput run_random_walk(LogDensity& model, Target& f, Vector x, const Vector& sd,
                            const SamplerConfig& cfg, int chain, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  ChainRecorder rec(model, cfg);
  const Eigen::Index d = x.size();
  Vector log_scale = (2.4 * sd).array().log();
  double lp = f(x, nullptr);
  long warm_acc = 0, warm_prop = 0, acc = 0, prop = 0;
  const int total = cfg.n_warmup + cfg.n_keep * cfg.thinning;

  for (int it = 0; it < total; ++it) {
    const bool warmup = it < cfg.n_warmup;
    // Robbins–Monro gain; adaptation stops for good at the end of warmup.
    const double gain = std::pow(static_cast<double>(it + 1), -0.6);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double old = x[j];
      x[j] = old + std::exp(log_scale[j]) * normal(rng);
      const double lp_new = f(x, nullptr);
      const double log_ratio = lp_new - lp;
      const bool accepted = lp_new > kNegInf && std::log(uniform(rng)) < log_ratio;
      if (accepted) {
        lp = lp_new;
      } else {
        x[j] = old;
      }
      if (warmup) {
        const double alpha = lp_new > kNegInf ? std::min(1.0, std::exp(std::min(log_ratio, 0.0))) : 0.0;
        log_scale[j] += gain * (alpha - 0.44);
        warm_acc += accepted;
        ++warm_prop;
      } else {
        acc += accepted;
        ++prop;
      }
    }
    if (it + 1 == cfg.n_warmup) check_warmup(chain, warm_acc, warm_prop);
    if (!warmup) rec.offer(it, x, lp);
  }
  ChainOutput& out = rec.output();
  out.acceptance = prop > 0 ? static_cast<double>(acc) / static_cast<double>(prop) : 0.0;
  return std::move(out);
}

// Euclidean metric with kinetic energy ½p′Σp, where Σ approximates the
// posterior covariance.
class Metric {
 public:
  explicit Metric(const Matrix& cov) { set(cov); }

  void set(const Matrix& cov) {
    cov_ = cov;
    Eigen::LLT<Matrix> llt(cov_);
    if (llt.info() != Eigen::Success) {
      cov_ = Matrix(cov.diagonal().cwiseMax(1e-12).asDiagonal());
      llt.compute(cov_);
    }
    chol_ = llt.matrixL();
  }

  Vector momentum(std::mt19937_64& rng, std::normal_distribution<double>& normal) const {
    Vector z(cov_.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    return chol_.transpose().triangularView<Eigen::Upper>().solve(z);
  }

  double kinetic(const Vector& p) const { return 0.5 * p.dot(cov_ * p); }
  Vector velocity(const Vector& p) const { return cov_ * p; }

 private:
  Matrix cov_;
  Matrix chol_;
};

struct PhasePoint {
  Vector q;
  Vector grad;
  double lp = kNegInf;
};

// Returns false as soon as the trajectory leaves the support.
bool leapfrog(Target& f, const Metric& metric, PhasePoint& z, Vector& p, double eps, int steps) {
  for (int l = 0; l < steps; ++l) {
    p += 0.5 * eps * z.grad;
    z.q += eps * metric.velocity(p);
    z.lp = f(z.q, &z.grad);
    if (!(z.lp > kNegInf)) return false;
    p += 0.5 * eps * z.grad;
  }
  return true;
}

class DualAveraging {
 public:
  explicit DualAveraging(double target) : target_(target) {}

  void restart(double eps) {
    mu_ = std::log(10.0 * eps);
    counter_ = 0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
  }

  double update(double accept_stat) {
    ++counter_;
    accept_stat = std::min(1.0, accept_stat);
    const double t = static_cast<double>(counter_);
    const double eta = 1.0 / (t + kT0);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (target_ - accept_stat);
    const double x = mu_ - s_bar_ * std::sqrt(t) / kGamma;
    const double w = std::pow(t, -kKappa);
    x_bar_ = (1.0 - w) * x_bar_ + w * x;
    return std::exp(x);
  }

  double final_step() const { return std::exp(x_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
  double target_;
  double mu_ = 0.0;
  long counter_ = 0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
};

// Doubles or halves eps until a single leapfrog step crosses acceptance 0.8.
double initial_step_size(Target& f, const Metric& metric, const PhasePoint& z, double eps,
                         std::mt19937_64& rng, std::normal_distribution<double>& normal) {
  const double log_target = std::log(0.8);
  int direction = 0;
  for (int attempt = 0; attempt < 100; ++attempt) {
    Vector p = metric.momentum(rng, normal);
    const double h0 = -z.lp + metric.kinetic(p);
    PhasePoint next = z;
    const bool ok = leapfrog(f, metric, next, p, eps, 1);
    const double h1 = ok ? -next.lp + metric.kinetic(p) : std::numeric_limits<double>::infinity();
    double delta = h0 - h1;
    if (std::isnan(delta)) delta = kNegInf;
    if (direction == 0) direction = delta > log_target ? 1 : -1;
    if (direction == 1 && !(delta > log_target)) break;
    if (direction == -1 && !(delta < log_target)) break;
    eps = direction == 1 ? 2.0 * eps : 0.5 * eps;
    if (eps > 1e7 || eps < 1e-14) break;
  }
  return std::clamp(eps, 1e-14, 1e7);
}

// Slow-adaptation windows [start, end) for the metric: an initial buffer, windows
// doubling from a base size, then a terminal buffer for the step size alone.
std::vector<std::pair<int, int>> metric_windows(int n_warmup) {
  std::vector<std::pair<int, int>> windows;
  if (n_warmup < 20) return windows;
  int init = 75, term = 50, base = 25;
  if (init + term + base > n_warmup) {
    init = static_cast<int>(0.15 * n_warmup);
    term = static_cast<int>(0.1 * n_warmup);
    base = n_warmup - init - term;
  }
  const int slow_end = n_warmup - term;
  int start = init;
  int size = base;
  while (start < slow_end) {
    int end = start + size;
    if (end + 2 * size > slow_end) end = slow_end;
    windows.emplace_back(start, end);
    start = end;
    size *= 2;
  }
  return windows;
}

ChainOutput run_hmc(LogDensity& model, Target& f, const Vector& x0, const Vector& sd,
                    const SamplerConfig& cfg, int chain, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  ChainRecorder rec(model, cfg);
  const Eigen::Index d = x0.size();

  Metric metric(Matrix(sd.array().square().matrix().asDiagonal()));
  PhasePoint z;
  z.q = x0;
  z.lp = f(z.q, &z.grad);
  if (!(z.lp > kNegInf)) throw NumericError("initial point has zero posterior density or no gradient");

  double eps = initial_step_size(f, metric, z, 1.0, rng, normal);
  DualAveraging adapt(cfg.target_accept);
  adapt.restart(eps);

  const auto windows = metric_windows(cfg.n_warmup);
  std::size_t window = 0;
  Vector w_mean = Vector::Zero(d);
  Matrix w_m2 = Matrix::Zero(d, d);
  long w_count = 0;

  long warm_acc = 0, acc = 0, kept_iters = 0;
  int divergences = 0;
  const int total = cfg.n_warmup + cfg.n_keep * cfg.thinning;
  for (int it = 0; it < total; ++it) {
    const bool warmup = it < cfg.n_warmup;
    const double eps_used = eps * (1.0 + 0.1 * (2.0 * uniform(rng) - 1.0));
    Vector p = metric.momentum(rng, normal);
    const double h0 = -z.lp + metric.kinetic(p);
    PhasePoint next = z;
    const bool ok = leapfrog(f, metric, next, p, eps_used, cfg.leapfrog_steps);
    double delta = ok ? (-next.lp + metric.kinetic(p)) - h0 : std::numeric_limits<double>::infinity();
    if (std::isnan(delta)) delta = std::numeric_limits<double>::infinity();
    const double accept_prob = std::min(1.0, std::exp(-delta));
    const bool accepted = uniform(rng) < accept_prob;
    if (accepted) z = std::move(next);

    if (warmup) {
      warm_acc += accepted;
      eps = adapt.update(accept_prob);
      if (window < windows.size() && it >= windows[window].first && it < windows[window].second) {
        ++w_count;
        const Vector diff = z.q - w_mean;
        w_mean += diff / static_cast<double>(w_count);
        w_m2.noalias() += diff * (z.q - w_mean).transpose();
        if (it + 1 == windows[window].second) {
          const double n = static_cast<double>(w_count);
          Matrix cov = w_m2 / (n - 1.0);
          cov = (n / (n + 5.0)) * cov + 1e-3 * (5.0 / (n + 5.0)) * Matrix::Identity(d, d);
          metric.set(cov);
          eps = initial_step_size(f, metric, z, eps, rng, normal);
          adapt.restart(eps);
          ++window;
          w_count = 0;
          w_mean.setZero();
          w_m2.setZero();
        }
      }
      if (it + 1 == cfg.n_warmup) {
        eps = adapt.final_step();
        check_warmup(chain, warm_acc, cfg.n_warmup);
      }
    } else {
      acc += accepted;
      ++kept_iters;
      if (!ok || delta > kDivergenceThreshold) ++divergences;
      rec.offer(it, z.q, z.lp);
    }
  }
  ChainOutput& out = rec.output();
  out.acceptance = kept_iters > 0 ? static_cast<double>(acc) / static_cast<double>(kept_iters) : 0.0;
  out.divergences = divergences;
  return std::move(out);
}

ChainOutput run_chain(const LogDensity& prototype, const SamplerConfig& cfg, int chain) {
  std::unique_ptr<LogDensity> model = prototype.clone();
  if (cfg.algorithm == Algorithm::kHmcFd) {
    if (auto* hpp = dynamic_cast<HppPosterior*>(model.get())) hpp->set_gradient_mode(LaplaceGradient::kFiniteDifference);
  }
  const auto lo = static_cast<std::uint32_t>(cfg.seed & 0xffffffffu);
  const auto hi = static_cast<std::uint32_t>(cfg.seed >> 32);
  std::seed_seq seq{lo, hi, static_cast<std::uint32_t>(chain)};
  std::mt19937_64 rng(seq);
  Target f(*model);

  const Vector x0 = model->initial_point();
  const double f0 = f(x0, nullptr);
  if (!(f0 > kNegInf)) throw NumericError("the log posterior is not finite at the initial point");
  const Vector sd = curvature_scales(f, x0, f0);

  // Overdispersed start: up to 30 tries, shrinking the jitter each time.
  std::normal_distribution<double> normal;
  Vector x = x0;
  double spread = 1.0;
  for (int attempt = 0; attempt < 30; ++attempt, spread *= 0.5) {
    Vector cand = x0;
    for (Eigen::Index j = 0; j < cand.size(); ++j) cand[j] += spread * sd[j] * normal(rng);
    Vector g;
    const bool need_grad = cfg.algorithm != Algorithm::kAdaptiveRw;
    if (f(cand, need_grad ? &g : nullptr) > kNegInf) {
      x = cand;
      break;
    }
  }

  if (cfg.algorithm == Algorithm::kAdaptiveRw) return run_random_walk(*model, f, x, sd, cfg, chain, rng);
  return run_hmc(*model, f, x, sd, cfg, chain, rng);
}

// Biased autocovariances Σᵢ (xᵢ − x̄)(xᵢ₊ₜ − x̄)/N for t < N, by FFT.
Vector autocovariance(const Vector& x) {
  const Eigen::Index n = x.size();
  std::size_t m = 1;
  while (m < static_cast<std::size_t>(2 * n)) m <<= 1;
  const double mean = x.mean();
  std::vector<std::complex<double>> in(m, 0.0), freq, back;
  for (Eigen::Index i = 0; i < n; ++i) in[static_cast<std::size_t>(i)] = x[i] - mean;
  Eigen::FFT<double> fft;
  fft.fwd(freq, in);
  for (auto& c : freq) c = std::norm(c);
  fft.inv(back, freq);
  Vector acov(n);
  for (Eigen::Index t = 0; t < n; ++t) acov[t] = back[static_cast<std::size_t>(t)].real() / static_cast<double>(n);
  return acov;
}

void check_equal_lengths(const std::vector<Vector>& chains) {
  if (chains.empty()) throw DimensionError("diagnostics need at least one chain");
  for (const Vector& c : chains) {
    if (c.size() != chains.front().size()) throw DimensionError("diagnostics need chains of equal length");
  }
}

}  // namespace

const char* algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kAdaptiveRw: return "adaptive_rw";
    case Algorithm::kHmc: return "hmc";
    case Algorithm::kHmcFd: return "hmc_fd";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "adaptive_rw") return Algorithm::kAdaptiveRw;
  if (name == "hmc") return Algorithm::kHmc;
  if (name == "hmc_fd") return Algorithm::kHmcFd;
  throw ConfigError("unknown sampler algorithm '" + name + "' (expected adaptive_rw, hmc or hmc_fd)");
}

void SamplerConfig::validate() const {
  if (n_chains < 1) throw ConfigError("sampler: n_chains must be at least 1");
  if (n_warmup < 0) throw ConfigError("sampler: n_warmup must be non-negative");
  if (n_keep < 1) throw ConfigError("sampler: n_keep must be at least 1");
  if (thinning < 1) throw ConfigError("sampler: thinning must be at least 1");
  if (leapfrog_steps < 1) throw ConfigError("sampler: leapfrog_steps must be at least 1");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw ConfigError("sampler: target_accept must lie in (0, 1)");
}

Eigen::Index Draws::total() const {
  Eigen::Index n = 0;
  for (const Matrix& c : chains) n += c.rows();
  return n;
}

Matrix Draws::pooled() const {
  Matrix out(total(), dim());
  Eigen::Index row = 0;
  for (const Matrix& c : chains) {
    out.middleRows(row, c.rows()) = c;
    row += c.rows();
  }
  return out;
}

std::vector<Vector> Draws::coordinate(Eigen::Index j) const {
  std::vector<Vector> out;
  for (const Matrix& c : chains) out.emplace_back(c.col(j));
  return out;
}

Draws sample_posterior(const LogDensity& model, const SamplerConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.n_chains);
  std::vector<ChainOutput> outputs(n);
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  for (std::size_t c = 0; c < n; ++c) {
    threads.emplace_back([&, c]() {
      try {
        outputs[c] = run_chain(model, cfg, static_cast<int>(c));
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  Draws draws;
  draws.names = model.output_names();
  draws.n_primary = model.primary_dim();
  for (auto& out : outputs) {
    draws.chains.push_back(std::move(out.kept));
    draws.log_posterior.push_back(std::move(out.log_posterior));
    draws.acceptance_rate.push_back(out.acceptance);
    draws.divergences.push_back(out.divergences);
  }
  return draws;
}

double effective_sample_size(const std::vector<Vector>& chains) {
  check_equal_lengths(chains);
  const auto m = static_cast<double>(chains.size());
  const Eigen::Index n = chains.front().size();
  const double nd = static_cast<double>(n);
  if (n < 4) return std::numeric_limits<double>::quiet_NaN();

  std::vector<Vector> acov;
  Vector means(chains.size());
  double mean_var = 0.0;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    acov.push_back(autocovariance(chains[c]));
    means[static_cast<Eigen::Index>(c)] = chains[c].mean();
    mean_var += acov.back()[0] * nd / (nd - 1.0);
  }
  mean_var /= m;
  double var_plus = mean_var * (nd - 1.0) / nd;
  if (chains.size() > 1) var_plus += (means.array() - means.mean()).square().sum() / (m - 1.0);
  if (!(var_plus > 0.0)) return std::numeric_limits<double>::quiet_NaN();

  auto rho = [&](Eigen::Index t) {
    double s = 0.0;
    for (const Vector& a : acov) s += a[t];
    return 1.0 - (mean_var - s / m) / var_plus;
  };

  Vector rho_hat = Vector::Zero(n);
  rho_hat[0] = 1.0;
  double even = 1.0;
  double odd = rho(1);
  rho_hat[1] = odd;
  Eigen::Index t = 1;
  while (t < n - 5 && even + odd > 0.0) {
    even = rho(t + 1);
    odd = rho(t + 2);
    if (even + odd >= 0.0) {
      rho_hat[t + 1] = even;
      rho_hat[t + 2] = odd;
    }
    t += 2;
  }
  const Eigen::Index max_t = t;
  if (even > 0.0) rho_hat[max_t + 1] = even;

  // Initial monotone sequence on the pair sums.
  for (t = 1; t <= max_t - 2; t += 2) {
    if (rho_hat[t + 1] + rho_hat[t + 2] > rho_hat[t - 1] + rho_hat[t]) {
      rho_hat[t + 1] = 0.5 * (rho_hat[t - 1] + rho_hat[t]);
      rho_hat[t + 2] = rho_hat[t + 1];
    }
  }
  const double total = m * nd;
  double tau = -1.0 + 2.0 * rho_hat.head(max_t + 1).sum() + rho_hat[max_t + 1];
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

std::optional<double> split_rhat(const std::vector<Vector>& chains) {
  check_equal_lengths(chains);
  const Eigen::Index n = chains.front().size();
  if (n < 4) return std::nullopt;
  const Eigen::Index half = n / 2;
  std::vector<Vector> parts;
  for (const Vector& c : chains) {
    parts.emplace_back(c.head(half));
    parts.emplace_back(c.tail(half));
  }
  const auto m = static_cast<double>(parts.size());
  const double h = static_cast<double>(half);
  Vector means(parts.size());
  double w = 0.0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const double mu = parts[k].mean();
    means[static_cast<Eigen::Index>(k)] = mu;
    w += (parts[k].array() - mu).square().sum() / (h - 1.0);
  }
  w /= m;
  if (!(w > 0.0)) return std::nullopt;
  const double b = h * (means.array() - means.mean()).square().sum() / (m - 1.0);
  const double var_plus = (h - 1.0) / h * w + b / h;
  return std::sqrt(var_plus / w);
}

Diagnostics diagnostics(const Draws& draws) {
  Diagnostics out;
  out.ess.resize(draws.dim());
  for (Eigen::Index j = 0; j < draws.dim(); ++j) {
    const auto chains = draws.coordinate(j);
    out.ess[j] = effective_sample_size(chains);
    out.rhat.push_back(split_rhat(chains));
  }
  return out;
}

}  // namespace hpglm
