#include "hpglm/summary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "hpglm/errors.hpp"

namespace hpglm {
namespace {

std::vector<double> sorted_copy(const Vector& draws) {
  std::vector<double> x(draws.data(), draws.data() + draws.size());
  std::sort(x.begin(), x.end());
  return x;
}

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("interval level must lie in (0, 1)");
}

Interval hpd_sorted(const std::vector<double>& x, double level) {
  const std::size_t n = x.size();
  if (n < 100) {
    throw InsufficientDrawsError("an HPD interval needs at least 100 draws, got " + std::to_string(n));
  }
  const auto k = static_cast<std::size_t>(std::ceil(level * static_cast<double>(n)));
  std::size_t best = 0;
  double width = x[k - 1] - x[0];
  for (std::size_t i = 1; i + k <= n; ++i) {
    const double w = x[i + k - 1] - x[i];
    if (w < width) {
      width = w;
      best = i;
    }
  }
  return {x[best], x[best + k - 1]};
}

}  // namespace

Interval hpd_interval(const Vector& draws, double level) {
  check_level(level);
  return hpd_sorted(sorted_copy(draws), level);
}

Interval equal_tailed_interval(const Vector& draws, double level) {
  check_level(level);
  const std::vector<double> x = sorted_copy(draws);
  const std::size_t n = x.size();
  if (n < 100) throw InsufficientDrawsError("an interval needs at least 100 draws, got " + std::to_string(n));
  // The same ⌈level·N⌉ order statistics as the HPD window, centred.
  const auto k = static_cast<std::size_t>(std::ceil(level * static_cast<double>(n)));
  const std::size_t lo = (n - k) / 2;
  return {x[lo], x[lo + k - 1]};
}

namespace {

// Linear interpolation between order statistics at position q·(N − 1).
double sorted_quantile(const std::vector<double>& x, double q) {
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= x.size()) return x.back();
  return x[i] + (pos - static_cast<double>(i)) * (x[i + 1] - x[i]);
}

}  // namespace

Interval quantile_interval(const Vector& draws, double level) {
  check_level(level);
  const std::vector<double> x = sorted_copy(draws);
  if (x.empty()) throw InsufficientDrawsError("a quantile interval needs draws");
  return {sorted_quantile(x, 0.5 * (1.0 - level)), sorted_quantile(x, 0.5 * (1.0 + level))};
}

std::vector<SummaryRow> summarize(const Draws& draws, double level, SummaryScope scope) {
  check_level(level);
  Eigen::Index cols = draws.dim();
  if (scope == SummaryScope::kPrimary && draws.n_primary > 0) cols = std::min(cols, draws.n_primary);
  const Matrix all = draws.pooled();
  std::vector<SummaryRow> rows;
  for (Eigen::Index j = 0; j < cols; ++j) {
    SummaryRow row;
    row.name = j < static_cast<Eigen::Index>(draws.names.size()) ? draws.names[static_cast<std::size_t>(j)]
                                                                : "x" + std::to_string(j);
    const std::vector<double> x = sorted_copy(all.col(j));
    const double n = static_cast<double>(x.size());
    row.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - row.mean) * (v - row.mean);
    row.sd = x.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    row.prob_nonpositive =
        static_cast<double>(std::upper_bound(x.begin(), x.end(), 0.0) - x.begin()) / n;
    row.insufficient_variation = x.front() == x.back();
    if (row.insufficient_variation) {
      if (x.size() < 100) throw InsufficientDrawsError("summaries need at least 100 draws");
      row.hpd_lower = row.hpd_upper = x.front();
    } else {
      const Interval hpd = hpd_sorted(x, level);
      row.hpd_lower = hpd.lower;
      row.hpd_upper = hpd.upper;
    }
    row.q_lower = sorted_quantile(x, 0.5 * (1.0 - level));
    row.q_upper = sorted_quantile(x, 0.5 * (1.0 + level));
    const auto chains = draws.coordinate(j);
    row.ess = effective_sample_size(chains);
    row.rhat = split_rhat(chains);
    row.mc_se = row.sd / std::sqrt(row.ess);
    rows.push_back(row);
  }
  return rows;
}

std::string format_summary_table(const std::vector<SummaryRow>& rows, double level) {
  std::ostringstream out;
  const std::string hpd = fmt::format("{:.0f}% HPD", 100.0 * level);
  const std::string eti = fmt::format("{:.0f}% quantiles", 100.0 * level);
  out << fmt::format("{:<14} {:>10} {:>10} {:>23} {:>23} {:>8} {:>9} {:>7} {:>9}\n", "parameter", "mean", "sd", hpd,
                     eti, "P(<=0)", "ESS", "R-hat", "MC SE");
  for (const SummaryRow& r : rows) {
    const std::string interval = fmt::format("({:.4f}, {:.4f})", r.hpd_lower, r.hpd_upper);
    const std::string quantiles = fmt::format("({:.4f}, {:.4f})", r.q_lower, r.q_upper);
    const std::string rhat = r.rhat ? fmt::format("{:.4f}", *r.rhat) : "NA";
    out << fmt::format("{:<14} {:>10.4f} {:>10.4f} {:>23} {:>23} {:>8.4f} {:>9.0f} {:>7} {:>9.5f}{}\n", r.name, r.mean,
                       r.sd, interval, quantiles, r.prob_nonpositive, r.ess, rhat, r.mc_se,
                       r.insufficient_variation ? "  [no variation]" : "");
  }
  return out.str();
}

}  // namespace hpglm
