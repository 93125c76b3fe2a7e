#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hpglm/sampler.hpp"

namespace hpglm {

struct Interval {
  double lower;
  double upper;
};

/// Empirical HPD interval (Chen and Shao): the shortest window of ⌈level·N⌉
/// consecutive order statistics. Throws InsufficientDrawsError when N < 100.
Interval hpd_interval(const Vector& draws, double level);

// Equal-tailed window of the same ⌈level·N⌉ order statistics, for comparison.
Interval equal_tailed_interval(const Vector& draws, double level);

// Interpolated sample quantiles at (1 − level)/2 and (1 + level)/2, the usual
// "2.5% and 97.5%" interval.
Interval quantile_interval(const Vector& draws, double level);

struct SummaryRow {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double hpd_lower = 0.0;
  double hpd_upper = 0.0;
  double q_lower = 0.0;  // equal-tailed quantile interval
  double q_upper = 0.0;
  double ess = 0.0;
  std::optional<double> rhat;
  double prob_nonpositive = 0.0;  // fraction of draws ≤ 0
  double mc_se = 0.0;             // sd / sqrt(ess)
  // Set when all draws are equal; the interval is then (c, c).
  bool insufficient_variation = false;
};

enum class SummaryScope { kPrimary, kAll };

/// One row per β coordinate, or per column with kAll. Mean, sd and the HPD
/// come from the sorted pooled draws, so they do not depend on chain order.
std::vector<SummaryRow> summarize(const Draws& draws, double level = 0.95,
                                  SummaryScope scope = SummaryScope::kPrimary);

// Fixed-width text table: name, mean, sd, HPD, quantile interval, P(<=0), ESS, R-hat, MC SE.
std::string format_summary_table(const std::vector<SummaryRow>& rows, double level);

}  // namespace hpglm
