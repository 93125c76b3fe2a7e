#pragma once

#include <cmath>

namespace hpglm::detail {

// Reentrant log|Γ(x)|; std::lgamma writes the global signgam.
inline double log_gamma(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

inline double log_beta(double a, double b) { return log_gamma(a) + log_gamma(b) - log_gamma(a + b); }

}  // namespace hpglm::detail
