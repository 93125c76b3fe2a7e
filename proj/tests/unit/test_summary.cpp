#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "hpglm/errors.hpp"
#include "hpglm/summary.hpp"

using namespace hpglm;

namespace {

Draws make_draws(const std::vector<Matrix>& chains) {
  Draws d;
  d.chains = chains;
  for (Eigen::Index j = 0; j < chains.front().cols(); ++j) d.names.push_back("b" + std::to_string(j));
  return d;
}

}  // namespace

TEST_CASE("HPD of known distributions") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> expo(1.0);
  Vector z(1000000), e(1000000);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z[i] = normal(rng);
    e[i] = expo(rng);
  }
  const Interval hz = hpd_interval(z, 0.95);
  // The width is sharply determined; the window's location wanders on the
  // N^(-1/3) scale because the width is flat near its minimum.
  CHECK(std::abs((hz.upper - hz.lower) - 2.0 * 1.959964) < 0.01);
  CHECK(std::abs(hz.lower + 1.959964) < 0.03);
  CHECK(std::abs(hz.upper - 1.959964) < 0.03);
  std::vector<double> sorted(z.data(), z.data() + z.size());
  std::nth_element(sorted.begin(), sorted.begin() + 500000, sorted.end());
  CHECK(std::abs(0.5 * (hz.lower + hz.upper) - sorted[500000]) < 0.03);

  const Interval he = hpd_interval(e, 0.95);
  CHECK(he.lower < 0.001);
  CHECK(std::abs(he.upper - (-std::log(0.05))) < 0.02);

  CHECK_THROWS_AS(hpd_interval(Vector::Ones(99), 0.9), InsufficientDrawsError);
}

TEST_CASE("HPD is never wider than the equal-tailed interval") {
  std::mt19937_64 rng(13);
  std::gamma_distribution<double> g(0.7);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 200; ++rep) {
    Vector x(150 + rep * 7);
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rep % 2 ? g(rng) : normal(rng) * (1 + rep % 5);
    const double level = 0.5 + 0.45 * (rep % 10) / 9.0;
    const Interval h = hpd_interval(x, level);
    const Interval q = equal_tailed_interval(x, level);
    CHECK(h.upper - h.lower <= q.upper - q.lower + 1e-12);
    CHECK(h.lower < h.upper);
  }
}

TEST_CASE("summarize rows") {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> normal(0.5, 1.0);
  std::vector<Matrix> chains(3, Matrix(1000, 2));
  for (auto& c : chains) {
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      c(i, 0) = normal(rng);
      c(i, 1) = 4.0;
    }
  }
  Draws d = make_draws(chains);
  const auto rows = summarize(d, 0.95);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].name == "b0");
  CHECK(std::abs(rows[0].mean - 0.5) < 0.1);
  CHECK(std::abs(rows[0].prob_nonpositive - 0.3085) < 0.03);
  CHECK(rows[0].mc_se == doctest::Approx(rows[0].sd / std::sqrt(rows[0].ess)));
  CHECK_FALSE(rows[0].insufficient_variation);
  CHECK(rows[1].insufficient_variation);
  CHECK(rows[1].mean == 4.0);
  CHECK(rows[1].sd == 0.0);
  CHECK(rows[1].hpd_lower == 4.0);

  // Chain order does not matter.
  std::vector<Matrix> swapped{chains[2], chains[0], chains[1]};
  const auto other = summarize(make_draws(swapped), 0.95);
  CHECK(other[0].mean == rows[0].mean);
  CHECK(other[0].sd == rows[0].sd);
  CHECK(other[0].hpd_lower == rows[0].hpd_lower);
  CHECK(other[0].hpd_upper == rows[0].hpd_upper);
  CHECK(other[0].prob_nonpositive == rows[0].prob_nonpositive);
  CHECK(other[0].ess == doctest::Approx(rows[0].ess).epsilon(1e-10));

  d.n_primary = 1;
  CHECK(summarize(d).size() == 1);
  CHECK(summarize(d, 0.9, SummaryScope::kAll).size() == 2);
  const std::string table = format_summary_table(rows, 0.95);
  CHECK(table.find("95% HPD") != std::string::npos);
  CHECK(table.find("[no variation]") != std::string::npos);
}

TEST_CASE("quantile interval of standard normal draws is close to +-1.96") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  Vector x(1000000);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = z(rng);
  const Interval q = quantile_interval(x, 0.95);
  CHECK(q.lower == doctest::Approx(-1.959964).epsilon(0.005));
  CHECK(q.upper == doctest::Approx(1.959964).epsilon(0.005));
  Vector small(5);
  small << 4, 0, 3, 1, 2;
  const Interval s = quantile_interval(small, 0.5);
  CHECK(s.lower == doctest::Approx(1.0));
  CHECK(s.upper == doctest::Approx(3.0));
}
