// Copyright 2026 The she2d Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "she2d/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gtest/gtest.h"
#include "she2d/errors.hpp"
#include "she2d/linear_oracle.hpp"
#include "she2d/parallel.hpp"
#include "she2d/stats.hpp"

namespace she2d {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SdeParams params(std::int64_t n_paths) {
  SdeParams p;
  p.n_paths = n_paths;
  p.dt = 2e-3;
  return p;
}

TEST(TimeGridTest, MergesBreakpoints) {
  const auto t = time_grid(1.0, 0.1, {0.25, 0.3 + 1e-14});
  EXPECT_EQ(t.front(), 0.0);
  EXPECT_EQ(t.back(), 1.0);
  EXPECT_EQ(t.size(), 12u);
  EXPECT_TRUE(std::is_sorted(t.begin(), t.end()));
  EXPECT_NE(std::find(t.begin(), t.end(), 0.25), t.end());
}

TEST(SdeParamsTest, Validation) {
  SdeParams p = params(10);
  EXPECT_NO_THROW(p.validate());
  p.a = -1.0;
  EXPECT_THROW(p.validate(), DomainError);
  p = params(10);
  p.Q = 2.5;
  EXPECT_THROW(p.validate(), DomainError);
  p = params(10);
  p.record_times = {0.5, 0.2};
  EXPECT_THROW(p.validate(), ConfigError);
  p = params(10);
  p.dt = 0.1;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(SimulateXiTest, ZeroNoiseKeepsInitialValue) {
  const auto zero = DecouplingGrid::zeros(GridSpec{}, 1.0);
  SdeParams p = params(50);
  p.a = 1.7;
  const auto ens = simulate_xi(zero, p, SeededRng{1, 0});
  for (double x : ens.terminal) EXPECT_EQ(x, 1.7);
}

TEST(SimulateXiTest, LinearMomentsMatchLogNormal) {
  const auto exact = exact_linear_grid(GridSpec{}, 1.0);
  SdeParams p = params(20000);
  p.record_times = {1.0};
  const auto ens = simulate_xi(exact, p, SeededRng{77, 0});
  EXPECT_TRUE(std::all_of(ens.terminal.begin(), ens.terminal.end(),
                          [](double x) { return x >= 0.0; }));
  const int orders[] = {1, 2};
  const auto m = empirical_moments(ens.terminal, orders);
  EXPECT_NEAR(m[0].estimate, 1.0, 4 * m[0].std_error);
  EXPECT_NEAR(m[1].estimate, linear_second_moment(1.0, 2.0, 1.0), 4 * m[1].std_error + 2e-3);
  const auto law = lognormal_params(1.0, 2.0, 1.0);
  EXPECT_LT(ks_distance(ens.terminal, [&](double x) { return lognormal_cdf(law, x); }),
            1.63 / std::sqrt(20000.0) + 3e-3);
  ASSERT_EQ(ens.snapshots.size(), ens.n_paths());
}

TEST(SimulateXiTest, IndependentOfThreadCount) {
  const auto exact = exact_linear_grid(GridSpec{}, 1.5);
  SdeParams p = params(600);
  p.record_times = {0.5, 1.5};
  set_thread_count(1);
  const auto a = simulate_xi(exact, p, SeededRng{8, 0});
  set_thread_count(4);
  const auto b = simulate_xi(exact, p, SeededRng{8, 0});
  set_thread_count(1);
  EXPECT_EQ(a.terminal, b.terminal);
  EXPECT_EQ(a.snapshots, b.snapshots);
}

TEST(YProcessTest, ShapeAndStartValue) {
  const auto exact = exact_linear_grid(GridSpec{}, 1.0);
  SdeParams p = params(100);
  p.record_times = {0.0, 1.0, 2.0};
  const auto ens = simulate_xi(exact, p, SeededRng{4, 0});
  const auto y = y_process(exact, ens);
  ASSERT_EQ(y.size(), 300u);
  for (std::size_t path = 0; path < 100; ++path) {
    EXPECT_NEAR(y[path * 3], std::pow(j_eval(exact, 2.0, 1.0), 2), 1e-14);
    EXPECT_GE(y[path * 3 + 2], 0.0);
  }
}

TEST(UltrametricTest, ValidAndInvalidConfigs) {
  EXPECT_FALSE(validate_ultrametric(UltrametricConfig::pair(0.5, 2.0)).has_value());
  UltrametricConfig three{3, {-kInf, 0.2, 0.8, 0.2, -kInf, 0.8, 0.8, 0.8, -kInf}, 2.0};
  EXPECT_FALSE(validate_ultrametric(three).has_value());

  auto asym = three;
  asym.d[1] = 0.3;
  EXPECT_NE(validate_ultrametric(asym)->find("asymmetric"), std::string::npos);

  UltrametricConfig bad_triple{3, {-kInf, 0.2, 0.8, 0.2, -kInf, 0.5, 0.8, 0.5, -kInf}, 2.0};
  EXPECT_NE(validate_ultrametric(bad_triple)->find("ultrametric"), std::string::npos);

  auto diag = three;
  diag.d[4] = 0.0;
  EXPECT_TRUE(validate_ultrametric(diag).has_value());

  UltrametricConfig wrong_size{2, {-kInf, 0.1, 0.1}, 2.0};
  EXPECT_TRUE(validate_ultrametric(wrong_size).has_value());
}

TEST(UltrametricTest, DriverIndex) {
  UltrametricConfig three{3, {-kInf, 0.2, 0.8, 0.2, -kInf, 0.8, 0.8, 0.8, -kInf}, 2.0};
  EXPECT_EQ(driver_index(three, 0, 0.5), 0);
  EXPECT_EQ(driver_index(three, 1, 0.5), 0);
  EXPECT_EQ(driver_index(three, 1, 0.1), 1);
  EXPECT_EQ(driver_index(three, 2, 0.5), 2);
  EXPECT_EQ(driver_index(three, 2, 0.9), 0);
}

TEST(MultipointTest, CoincidentPointsShareThePath) {
  const auto exact = exact_linear_grid(GridSpec{}, 1.0);
  const auto r = simulate_multipoint(exact, UltrametricConfig::pair(0.0, 2.0), params(200),
                                     SeededRng{3, 0});
  ASSERT_EQ(r.coords.size(), 2u);
  EXPECT_EQ(r.coords[0].terminal, r.coords[1].terminal);
}

TEST(MultipointTest, DistantPointsAreUncorrelated) {
  const auto exact = exact_linear_grid(GridSpec{}, 1.0);
  const auto r = simulate_multipoint(exact, UltrametricConfig::pair(1.0, 2.0), params(4000),
                                     SeededRng{3, 0});
  const auto cov = empirical_log_cov(r.coords[0].terminal, r.coords[1].terminal);
  EXPECT_NEAR(cov.cov, 0.0, 4 * cov.std_error);
}

TEST(MultipointTest, BranchTimeInsertedAndCovarianceMatches) {
  const auto exact = exact_linear_grid(GridSpec{}, 1.0);
  const double d = 0.4003;
  const auto r = simulate_multipoint(exact, UltrametricConfig::pair(d, 2.0), params(8000),
                                     SeededRng{12, 0});
  ASSERT_EQ(r.inserted_breakpoints.size(), 1u);
  EXPECT_NEAR(r.inserted_breakpoints[0], 2.0 - 2 * d, 1e-12);
  const auto cov = empirical_log_cov(r.coords[0].terminal, r.coords[1].terminal);
  EXPECT_NEAR(cov.cov, multipoint_cov(2.0, 1.0, d), 4 * cov.std_error + 2e-3);
}

TEST(MultipointTest, QMismatchRejected) {
  const auto exact = exact_linear_grid(GridSpec{}, 1.0);
  EXPECT_THROW(simulate_multipoint(exact, UltrametricConfig::pair(0.5, 1.0), params(10),
                                   SeededRng{1, 0}),
               ConfigError);
}

}  // namespace
}  // namespace she2d
