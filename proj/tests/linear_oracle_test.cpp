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

#include "she2d/linear_oracle.hpp"

#include <cmath>

#include "gtest/gtest.h"
#include "she2d/errors.hpp"

namespace she2d {
namespace {

TEST(LinearOracleTest, FrozenJbarAtBetaTwo) { EXPECT_NEAR(jbar(2.0, 2.0), 0.935932, 5e-7); }

TEST(LinearOracleTest, FrozenValuesAtBetaOne) {
  const LogNormalLaw law = lognormal_params(1.0, 2.0, 1.0);
  EXPECT_NEAR(law.s2, 0.173348, 5e-7);
  EXPECT_NEAR(law.mu_log, -0.0866739, 5e-8);
  EXPECT_NEAR(lognormal_cdf(law, 1.0), 0.582454, 5e-7);
  EXPECT_NEAR(multipoint_cov(2.0, 1.0, 0.5), 0.0904254, 5e-8);
  EXPECT_NEAR(jbar(1.0, 1.0), 0.294037, 5e-7);
  EXPECT_NEAR(linear_second_moment(1.0, 2.0, 1.0), 1.18928, 5e-6);
}

TEST(LinearOracleTest, MeanIsPreserved) {
  for (double beta : {0.5, 1.0, 2.0, 2.4}) {
    for (double a : {0.3, 1.0, 2.0}) {
      EXPECT_NEAR(lognormal_params(a, 2.0, beta).mean(), a, 1e-13 * a);
    }
  }
}

TEST(LinearOracleTest, SecondMomentMatchesLogNormal) {
  const LogNormalLaw law = lognormal_params(1.5, 1.3, 1.7);
  EXPECT_NEAR(std::exp(2 * law.mu_log + 2 * law.s2), linear_second_moment(1.5, 1.3, 1.7),
              1e-12);
}

TEST(LinearOracleTest, CovarianceLimits) {
  const double s2 = lognormal_params(1.0, 2.0, 2.0).s2;
  EXPECT_NEAR(multipoint_cov(2.0, 2.0, 0.0), s2, 1e-14);
  EXPECT_NEAR(multipoint_cov(2.0, 2.0, -1.0), s2, 1e-14);
  EXPECT_EQ(multipoint_cov(2.0, 2.0, 5.0), 0.0);
  EXPECT_GT(multipoint_cov(2.0, 2.0, 0.2), multipoint_cov(2.0, 2.0, 0.7));
}

TEST(LinearOracleTest, ZeroInitialValueIsPointMass) {
  const LogNormalLaw law = lognormal_params(0.0, 2.0, 1.0);
  EXPECT_TRUE(law.degenerate_zero);
  EXPECT_EQ(law.mean(), 0.0);
  EXPECT_EQ(lognormal_cdf(law, 0.0), 1.0);
}

TEST(LinearOracleTest, CdfMatchesDensity) {
  const LogNormalLaw law = lognormal_params(1.0, 2.0, 2.0);
  const int n = 20000;
  const double hi = 2.0, h = hi / n;
  double integral = 0.0;
  for (int i = 0; i < n; ++i) integral += law.pdf((i + 0.5) * h) * h;
  EXPECT_NEAR(integral, lognormal_cdf(law, hi), 1e-7);
}

TEST(LinearOracleTest, ExactGridMatchesLipBound) {
  const auto g = exact_linear_grid(GridSpec{}, 1.0);
  EXPECT_TRUE(g.invariant_violations().empty());
  EXPECT_NEAR(g.at(g.nq() - 1, g.nb() - 1), 4.0 * 0.30763, 4e-5);
}

TEST(LinearOracleTest, InputValidation) {
  EXPECT_THROW(jbar(2.5, 1.0), DomainError);
  EXPECT_THROW(lognormal_params(-1.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(lognormal_params(1.0, 1.0, 3.0), SupercriticalError);
}

TEST(NormalCdfTest, Values) {
  EXPECT_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.0), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(normal_cdf(-8.0), 6.22096057427178e-16, 1e-28);
}

}  // namespace
}  // namespace she2d
