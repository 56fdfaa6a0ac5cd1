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

#include "she2d/core.hpp"

#include <cmath>
#include <random>

#include "gtest/gtest.h"
#include "she2d/errors.hpp"

namespace she2d {
namespace {

TEST(LipBoundTest, KnownValues) {
  EXPECT_NEAR(lip_bound(0.0, 1.0), 0.28209479177387814, 1e-15);  // 1/sqrt(4 pi)
  EXPECT_NEAR(lip_bound(2.0, 1.0), 0.3076359, 5e-7);
  EXPECT_NEAR(lip_bound(2.0, 2.4), 2.34622, 5e-6);
  EXPECT_NEAR(lip_bound(2.0, 2.0), 0.935932, 5e-7);
  EXPECT_EQ(lip_bound(1.0, 0.0), 0.0);
}

TEST(LipBoundTest, SingularWhenQReachesInverseCoupling) {
  EXPECT_THROW(lip_bound(inverse_coupling(2.0), 2.0), NumericalError);
}

TEST(LipBoundTest, SupercriticalBetaRejected) {
  EXPECT_THROW(lip_bound(0.0, 2.6), SupercriticalError);
  EXPECT_THROW(lip_bound(0.0, kCriticalBeta), SupercriticalError);
  EXPECT_NO_THROW(lip_bound(0.0, 2.5));
  EXPECT_THROW(require_subcritical(-1.0), ValidationError);
}

TEST(LipBoundTest, SupercriticalMessageNamesTheBound) {
  try {
    require_subcritical(3.0);
    FAIL() << "expected SupercriticalError";
  } catch (const SupercriticalError& e) {
    EXPECT_NE(std::string(e.what()).find("sqrt(2*pi)"), std::string::npos);
  }
}

TEST(NormRateTest, LinearBetaOne) {
  EXPECT_NEAR(norm_rate(1.0), 3.3642020, 5e-7);
  EXPECT_EQ(norm_rate(0.0), 0.0);
}

TEST(NonlinearityTest, Linear) {
  const auto nl = Nonlinearity::linear(1.5);
  EXPECT_EQ(nl(0.0), 0.0);
  EXPECT_DOUBLE_EQ(nl(2.0), 3.0);
  EXPECT_EQ(nl.kind(), NonlinearityKind::Linear);
  EXPECT_THROW(nl(-0.1), DomainError);
}

TEST(NonlinearityTest, Saturating) {
  const auto nl = Nonlinearity::saturating(1.0);
  EXPECT_EQ(nl(0.0), 0.0);
  EXPECT_NEAR(nl(1.0), 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_LT(nl(50.0), 1.0 + 1e-15);
}

TEST(NonlinearityTest, TableInterpolatesAndSaturates) {
  const auto nl = Nonlinearity::table({{0.0, 0.0}, {1.0, 2.0}, {3.0, 3.0}});
  EXPECT_DOUBLE_EQ(nl.beta(), 2.0);
  EXPECT_DOUBLE_EQ(nl(0.5), 1.0);
  EXPECT_DOUBLE_EQ(nl(2.0), 2.5);
  EXPECT_DOUBLE_EQ(nl(10.0), 3.0);
}

TEST(NonlinearityTest, TableValidation) {
  EXPECT_THROW(Nonlinearity::table({{0.0, 0.1}, {1.0, 1.0}}), ValidationError);
  EXPECT_THROW(Nonlinearity::table({{0.0, 0.0}, {0.0, 1.0}}), ValidationError);
  EXPECT_THROW(Nonlinearity::table({{0.0, 0.0}}), ValidationError);
  EXPECT_THROW(Nonlinearity::table({{0.0, 0.0}, {1.0, 3.0}}), SupercriticalError);
}

TEST(NonlinearityTest, LipschitzOnRandomPairs) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  const Nonlinearity all[] = {Nonlinearity::linear(1.0), Nonlinearity::saturating(2.0),
                              Nonlinearity::table({{0.0, 0.0}, {0.5, 1.0}, {2.0, 1.2}})};
  for (const auto& nl : all) {
    for (int i = 0; i < 1000; ++i) {
      const double x = u(gen), y = u(gen);
      EXPECT_LE(std::abs(nl(x) - nl(y)), nl.beta() * std::abs(x - y) * (1 + 1e-12) + 1e-15);
    }
  }
}

TEST(NonlinearityTest, KindNamesRoundTrip) {
  for (auto k : {NonlinearityKind::Linear, NonlinearityKind::Saturating,
                 NonlinearityKind::PiecewiseLinearTable}) {
    EXPECT_EQ(nonlinearity_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(nonlinearity_kind_from_string("cubic"), ConfigError);
}

TEST(GridSpecTest, DefaultNodes) {
  GridSpec spec;
  EXPECT_NO_THROW(spec.validate());
  EXPECT_EQ(spec.q_nodes().size(), 41u);
  EXPECT_EQ(spec.b_nodes().size(), 41u);
  EXPECT_EQ(spec.q_nodes().back(), 2.0);
  EXPECT_EQ(spec.b_nodes().back(), 4.0);
}

TEST(GridSpecTest, Validation) {
  EXPECT_THROW((GridSpec{0.2, 4.0, 0.1}).validate(), ConfigError);
  EXPECT_THROW((GridSpec{0.03, 4.0, 0.1}).validate(), ConfigError);
  EXPECT_THROW((GridSpec{0.05, 4.0, 0.3}).validate(), ConfigError);
  EXPECT_THROW((GridSpec{0.05, -1.0, 0.1}).validate(), ConfigError);
  EXPECT_THROW((GridSpec{0.05, 4.0, 0.1}).validate_for(2.0), ConfigError);
  EXPECT_NO_THROW((GridSpec{0.05, 4.0, 0.1}).validate_for(1.0));
}

DecouplingGrid linear_grid(double beta, GridSpec spec = {}) {
  return DecouplingGrid::from_function(
      spec, beta, [beta](double q, double b) { return b * lip_bound(q, beta); });
}

TEST(DecouplingGridTest, ShapeChecked) {
  EXPECT_THROW(DecouplingGrid({0.0, 1.0}, {0.0, 1.0}, {0.0, 0.0, 0.0}, 1.0), ShapeError);
}

TEST(DecouplingGridTest, LinearGridSatisfiesInvariants) {
  EXPECT_TRUE(linear_grid(1.0).invariant_violations().empty());
}

TEST(DecouplingGridTest, InvariantViolationsReported) {
  auto g = linear_grid(1.0);
  g.at(3, 0) = 0.1;
  g.at(4, 5) = -1.0;
  g.at(5, 10) = 5.0;
  EXPECT_GE(g.invariant_violations().size(), 3u);
}

TEST(JEvalTest, ReproducesNodesAndInterpolates) {
  const auto g = linear_grid(1.0);
  EXPECT_DOUBLE_EQ(j_eval(g, 0.5, 1.0), g.at(10, 10));
  // Linear in b, so interpolation in b is exact.
  EXPECT_NEAR(j_eval(g, 1.0, 1.234), 1.234 * lip_bound(1.0, 1.0), 1e-12);
  // Interpolation in q of a convex function stays within q_step^2 curvature.
  EXPECT_NEAR(j_eval(g, 1.025, 2.0), 2.0 * lip_bound(1.025, 1.0), 1e-5);
}

TEST(JEvalTest, TailExtrapolationIsCappedAndFloored) {
  const auto g = linear_grid(1.0);
  EXPECT_NEAR(j_eval(g, 2.0, 10.0), 10.0 * lip_bound(2.0, 1.0), 1e-12);
  // Steeper-than-bound tail slopes are capped.
  auto steep = DecouplingGrid::from_function(GridSpec{}, 1.0, [](double q, double b) {
    return b >= 3.95 ? 2.0 * b * lip_bound(q, 1.0) - 3.95 * lip_bound(q, 1.0)
                     : b * lip_bound(q, 1.0);
  });
  const double at_max = steep.at(0, steep.nb() - 1);
  EXPECT_NEAR(j_eval(steep, 0.0, 5.0), at_max + lip_bound(0.0, 1.0), 1e-12);
  // Decreasing tail floored at zero.
  auto falling = DecouplingGrid::from_function(GridSpec{}, 1.0, [](double, double b) {
    return b <= 3.9 ? 0.01 * b : 0.039 - 0.01 * (b - 3.9);
  });
  EXPECT_EQ(j_eval(falling, 0.0, 100.0), 0.0);
}

TEST(JEvalTest, DomainErrors) {
  const auto g = linear_grid(1.0);
  EXPECT_THROW(j_eval(g, 2.5, 1.0), DomainError);
  EXPECT_THROW(j_eval(g, 1.0, -1.0), DomainError);
}

TEST(GridRowTest, MatchesJEval) {
  const auto g = DecouplingGrid::from_function(
      GridSpec{}, 1.0, [](double q, double b) { return std::sqrt(b) * 0.2 * (1 + q * 0.1); });
  for (double q : {0.0, 0.37, 1.5, 2.0}) {
    const GridRow row = g.row_at(q);
    for (double b : {0.0, 0.05, 1.33, 3.99, 4.0, 6.5}) {
      EXPECT_NEAR(row(b), j_eval(g, q, b), 1e-14) << q << " " << b;
    }
  }
}

TEST(YNormTest, WorkedExample) {
  const auto g1 = DecouplingGrid::zeros(GridSpec{}, 1.0);
  auto g2 = g1;
  const std::size_t last = g2.nq() - 1;
  for (std::size_t j = 0; j < g2.nb(); ++j) g2.at(last, j) = 0.1 * g2.b_nodes()[j];
  EXPECT_NEAR(y_norm_distance(g1, g2), 1.19644e-4, 5e-9);
}

TEST(YNormTest, MetricProperties) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random_grid = [&] {
    return DecouplingGrid::from_function(GridSpec{}, 1.0,
                                         [&](double, double b) { return b * u(gen); });
  };
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_grid(), b = random_grid(), c = random_grid();
    EXPECT_EQ(y_norm_distance(a, a), 0.0);
    EXPECT_EQ(y_norm_distance(a, b), y_norm_distance(b, a));
    EXPECT_LE(y_norm_distance(a, c), y_norm_distance(a, b) + y_norm_distance(b, c) + 1e-15);
    EXPECT_GE(y_norm_distance(a, b), 0.0);
  }
}

TEST(YNormTest, ShapeMismatch) {
  const auto g1 = DecouplingGrid::zeros(GridSpec{}, 1.0);
  const auto g2 = DecouplingGrid::zeros(GridSpec{0.1, 4.0, 0.1}, 1.0);
  EXPECT_THROW(y_norm_distance(g1, g2), ShapeError);
  const auto g3 = DecouplingGrid::zeros(GridSpec{}, 0.5);
  EXPECT_THROW(y_norm_distance(g1, g3), ShapeError);
}

TEST(MaxSlopesTest, LinearGridHitsBound) {
  const auto g = linear_grid(1.0);
  const auto slopes = max_b_slopes(g);
  for (std::size_t i = 0; i < g.nq(); ++i) {
    EXPECT_NEAR(slopes[i], lip_bound(g.q_nodes()[i], 1.0), 1e-12);
  }
}

TEST(ResampleTest, LinearGridResamplesExactlyInB) {
  const auto g = linear_grid(1.0, GridSpec{0.01, 8.0, 0.02});
  const auto r = g.resampled(GridSpec{}.q_nodes(), GridSpec{}.b_nodes());
  const auto ref = linear_grid(1.0);
  for (std::size_t k = 0; k < r.values().size(); ++k) {
    EXPECT_NEAR(r.values()[k], ref.values()[k], 1e-12);
  }
}

}  // namespace
}  // namespace she2d
