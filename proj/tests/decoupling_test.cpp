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


#include "she2d/decoupling.hpp"

#include <cmath>
#include <limits>

#include "gtest/gtest.h"
#include "she2d/errors.hpp"
#include "she2d/linear_oracle.hpp"
#include "she2d/parallel.hpp"
#include "she2d/stats.hpp"

namespace she2d {
namespace {

const GridSpec kCoarse{0.1, 4.0, 0.5};

PicardParams small_params() {
  PicardParams p;
  p.n_paths_per_node = 2000;
  p.dt = 0.005;
  p.max_iters = 4;
  return p;
}

TEST(PicardParamsTest, Validation) {
  PicardParams p = small_params();
  EXPECT_NO_THROW(p.validate(kCoarse));
  p.dt = 0.02;
  EXPECT_THROW(p.validate(kCoarse), ConfigError);
  p = small_params();
  p.n_paths_per_node = 1;
  EXPECT_THROW(p.validate(kCoarse), ConfigError);
  p = small_params();
  p.damping = 0.0;
  EXPECT_THROW(p.validate(kCoarse), ConfigError);
}

TEST(ProjectToZTest, RepairsEachViolation) {
  auto g = exact_linear_grid(kCoarse, 1.0);
  g.at(2, 0) = 0.3;
  g.at(4, 3) = std::numeric_limits<double>::quiet_NaN();
  g.at(5, 2) = -0.5;
  g.at(6, 8) = 100.0;
  const auto p = project_to_z(g);
  EXPECT_TRUE(p.invariant_violations().empty());
  EXPECT_EQ(p.at(2, 0), 0.0);
  // NaN becomes zero, then is pulled up to within one slope step of its left neighbour.
  const double reach4 = lip_bound(0.4, 1.0) * 0.5;
  EXPECT_NEAR(p.at(4, 3), g.at(4, 2) - reach4, 1e-15);
  EXPECT_NEAR(p.at(6, 8), g.at(6, 7) + lip_bound(0.6, 1.0) * 0.5, 1e-15);
  // Rows without defects move by rounding only; the exact grid sits on the slope bound.
  for (std::size_t j = 0; j < g.nb(); ++j) EXPECT_NEAR(p.at(1, j), g.at(1, j), 1e-14);
}

TEST(ProjectToZTest, Idempotent) {
  auto g = DecouplingGrid::from_function(kCoarse, 2.0, [](double q, double b) {
    return std::sin(3 * b + q) * 2.0;
  });
  const auto once = project_to_z(g);
  const auto twice = project_to_z(once);
  EXPECT_EQ(once.values(), twice.values());
  EXPECT_TRUE(once.invariant_violations().empty());
}

TEST(QmapTest, RejectsInvalidInput) {
  auto g = exact_linear_grid(kCoarse, 1.0);
  g.at(3, 4) = -1.0;
  EXPECT_THROW(qmap_mc(g, Nonlinearity::linear(1.0), kCoarse, small_params(), SeededRng{1, 0}),
               PreconditionError);
  const auto other = exact_linear_grid(GridSpec{}, 1.0);
  EXPECT_THROW(qmap_mc(other, Nonlinearity::linear(1.0), kCoarse, small_params(),
                       SeededRng{1, 0}),
               ShapeError);
}

TEST(QmapTest, LinearFixedPointIsReproduced) {
  const auto exact = exact_linear_grid(kCoarse, 1.0);
  const auto r = qmap_mc_detailed(exact, Nonlinearity::linear(1.0), kCoarse, small_params(),
                                  SeededRng{2024, 0});
  EXPECT_GT(r.noise_floor, 0.0);
  for (std::size_t i = 0; i < exact.nq(); ++i) {
    EXPECT_NEAR(r.grid.at(i, 0), 0.0, 1e-15);
    for (std::size_t j = 1; j < exact.nb(); ++j) {
      const double se = r.std_error[i * exact.nb() + j];
      EXPECT_NEAR(r.grid.at(i, j), exact.at(i, j), 5 * se + 2e-3 * exact.at(i, j))
          << "q=" << exact.q_nodes()[i] << " b=" << exact.b_nodes()[j];
    }
  }
}

TEST(QmapTest, FirstRowIsDeterministic) {
  const auto nl = Nonlinearity::saturating(1.5);
  const auto g0 = project_to_z(DecouplingGrid::from_function(
      kCoarse, 1.5, [&](double, double b) { return nl(b) / (2 * std::sqrt(kPi)); }));
  const auto r = qmap_mc(g0, nl, kCoarse, small_params(), SeededRng{3, 0});
  for (std::size_t j = 0; j < g0.nb(); ++j) {
    EXPECT_NEAR(r.at(0, j), nl(g0.b_nodes()[j]) / (2 * std::sqrt(kPi)), 1e-15);
  }
}

TEST(QmapTest, ThreadCountDoesNotChangeResult) {
  const auto nl = Nonlinearity::saturating(1.0);
  const auto g = exact_linear_grid(kCoarse, 1.0);
  set_thread_count(1);
  const auto a = qmap_mc_detailed(g, nl, kCoarse, small_params(), SeededRng{9, 0});
  set_thread_count(3);
  const auto b = qmap_mc_detailed(g, nl, kCoarse, small_params(), SeededRng{9, 0});
  set_thread_count(1);
  EXPECT_EQ(a.grid.values(), b.grid.values());
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.noise_floor, b.noise_floor);
}

TEST(FixedPointTest, LinearConvergesNearExact) {
  PicardParams p = small_params();
  p.max_iters = 6;
  const auto r = fixed_point_solve(Nonlinearity::linear(1.0), kCoarse, p, SeededRng{5, 0});
  ASSERT_FALSE(r.diagnostics.distances.empty());
  EXPECT_TRUE(r.grid.invariant_violations().empty());
  const auto cmp = compare_grids(r.grid, exact_linear_grid(kCoarse, 1.0), 0.5);
  EXPECT_LT(cmp.sup_rel_error, 0.05);
  const auto j = r.diagnostics.to_json();
  EXPECT_TRUE(j.contains("iterations"));
  EXPECT_TRUE(j.contains("noise_floor"));
  EXPECT_TRUE(j.contains("converged"));
}

TEST(FixedPointTest, WarnsWhenIterationsRunOut) {
  PicardParams p = small_params();
  p.max_iters = 1;
  p.tol = 1e-300;
  const auto r = fixed_point_solve(Nonlinearity::saturating(1.0), kCoarse, p, SeededRng{5, 0});
  EXPECT_FALSE(r.diagnostics.converged);
  EXPECT_FALSE(r.diagnostics.warning.empty());
  EXPECT_EQ(r.diagnostics.iterations, 1);
}

TEST(PdeSchemeTest, Names) {
  EXPECT_EQ(pde_scheme_from_string("explicit"), PdeScheme::Explicit);
  EXPECT_EQ(pde_scheme_from_string("semi-implicit"), PdeScheme::SemiImplicit);
  EXPECT_EQ(pde_scheme_from_string(to_string(PdeScheme::SemiImplicit)), PdeScheme::SemiImplicit);
  EXPECT_THROW(pde_scheme_from_string("crank"), ConfigError);
}

TEST(DirectPdeTest, LinearMatchesExact) {
  const GridSpec spec{0.05, 4.0, 0.05};
  const auto r = direct_pde_solve_detailed(Nonlinearity::linear(1.0), spec, {1e-3});
  const auto cmp = compare_grids(r.grid, exact_linear_grid(spec, 1.0), 0.1);
  EXPECT_LT(cmp.sup_rel_error, 1e-3);
  EXPECT_EQ(r.diagnostics.steps, 2000);
  EXPECT_EQ(r.diagnostics.negative_clamps, 0);
}

TEST(DirectPdeTest, SaturatingStaysInZ) {
  const auto g = direct_pde_solve(Nonlinearity::saturating(2.0), GridSpec{0.05, 8.0, 0.1},
                                  {1e-3});
  EXPECT_TRUE(g.invariant_violations().empty());
}

TEST(DirectPdeTest, ExplicitCflViolationIsNumericalError) {
  EXPECT_THROW(direct_pde_solve(Nonlinearity::linear(1.0), GridSpec{0.05, 4.0, 0.01},
                                {1e-2, PdeScheme::Explicit}),
               NumericalError);
}

TEST(DirectPdeTest, StepMustDivideQStep) {
  EXPECT_THROW(direct_pde_solve(Nonlinearity::linear(1.0), GridSpec{}, {0.03}), ConfigError);
}

}  // namespace
}  // namespace she2d
