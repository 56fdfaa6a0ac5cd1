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

// Two independent solvers for the decoupling function J:
//
//  * Monte Carlo Picard iteration of the map
//        (Qg)(Q, a) = (1 / 2 sqrt(pi)) (E sigma(Xi^g_{a,Q}(Q))^2)^{1/2},
//        dXi^g(q) = g(Q - q, Xi^g(q)) dB(q),  Xi^g(0) = a,
//    which is a contraction in the weighted norm of y_norm_distance;
//  * finite differences for u = J^2 solving du/dq = (1/2) u u_bb with
//    u(0, b) = sigma(b)^2 / (4 pi).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "she2d/core.hpp"
#include "she2d/rng.hpp"

namespace she2d {

struct PicardParams {
  std::int64_t n_paths_per_node = 20000;
  double dt = 5e-4;
  int max_iters = 15;
  /// Stop once the successive distance falls below tol. tol <= 0 selects
  /// twice the estimated Monte Carlo noise floor.
  double tol = 0.0;
  /// Weight of the new map value in (0, 1].
  double damping = 1.0;

  /// Throws ConfigError; dt must be <= q_step / 10.
  void validate(const GridSpec& spec) const;
};

/// Output of one evaluation of the Monte Carlo map.
struct QmapResult {
  DecouplingGrid grid;
  /// Standard error of each node value (delta method), row-major.
  std::vector<double> std_error;
  /// Estimated weighted-norm distance between two independent evaluations
  /// of the map at the same input: the distance between the estimates from
  /// even- and odd-numbered paths, divided by sqrt(2).
  double noise_floor = 0.0;
};

/// One application of the map on the nodes of g. Paths for every node
/// share Brownian increments (path p uses stream rng.derive(p)), so the
/// result depends only on the seed and the path index, never on threads.
/// Row q = 0 is sigma(a) / (2 sqrt(pi)) exactly.
QmapResult qmap_mc_detailed(const DecouplingGrid& g, const Nonlinearity& nl,
                            const GridSpec& spec, const PicardParams& params,
                            const SeededRng& rng);

DecouplingGrid qmap_mc(const DecouplingGrid& g, const Nonlinearity& nl,
                       const GridSpec& spec, const PicardParams& params,
                       const SeededRng& rng);

/// Projection onto the admissible set: values >= 0, J(q, 0) = 0, and
/// |slope in b| <= lip_bound(q, beta), enforced by an upward sweep in b.
DecouplingGrid project_to_z(const DecouplingGrid& g);

struct FixedPointDiagnostics {
  /// Weighted-norm distance between successive iterates.
  std::vector<double> distances;
  /// Noise floor reported by each map evaluation.
  std::vector<double> noise_floors;
  double noise_floor = 0.0;
  double tol_used = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string warning;

  nlohmann::ordered_json to_json() const;
};

struct FixedPointResult {
  DecouplingGrid grid;
  FixedPointDiagnostics diagnostics;
};

/// Picard iteration from g0(q, b) = sigma(b) / (2 sqrt(pi)):
/// g_{n+1} = project_to_z((1 - damping) g_n + damping Q g_n). Iteration n
/// draws from rng.derive(n). On convergence returns the last iterate;
/// otherwise the iterate after the smallest step, with diagnostics.warning set.
FixedPointResult fixed_point_solve(const Nonlinearity& nl, const GridSpec& spec,
                                   const PicardParams& params,
                                   const SeededRng& rng);

enum class PdeScheme { Explicit, SemiImplicit };

PdeScheme pde_scheme_from_string(const std::string& name);
std::string to_string(PdeScheme scheme);

struct PdeParams {
  double dq = 1e-3;
  PdeScheme scheme = PdeScheme::SemiImplicit;
};

struct PdeDiagnostics {
  std::int64_t steps = 0;
  /// Number of node updates that produced u < 0 and were clamped.
  std::int64_t negative_clamps = 0;

  nlohmann::ordered_json to_json() const;
};

struct PdeResult {
  DecouplingGrid grid;
  PdeDiagnostics diagnostics;
};

/// Marches u = J^2 from q = 0 to q = 2 on the b nodes of spec. dq must
/// divide q_step. The explicit scheme throws NumericalError (naming q)
/// when dq > b_step^2 / (2 max u).
PdeResult direct_pde_solve_detailed(const Nonlinearity& nl, const GridSpec& spec,
                                    const PdeParams& params);

DecouplingGrid direct_pde_solve(const Nonlinearity& nl, const GridSpec& spec,
                                const PdeParams& params);

}  // namespace she2d
