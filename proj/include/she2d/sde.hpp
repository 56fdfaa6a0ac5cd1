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

// Euler-Maruyama simulation of the limiting diffusion
//     dXi(q) = J(Q - q, Xi(q)) dB(q),  Xi(0) = a,
// and of the branching family in which coordinates share a Brownian driver
// until their branch time.

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "she2d/core.hpp"
#include "she2d/rng.hpp"

namespace she2d {

struct SdeParams {
  double a = 1.0;
  double Q = 2.0;
  double dt = 1e-3;
  std::int64_t n_paths = 1000;
  /// Ascending q values in [0, Q] at which the state is recorded.
  std::vector<double> record_times;

  /// Throws ConfigError or DomainError.
  void validate() const;
};

struct PathEnsemble {
  /// One terminal value per path.
  std::vector<double> terminal;
  /// Row-major n_paths x record_times.size(); empty without record times.
  std::vector<double> snapshots;
  SeededRng seed;
  SdeParams params;

  std::size_t n_paths() const { return terminal.size(); }
  double snapshot(std::size_t path, std::size_t k) const {
    return snapshots[path * params.record_times.size() + k];
  }
};

/// Time nodes 0 = q_0 < ... < q_K = Q: multiples of dt plus the given
/// breakpoints, so every breakpoint is hit exactly and the last step is
/// shortened to land on Q.
std::vector<double> time_grid(double Q, double dt,
                              const std::vector<double>& breakpoints);

/// Paths are independent; path p draws from rng.derive(p), one normal per
/// step. Throws DomainError if Q exceeds the q-range of J.
PathEnsemble simulate_xi(const DecouplingGrid& J, const SdeParams& p,
                         const SeededRng& rng);

/// Y(q_k) = J(Q - q_k, X(q_k))^2 for every path and record time, row-major
/// like ens.snapshots.
std::vector<double> y_process(const DecouplingGrid& J, const PathEnsemble& ens);

/// Distance matrix of the branching family. Diagonal entries must be -inf.
struct UltrametricConfig {
  static constexpr double kSelf = -std::numeric_limits<double>::infinity();

  int n = 0;
  /// Row-major n x n.
  std::vector<double> d;
  double Q = 2.0;

  double at(int i, int j) const { return d[static_cast<std::size_t>(i * n + j)]; }
  /// Two coordinates at distance d12.
  static UltrametricConfig pair(double d12, double Q);
};

/// Empty when the configuration is valid, otherwise a description of the
/// first problem found (shape, diagonal, asymmetry or violating triple).
std::optional<std::string> validate_ultrametric(const UltrametricConfig& cfg);

/// Smallest i with d_ij < threshold (0-based). The branching SDE calls it
/// with threshold (Q - q) / 2.
int driver_index(const UltrametricConfig& cfg, int j, double threshold);

struct MultipointResult {
  /// One ensemble per coordinate; entry r of every ensemble belongs to the
  /// same replica.
  std::vector<PathEnsemble> coords;
  /// Branch times Q - 2 d_ij that were added to the uniform time grid.
  std::vector<double> inserted_breakpoints;
};

/// Replica r draws from rng.derive(r): n normals per step, one per driver
/// stream. Coordinate j uses the normal of driver_index(cfg, j, (Q - q)/2)
/// evaluated at the step midpoint, so coordinates sharing a driver move
/// with identical increments.
MultipointResult simulate_multipoint(const DecouplingGrid& J,
                                     const UltrametricConfig& cfg,
                                     const SdeParams& p, const SeededRng& rng);

}  // namespace she2d
