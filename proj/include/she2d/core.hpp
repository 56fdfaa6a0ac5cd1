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

// Domain types shared by every solver: the nonlinearity sigma, the tabulated
// decoupling function J(q, b) and the weighted sup-norm that controls the
// Picard iteration.

#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace she2d {

inline constexpr double kPi = std::numbers::pi;
/// Critical Lipschitz constant; every solver requires beta strictly below.
inline constexpr double kCriticalBeta = 2.5066282746310002;  // sqrt(2*pi)
/// Largest macroscopic time on which J is defined.
inline constexpr double kMaxQ = 2.0;
/// Relative slack of the discrete Lipschitz invariant of DecouplingGrid.
inline constexpr double kGridLipschitzTol = 0.02;

/// 4*pi/beta^2, the quantity that appears in every closed form. Infinite
/// for beta = 0.
double inverse_coupling(double beta);

/// Throws SupercriticalError unless 0 <= beta < sqrt(2*pi).
void require_subcritical(double beta);

/// Lipschitz-constant bound (4*pi/beta^2 - q)^{-1/2} of J(q, .).
double lip_bound(double q, double beta);

/// Weight exponent R(beta) = 2 beta^2 (c / (c - 2))^3 with c = 4*pi/beta^2.
double norm_rate(double beta);

enum class NonlinearityKind { Linear, Saturating, PiecewiseLinearTable };

/// The nonlinearity sigma: [0, inf) -> [0, inf), sigma(0) = 0, Lipschitz
/// with constant beta < sqrt(2*pi). Immutable after construction.
class Nonlinearity {
 public:
  /// sigma(u) = beta * u.
  static Nonlinearity linear(double beta);
  /// sigma(u) = beta * (1 - exp(-u)).
  static Nonlinearity saturating(double beta);
  /// Piecewise-linear interpolation through (u, sigma) knots, constant past
  /// the last knot. The first knot must be (0, 0). beta is the largest
  /// absolute knot slope.
  static Nonlinearity table(std::vector<std::pair<double, double>> knots);

  NonlinearityKind kind() const { return kind_; }
  double beta() const { return beta_; }
  const std::vector<std::pair<double, double>>& knots() const {
    return knots_;
  }

  /// sigma(u); throws DomainError for u < 0.
  double operator()(double u) const;

 private:
  Nonlinearity(NonlinearityKind kind, double beta,
               std::vector<std::pair<double, double>> knots);

  NonlinearityKind kind_;
  double beta_;
  std::vector<std::pair<double, double>> knots_;
};

double sigma_eval(const Nonlinearity& nl, double u);

std::string to_string(NonlinearityKind kind);
NonlinearityKind nonlinearity_kind_from_string(const std::string& name);

/// Uniform tensor grid over q in [0, 2] and b in [0, b_max].
struct GridSpec {
  double q_step = 0.05;
  double b_max = 4.0;
  double b_step = 0.1;

  /// Checks positivity, q_step <= 0.1 and that both steps divide their
  /// ranges. Throws ConfigError.
  void validate() const;
  /// Additionally requires b_max >= 4 * max_initial_value.
  void validate_for(double max_initial_value) const;

  std::vector<double> q_nodes() const;
  std::vector<double> b_nodes() const;
};

/// One q-slice of J, already interpolated in q, with the tail rule of the
/// grid. Cheap to evaluate; used in the hot loops of the path simulators.
class GridRow {
 public:
  GridRow() = default;
  GridRow(std::vector<double> b_nodes, std::vector<double> values,
          double tail_slope_cap);

  double operator()(double b) const;

  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> b_nodes_;
  std::vector<double> values_;
  double inv_h_ = 0.0;  // > 0 when b nodes are uniform
  double tail_slope_ = 0.0;
};

/// Tabulated decoupling function J(q_i, b_j), row-major over q then b.
class DecouplingGrid {
 public:
  DecouplingGrid() = default;
  DecouplingGrid(std::vector<double> q_nodes, std::vector<double> b_nodes,
                 std::vector<double> values, double beta);

  /// Grid on the nodes of spec, filled with f(q, b).
  template <typename F>
  static DecouplingGrid from_function(const GridSpec& spec, double beta, F f) {
    auto qs = spec.q_nodes();
    auto bs = spec.b_nodes();
    std::vector<double> v;
    v.reserve(qs.size() * bs.size());
    for (double q : qs) {
      for (double b : bs) v.push_back(f(q, b));
    }
    return DecouplingGrid(std::move(qs), std::move(bs), std::move(v), beta);
  }

  /// J identically zero on the nodes of spec.
  static DecouplingGrid zeros(const GridSpec& spec, double beta);

  const std::vector<double>& q_nodes() const { return q_nodes_; }
  const std::vector<double>& b_nodes() const { return b_nodes_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }
  double beta() const { return beta_; }
  std::size_t nq() const { return q_nodes_.size(); }
  std::size_t nb() const { return b_nodes_.size(); }

  double at(std::size_t iq, std::size_t jb) const {
    return values_[iq * b_nodes_.size() + jb];
  }
  double& at(std::size_t iq, std::size_t jb) {
    return values_[iq * b_nodes_.size() + jb];
  }
  std::span<const double> row(std::size_t iq) const {
    return {values_.data() + iq * nb(), nb()};
  }

  bool same_shape(const DecouplingGrid& other) const;

  /// J(q, .) interpolated linearly in q; throws DomainError if q is
  /// outside [q_nodes.front(), q_nodes.back()].
  GridRow row_at(double q) const;

  /// Values of this grid at the given nodes (via j_eval).
  DecouplingGrid resampled(std::vector<double> q_nodes,
                           std::vector<double> b_nodes) const;

  /// Human-readable description of every violated invariant (b = 0 column,
  /// nonnegativity, discrete Lipschitz bound with relative slack tol).
  /// Empty when the grid is valid.
  std::vector<std::string> invariant_violations(
      double tol = kGridLipschitzTol) const;

 private:
  std::vector<double> q_nodes_;
  std::vector<double> b_nodes_;
  std::vector<double> values_;
  double beta_ = 0.0;
};

/// Bilinear evaluation of J inside the grid, linear extrapolation for
/// b > b_max with slope capped at lip_bound(q, beta) and value floored at 0.
double j_eval(const DecouplingGrid& grid, double q, double b);

/// max over nodes with b > 0 of exp(-R(beta) q) |g1 - g2|(q, b) / b.
double y_norm_distance(const DecouplingGrid& g1, const DecouplingGrid& g2);

/// Largest per-q discrete b-slope of the grid, one entry per q node.
std::vector<double> max_b_slopes(const DecouplingGrid& grid);

}  // namespace she2d
