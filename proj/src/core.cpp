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

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "she2d/errors.hpp"

namespace she2d {
namespace {

constexpr double kNodeTol = 1e-9;

// Number of intervals of width step in [0, length]; the step must divide the
// length up to rounding.
std::size_t interval_count(double length, double step, const char* what) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw ConfigError(std::string(what) + " must be positive and finite");
  }
  const double ratio = length / step;
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > kNodeTol * std::max(1.0, ratio)) {
    std::ostringstream msg;
    msg << what << "=" << step << " does not divide the range " << length;
    throw ConfigError(msg.str());
  }
  return static_cast<std::size_t>(n);
}

std::vector<double> uniform_nodes(double length, double step, const char* what) {
  const std::size_t n = interval_count(length, step, what);
  std::vector<double> nodes(n + 1);
  for (std::size_t i = 0; i <= n; ++i) nodes[i] = length * i / n;
  nodes.back() = length;
  return nodes;
}

// Returns 1/h when the nodes are uniformly spaced from 0, else 0.
double uniform_inverse_step(const std::vector<double>& nodes) {
  if (nodes.size() < 2 || nodes.front() != 0.0) return 0.0;
  const double h = nodes.back() / static_cast<double>(nodes.size() - 1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (std::abs(nodes[i] - h * static_cast<double>(i)) > kNodeTol * nodes.back())
      return 0.0;
  }
  return 1.0 / h;
}

bool nodes_match(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > kNodeTol * std::max(1.0, std::abs(a[i])))
      return false;
  }
  return true;
}

// Locates q in ascending nodes: returns (lower index, weight of upper node).
std::pair<std::size_t, double> bracket(const std::vector<double>& nodes,
                                       double x) {
  if (nodes.size() == 1) return {0, 0.0};
  auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - nodes.begin());
  hi = std::clamp<std::size_t>(hi, 1, nodes.size() - 1);
  const std::size_t lo = hi - 1;
  const double w = (x - nodes[lo]) / (nodes[hi] - nodes[lo]);
  return {lo, std::clamp(w, 0.0, 1.0)};
}

}  // namespace

double inverse_coupling(double beta) {
  if (beta == 0.0) return std::numeric_limits<double>::infinity();
  return 4.0 * kPi / (beta * beta);
}

void require_subcritical(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ValidationError("beta must be a nonnegative finite number");
  }
  if (beta >= kCriticalBeta) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "beta=" << beta
        << " is supercritical: the Lipschitz constant must satisfy beta < "
           "sqrt(2*pi) = "
        << kCriticalBeta;
    throw SupercriticalError(msg.str());
  }
}

double lip_bound(double q, double beta) {
  require_subcritical(beta);
  if (beta == 0.0) return 0.0;
  const double c = inverse_coupling(beta);
  if (!(c > q)) {
    std::ostringstream msg;
    msg << "lip_bound singular: 4*pi/beta^2=" << c << " <= q=" << q;
    throw NumericalError(msg.str());
  }
  return 1.0 / std::sqrt(c - q);
}

double norm_rate(double beta) {
  require_subcritical(beta);
  if (beta == 0.0) return 0.0;
  const double c = inverse_coupling(beta);
  const double r = c / (c - kMaxQ);
  return 2.0 * beta * beta * r * r * r;
}

// --- Nonlinearity ----------------------------------------------------------

Nonlinearity::Nonlinearity(NonlinearityKind kind, double beta,
                           std::vector<std::pair<double, double>> knots)
    : kind_(kind), beta_(beta), knots_(std::move(knots)) {
  require_subcritical(beta_);
}

Nonlinearity Nonlinearity::linear(double beta) {
  return Nonlinearity(NonlinearityKind::Linear, beta, {});
}

Nonlinearity Nonlinearity::saturating(double beta) {
  return Nonlinearity(NonlinearityKind::Saturating, beta, {});
}

Nonlinearity Nonlinearity::table(std::vector<std::pair<double, double>> knots) {
  if (knots.size() < 2) {
    throw ValidationError("table nonlinearity needs at least two knots");
  }
  if (knots.front().first != 0.0 || knots.front().second != 0.0) {
    throw ValidationError("table nonlinearity must start at the knot (0, 0)");
  }
  double beta = 0.0;
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const auto [u, s] = knots[i];
    if (!std::isfinite(u) || !std::isfinite(s) || s < 0.0) {
      throw ValidationError("table knots must be finite with sigma >= 0");
    }
    if (i > 0) {
      const double du = u - knots[i - 1].first;
      if (!(du > 0.0)) {
        throw ValidationError("table knots must be strictly ascending in u");
      }
      beta = std::max(beta, std::abs(s - knots[i - 1].second) / du);
    }
  }
  return Nonlinearity(NonlinearityKind::PiecewiseLinearTable, beta,
                      std::move(knots));
}

double Nonlinearity::operator()(double u) const {
  if (!(u >= 0.0)) {
    std::ostringstream msg;
    msg << "sigma is defined on [0, inf); got u=" << u;
    throw DomainError(msg.str());
  }
  switch (kind_) {
    case NonlinearityKind::Linear:
      return beta_ * u;
    case NonlinearityKind::Saturating:
      return beta_ * -std::expm1(-u);
    case NonlinearityKind::PiecewiseLinearTable: {
      if (u >= knots_.back().first) return knots_.back().second;
      auto it = std::upper_bound(
          knots_.begin(), knots_.end(), u,
          [](double x, const auto& knot) { return x < knot.first; });
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      const double w = (u - lo.first) / (hi.first - lo.first);
      return lo.second + w * (hi.second - lo.second);
    }
  }
  return 0.0;
}

double sigma_eval(const Nonlinearity& nl, double u) { return nl(u); }

std::string to_string(NonlinearityKind kind) {
  switch (kind) {
    case NonlinearityKind::Linear:
      return "linear";
    case NonlinearityKind::Saturating:
      return "saturating";
    case NonlinearityKind::PiecewiseLinearTable:
      return "table";
  }
  return "unknown";
}

NonlinearityKind nonlinearity_kind_from_string(const std::string& name) {
  if (name == "linear") return NonlinearityKind::Linear;
  if (name == "saturating") return NonlinearityKind::Saturating;
  if (name == "table") return NonlinearityKind::PiecewiseLinearTable;
  throw ConfigError("unknown nonlinearity kind '" + name +
                    "' (expected linear, saturating or table)");
}

// --- GridSpec --------------------------------------------------------------

void GridSpec::validate() const {
  interval_count(kMaxQ, q_step, "q_step");
  if (q_step > 0.1 + kNodeTol) throw ConfigError("q_step must be <= 0.1");
  if (!(b_max > 0.0) || !std::isfinite(b_max)) {
    throw ConfigError("b_max must be positive and finite");
  }
  interval_count(b_max, b_step, "b_step");
}

void GridSpec::validate_for(double max_initial_value) const {
  validate();
  if (b_max < 4.0 * max_initial_value) {
    std::ostringstream msg;
    msg << "b_max=" << b_max << " must be at least 4x the largest initial value "
        << max_initial_value;
    throw ConfigError(msg.str());
  }
}

std::vector<double> GridSpec::q_nodes() const {
  return uniform_nodes(kMaxQ, q_step, "q_step");
}

std::vector<double> GridSpec::b_nodes() const {
  return uniform_nodes(b_max, b_step, "b_step");
}

// --- GridRow ---------------------------------------------------------------

GridRow::GridRow(std::vector<double> b_nodes, std::vector<double> values,
                 double tail_slope_cap)
    : b_nodes_(std::move(b_nodes)), values_(std::move(values)) {
  inv_h_ = uniform_inverse_step(b_nodes_);
  const std::size_t n = b_nodes_.size();
  if (n >= 2) {
    const double slope =
        (values_[n - 1] - values_[n - 2]) / (b_nodes_[n - 1] - b_nodes_[n - 2]);
    tail_slope_ = std::min(slope, tail_slope_cap);
  }
}

double GridRow::operator()(double b) const {
  const std::size_t n = b_nodes_.size();
  if (b >= b_nodes_.back()) {
    return std::max(0.0, values_.back() + tail_slope_ * (b - b_nodes_.back()));
  }
  if (b <= b_nodes_.front()) return values_.front();
  std::size_t i;
  if (inv_h_ > 0.0) {
    i = std::min(static_cast<std::size_t>(b * inv_h_), n - 2);
  } else {
    i = static_cast<std::size_t>(
            std::upper_bound(b_nodes_.begin(), b_nodes_.end(), b) -
            b_nodes_.begin()) - 1;
  }
  const double w = (b - b_nodes_[i]) / (b_nodes_[i + 1] - b_nodes_[i]);
  return values_[i] + w * (values_[i + 1] - values_[i]);
}

// --- DecouplingGrid --------------------------------------------------------

DecouplingGrid::DecouplingGrid(std::vector<double> q_nodes,
                               std::vector<double> b_nodes,
                               std::vector<double> values, double beta)
    : q_nodes_(std::move(q_nodes)),
      b_nodes_(std::move(b_nodes)),
      values_(std::move(values)),
      beta_(beta) {
  require_subcritical(beta_);
  if (q_nodes_.empty() || b_nodes_.size() < 2) {
    throw ShapeError("grid needs at least one q node and two b nodes");
  }
  if (values_.size() != q_nodes_.size() * b_nodes_.size()) {
    throw ShapeError("grid value count does not match nq*nb");
  }
  if (!std::is_sorted(q_nodes_.begin(), q_nodes_.end()) ||
      std::adjacent_find(q_nodes_.begin(), q_nodes_.end()) != q_nodes_.end() ||
      !std::is_sorted(b_nodes_.begin(), b_nodes_.end()) ||
      std::adjacent_find(b_nodes_.begin(), b_nodes_.end()) != b_nodes_.end()) {
    throw ShapeError("grid nodes must be strictly ascending");
  }
  if (q_nodes_.front() < 0.0 || q_nodes_.back() > kMaxQ + kNodeTol) {
    throw ShapeError("q nodes must lie in [0, 2]");
  }
  if (b_nodes_.front() != 0.0) throw ShapeError("b nodes must start at 0");
}

DecouplingGrid DecouplingGrid::zeros(const GridSpec& spec, double beta) {
  return from_function(spec, beta, [](double, double) { return 0.0; });
}

bool DecouplingGrid::same_shape(const DecouplingGrid& other) const {
  return beta_ == other.beta_ && nodes_match(q_nodes_, other.q_nodes_) &&
         nodes_match(b_nodes_, other.b_nodes_);
}

namespace {

void require_q_in_range(const DecouplingGrid& grid, double q) {
  const double lo = grid.q_nodes().front();
  const double hi = grid.q_nodes().back();
  if (!(q >= lo - kNodeTol && q <= hi + kNodeTol)) {
    std::ostringstream msg;
    msg << "q=" << q << " outside the grid range [" << lo << ", " << hi << "]";
    throw DomainError(msg.str());
  }
}

}  // namespace

GridRow DecouplingGrid::row_at(double q) const {
  require_q_in_range(*this, q);
  const auto [lo, w] = bracket(q_nodes_, q);
  std::vector<double> v(nb());
  const std::size_t hi = std::min(lo + 1, nq() - 1);
  for (std::size_t j = 0; j < nb(); ++j) {
    v[j] = (1.0 - w) * at(lo, j) + w * at(hi, j);
  }
  return GridRow(b_nodes_, std::move(v), lip_bound(q, beta_));
}

DecouplingGrid DecouplingGrid::resampled(std::vector<double> q_nodes,
                                         std::vector<double> b_nodes) const {
  std::vector<double> v;
  v.reserve(q_nodes.size() * b_nodes.size());
  for (double q : q_nodes) {
    const GridRow r = row_at(q);
    for (double b : b_nodes) v.push_back(r(b));
  }
  return DecouplingGrid(std::move(q_nodes), std::move(b_nodes), std::move(v),
                        beta_);
}

std::vector<std::string> DecouplingGrid::invariant_violations(double tol) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < nq(); ++i) {
    if (at(i, 0) != 0.0) {
      std::ostringstream msg;
      msg << "J(q=" << q_nodes_[i] << ", 0) = " << at(i, 0) << " != 0";
      out.push_back(msg.str());
    }
    const double bound = lip_bound(q_nodes_[i], beta_) * (1.0 + tol);
    for (std::size_t j = 0; j < nb(); ++j) {
      const double v = at(i, j);
      if (!(v >= 0.0) || !std::isfinite(v)) {
        std::ostringstream msg;
        msg << "J(q=" << q_nodes_[i] << ", b=" << b_nodes_[j] << ") = " << v
            << " is negative or not finite";
        out.push_back(msg.str());
      }
      if (j + 1 < nb()) {
        const double slope =
            std::abs(at(i, j + 1) - v) / (b_nodes_[j + 1] - b_nodes_[j]);
        if (slope > bound + 1e-15) {
          std::ostringstream msg;
          msg << "slope " << slope << " at q=" << q_nodes_[i]
              << ", b=" << b_nodes_[j] << " exceeds Lipschitz bound " << bound;
          out.push_back(msg.str());
        }
      }
    }
  }
  return out;
}

double j_eval(const DecouplingGrid& grid, double q, double b) {
  require_q_in_range(grid, q);
  if (!(b >= 0.0)) {
    std::ostringstream msg;
    msg << "J is defined for b >= 0; got b=" << b;
    throw DomainError(msg.str());
  }
  const auto& qs = grid.q_nodes();
  const auto& bs = grid.b_nodes();
  const auto [lo, w] = bracket(qs, q);
  const std::size_t hi = std::min(lo + 1, grid.nq() - 1);
  auto blended = [&](std::size_t j) {
    return (1.0 - w) * grid.at(lo, j) + w * grid.at(hi, j);
  };
  const std::size_t n = grid.nb();
  if (b >= bs.back()) {
    const double slope = std::min(
        (blended(n - 1) - blended(n - 2)) / (bs[n - 1] - bs[n - 2]),
        lip_bound(q, grid.beta()));
    return std::max(0.0, blended(n - 1) + slope * (b - bs.back()));
  }
  const auto [jb, wb] = bracket(bs, b);
  return (1.0 - wb) * blended(jb) + wb * blended(jb + 1);
}

double y_norm_distance(const DecouplingGrid& g1, const DecouplingGrid& g2) {
  if (!g1.same_shape(g2)) {
    throw ShapeError("y_norm_distance: grids do not share nodes and beta");
  }
  const double rate = norm_rate(g1.beta());
  double d = 0.0;
  for (std::size_t i = 0; i < g1.nq(); ++i) {
    const double weight = std::exp(-rate * g1.q_nodes()[i]);
    for (std::size_t j = 0; j < g1.nb(); ++j) {
      const double b = g1.b_nodes()[j];
      if (b <= 0.0) continue;
      d = std::max(d, weight * std::abs(g1.at(i, j) - g2.at(i, j)) / b);
    }
  }
  return d;
}

std::vector<double> max_b_slopes(const DecouplingGrid& grid) {
  std::vector<double> out(grid.nq(), 0.0);
  const auto& bs = grid.b_nodes();
  for (std::size_t i = 0; i < grid.nq(); ++i) {
    for (std::size_t j = 0; j + 1 < grid.nb(); ++j) {
      out[i] = std::max(
          out[i], std::abs(grid.at(i, j + 1) - grid.at(i, j)) / (bs[j + 1] - bs[j]));
    }
  }
  return out;
}

}  // namespace she2d
