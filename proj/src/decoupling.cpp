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

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

#include "she2d/errors.hpp"
#include "she2d/parallel.hpp"

namespace she2d {
namespace {

constexpr std::size_t kPathsPerBlock = 64;
const double kInvTwoSqrtPi = 0.5 / std::sqrt(kPi);

std::size_t step_count(double horizon, double dt) {
  return static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
}

// Piecewise-linear row in (base, slope) form over uniform nodes 0, h, 2h, ...
// Entry n-1 holds the tail: value at b_max plus the capped tail slope.
struct LinearRow {
  std::vector<double> base;
  std::vector<double> slope;
  double h = 0.0;
  double inv_h = 0.0;

  explicit LinearRow(std::size_t nb) : base(nb), slope(nb) {}

  void fill(std::span<const double> lo, std::span<const double> hi, double w,
            double tail_cap) {
    const std::size_t nb = base.size();
    for (std::size_t j = 0; j < nb; ++j) base[j] = (1.0 - w) * lo[j] + w * hi[j];
    for (std::size_t j = 0; j + 1 < nb; ++j) {
      slope[j] = (base[j + 1] - base[j]) * inv_h;
    }
    slope[nb - 1] = std::min(slope[nb - 2], tail_cap);
  }
};

// Advances the states of one node through one Euler-Maruyama step:
// x <- max(0, x + g(x) sqrt(h) z). Always processes a full block; padding
// lanes carry z = 0 and stay put.
void advance(const LinearRow& row, double sqrt_h, const double* z, double* x) {
  const double top = static_cast<double>(row.base.size() - 1);
  const double* base = row.base.data();
  const double* slope = row.slope.data();
  const double h = row.h;
  const double inv_h = row.inv_h;
#if defined(__AVX512F__)
  static_assert(kPathsPerBlock % 8 == 0);
  const __m512d v_top = _mm512_set1_pd(top);
  const __m512d v_inv_h = _mm512_set1_pd(inv_h);
  const __m512d v_h = _mm512_set1_pd(h);
  const __m512d v_sqrt_h = _mm512_set1_pd(sqrt_h);
  const __m512d zero = _mm512_setzero_pd();
  for (std::size_t p = 0; p < kPathsPerBlock; p += 8) {
    const __m512d xp = _mm512_loadu_pd(x + p);
    const __m512d t = _mm512_min_pd(_mm512_mul_pd(xp, v_inv_h), v_top);
    const __m256i i = _mm512_cvttpd_epi32(t);
    const __m512d node = _mm512_mul_pd(_mm512_cvtepi32_pd(i), v_h);
    const __m512d b = _mm512_i32gather_pd(i, base, 8);
    const __m512d s = _mm512_i32gather_pd(i, slope, 8);
    __m512d v = _mm512_add_pd(b, _mm512_mul_pd(s, _mm512_sub_pd(xp, node)));
    v = _mm512_max_pd(v, zero);
    const __m512d dx =
        _mm512_mul_pd(_mm512_mul_pd(v, v_sqrt_h), _mm512_loadu_pd(z + p));
    _mm512_storeu_pd(x + p, _mm512_max_pd(_mm512_add_pd(xp, dx), zero));
  }
#else
  for (std::size_t p = 0; p < kPathsPerBlock; ++p) {
    const double xp = x[p];
    const double t = std::min(xp * inv_h, top);
    const int i = static_cast<int>(t);
    const double node = static_cast<double>(i) * h;
    double v = base[i] + slope[i] * (xp - node);
    v = std::max(v, 0.0);
    const double dx = v * sqrt_h * z[p];
    x[p] = std::max(xp + dx, 0.0);
  }
#endif
}

void require_grid_matches_spec(const DecouplingGrid& g, const GridSpec& spec) {
  const DecouplingGrid probe = DecouplingGrid::zeros(spec, g.beta());
  if (!g.same_shape(probe)) {
    throw ShapeError("grid nodes do not match the grid spec");
  }
}

}  // namespace

void PicardParams::validate(const GridSpec& spec) const {
  if (n_paths_per_node < 2) throw ConfigError("n_paths_per_node must be >= 2");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (dt > spec.q_step / 10.0 * (1.0 + 1e-12)) {
    throw ConfigError("dt must be <= q_step / 10");
  }
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(damping > 0.0 && damping <= 1.0)) {
    throw ConfigError("damping must lie in (0, 1]");
  }
}

QmapResult qmap_mc_detailed(const DecouplingGrid& g, const Nonlinearity& nl,
                            const GridSpec& spec, const PicardParams& params,
                            const SeededRng& rng) {
  spec.validate();
  params.validate(spec);
  require_grid_matches_spec(g, spec);
  if (auto bad = g.invariant_violations(); !bad.empty()) {
    throw PreconditionError("qmap_mc input violates grid invariants: " +
                            bad.front());
  }

  const auto& qs = g.q_nodes();
  const auto& bs = g.b_nodes();
  const std::size_t nq = qs.size();
  const std::size_t nb = bs.size();
  const double beta = g.beta();

  // Simulated nodes: every (Q, a) with Q > 0 and a > 0.
  const std::size_t n_rows = nq - 1;
  const std::size_t n_cols = nb - 1;
  const std::size_t n_nodes = n_rows * n_cols;
  std::vector<std::size_t> row_steps(n_rows);
  for (std::size_t m = 0; m < n_rows; ++m) {
    row_steps[m] = step_count(qs[m + 1], params.dt);
  }
  const std::size_t max_steps = row_steps.back();

  const auto n_paths = static_cast<std::size_t>(params.n_paths_per_node);
  const std::size_t n_blocks = (n_paths + kPathsPerBlock - 1) / kPathsPerBlock;

  // Per block and node: sum sigma^2, sum sigma^4, sum sigma^2 over even paths,
  // count of even paths is fixed by the block layout.
  constexpr std::size_t kAcc = 3;
  std::vector<double> partial(n_blocks * n_nodes * kAcc, 0.0);

  const double h = bs[1] - bs[0];
  const double inv_q_step = 1.0 / spec.q_step;

  parallel_for(n_blocks, [&](std::size_t block) {
    const std::size_t first = block * kPathsPerBlock;
    const std::size_t count = std::min(kPathsPerBlock, n_paths - first);

    std::vector<double> z(max_steps * kPathsPerBlock, 0.0);
    for (std::size_t p = 0; p < count; ++p) {
      RandomStream stream(rng.derive(first + p));
      for (std::size_t k = 0; k < max_steps; ++k) {
        z[k * kPathsPerBlock + p] = stream.normal();
      }
    }

    std::vector<double> x(n_nodes * kPathsPerBlock);
    for (std::size_t m = 0; m < n_rows; ++m) {
      for (std::size_t j = 0; j < n_cols; ++j) {
        double* xs = &x[(m * n_cols + j) * kPathsPerBlock];
        std::fill(xs, xs + kPathsPerBlock, bs[j + 1]);
      }
    }

    LinearRow row(nb);
    row.h = h;
    row.inv_h = 1.0 / h;
    for (std::size_t k = 0; k < max_steps; ++k) {
      const double* zk = &z[k * kPathsPerBlock];
      const double elapsed = static_cast<double>(k) * params.dt;
      for (std::size_t m = 0; m < n_rows; ++m) {
        if (k >= row_steps[m]) continue;
        const double Q = qs[m + 1];
        const double remaining = Q - elapsed;  // argument Q - q of g
        const double step = std::min(params.dt, remaining);
        std::size_t lo = std::min(static_cast<std::size_t>(remaining * inv_q_step),
                                  nq - 2);
        const double w = std::clamp((remaining - qs[lo]) * inv_q_step, 0.0, 1.0);
        row.fill(g.row(lo), g.row(lo + 1), w, lip_bound(remaining, beta));
        const double sqrt_step = std::sqrt(step);
        for (std::size_t j = 0; j < n_cols; ++j) {
          advance(row, sqrt_step, zk, &x[(m * n_cols + j) * kPathsPerBlock]);
        }
      }
    }

    double* acc = &partial[block * n_nodes * kAcc];
    for (std::size_t node = 0; node < n_nodes; ++node) {
      const double* xs = &x[node * kPathsPerBlock];
      double s2 = 0.0, s4 = 0.0, even = 0.0;
      for (std::size_t p = 0; p < count; ++p) {
        const double s = nl(xs[p]);
        const double sq = s * s;
        s2 += sq;
        s4 += sq * sq;
        if ((first + p) % 2 == 0) even += sq;
      }
      acc[node * kAcc + 0] = s2;
      acc[node * kAcc + 1] = s4;
      acc[node * kAcc + 2] = even;
    }
  });

  std::vector<double> sums(n_nodes * kAcc, 0.0);
  for (std::size_t block = 0; block < n_blocks; ++block) {
    for (std::size_t i = 0; i < n_nodes * kAcc; ++i) {
      sums[i] += partial[block * n_nodes * kAcc + i];
    }
  }

  const double n = static_cast<double>(n_paths);
  const double n_even = static_cast<double>((n_paths + 1) / 2);
  const double n_odd = static_cast<double>(n_paths / 2);
  std::vector<double> values(nq * nb, 0.0);
  std::vector<double> even_values(nq * nb, 0.0);
  std::vector<double> odd_values(nq * nb, 0.0);
  std::vector<double> se(nq * nb, 0.0);
  for (std::size_t j = 0; j < nb; ++j) {
    const double v = nl(bs[j]) * kInvTwoSqrtPi;
    values[j] = even_values[j] = odd_values[j] = v;
  }
  for (std::size_t m = 0; m < n_rows; ++m) {
    for (std::size_t j = 0; j < n_cols; ++j) {
      const std::size_t node = m * n_cols + j;
      const std::size_t idx = (m + 1) * nb + (j + 1);
      const double s2 = sums[node * kAcc + 0];
      const double s4 = sums[node * kAcc + 1];
      const double even = sums[node * kAcc + 2];
      const double mean = s2 / n;
      values[idx] = std::sqrt(mean) * kInvTwoSqrtPi;
      even_values[idx] = std::sqrt(even / n_even) * kInvTwoSqrtPi;
      odd_values[idx] =
          n_odd > 0 ? std::sqrt((s2 - even) / n_odd) * kInvTwoSqrtPi : 0.0;
      const double var = std::max(0.0, (s4 - n * mean * mean) / (n - 1.0));
      if (mean > 0.0) {
        se[idx] = std::sqrt(var / n) / (2.0 * std::sqrt(mean)) * kInvTwoSqrtPi;
      }
    }
  }

  QmapResult out{DecouplingGrid(qs, bs, std::move(values), beta), std::move(se),
                 0.0};
  const DecouplingGrid even_grid(qs, bs, std::move(even_values), beta);
  const DecouplingGrid odd_grid(qs, bs, std::move(odd_values), beta);
  out.noise_floor = y_norm_distance(even_grid, odd_grid) / std::sqrt(2.0);
  return out;
}

DecouplingGrid qmap_mc(const DecouplingGrid& g, const Nonlinearity& nl,
                       const GridSpec& spec, const PicardParams& params,
                       const SeededRng& rng) {
  return qmap_mc_detailed(g, nl, spec, params, rng).grid;
}

DecouplingGrid project_to_z(const DecouplingGrid& g) {
  DecouplingGrid out = g;
  const auto& bs = g.b_nodes();
  for (std::size_t i = 0; i < g.nq(); ++i) {
    const double bound = lip_bound(g.q_nodes()[i], g.beta());
    out.at(i, 0) = 0.0;
    for (std::size_t j = 1; j < g.nb(); ++j) {
      double v = out.at(i, j);
      if (!(v >= 0.0)) v = 0.0;  // also catches NaN
      const double prev = out.at(i, j - 1);
      const double reach = bound * (bs[j] - bs[j - 1]);
      v = std::clamp(v, prev - reach, prev + reach);
      out.at(i, j) = std::max(v, 0.0);
    }
  }
  return out;
}

nlohmann::ordered_json FixedPointDiagnostics::to_json() const {
  nlohmann::ordered_json j;
  j["iterations"] = distances;
  j["noise_floor"] = noise_floor;
  j["converged"] = converged;
  j["noise_floors"] = noise_floors;
  j["tol"] = tol_used;
  j["iteration_count"] = iterations;
  if (!warning.empty()) j["warning"] = warning;
  return j;
}

FixedPointResult fixed_point_solve(const Nonlinearity& nl, const GridSpec& spec,
                                   const PicardParams& params,
                                   const SeededRng& rng) {
  spec.validate();
  params.validate(spec);
  const double beta = nl.beta();
  DecouplingGrid g = DecouplingGrid::from_function(
      spec, beta, [&nl](double, double b) { return nl(b) * kInvTwoSqrtPi; });
  g = project_to_z(g);

  FixedPointResult result{g, {}};
  DecouplingGrid best = g;
  double best_dist = std::numeric_limits<double>::infinity();
  auto& diag = result.diagnostics;
  for (int it = 0; it < params.max_iters; ++it) {
    QmapResult mapped = qmap_mc_detailed(g, nl, spec, params,
                                         rng.derive(static_cast<std::uint64_t>(it)));
    DecouplingGrid mixed = mapped.grid;
    if (params.damping < 1.0) {
      auto& mv = mixed.mutable_values();
      for (std::size_t i = 0; i < mv.size(); ++i) {
        mv[i] = (1.0 - params.damping) * g.values()[i] + params.damping * mv[i];
      }
    }
    DecouplingGrid next = project_to_z(mixed);
    const double dist = y_norm_distance(next, g);
    diag.distances.push_back(dist);
    diag.noise_floors.push_back(mapped.noise_floor);
    diag.noise_floor = mapped.noise_floor;
    diag.iterations = it + 1;
    diag.tol_used = params.tol > 0.0 ? params.tol : 2.0 * mapped.noise_floor;
    g = std::move(next);
    if (dist < best_dist) {
      best_dist = dist;
      best = g;
    }
    if (dist < diag.tol_used) {
      diag.converged = true;
      break;
    }
  }
  if (!diag.converged) {
    std::ostringstream msg;
    msg << "no convergence after " << params.max_iters
        << " iterations; returning the iterate with the smallest step distance ("
        << best_dist << ")";
    diag.warning = msg.str();
    result.grid = std::move(best);
  } else {
    result.grid = std::move(g);
  }
  return result;
}

// --- PDE route ---------------------------------------------------------------

PdeScheme pde_scheme_from_string(const std::string& name) {
  if (name == "explicit") return PdeScheme::Explicit;
  if (name == "semi_implicit" || name == "semi-implicit") {
    return PdeScheme::SemiImplicit;
  }
  throw ConfigError("unknown PDE scheme '" + name +
                    "' (expected explicit or semi_implicit)");
}

std::string to_string(PdeScheme scheme) {
  return scheme == PdeScheme::Explicit ? "explicit" : "semi_implicit";
}

nlohmann::ordered_json PdeDiagnostics::to_json() const {
  return {{"steps", steps}, {"negative_clamps", negative_clamps}};
}

PdeResult direct_pde_solve_detailed(const Nonlinearity& nl, const GridSpec& spec,
                                    const PdeParams& params) {
  spec.validate();
  require_subcritical(nl.beta());
  if (!(params.dq > 0.0)) throw ConfigError("dq must be positive");
  const double ratio = spec.q_step / params.dq;
  const double steps_per_row = std::round(ratio);
  if (steps_per_row < 1.0 || std::abs(ratio - steps_per_row) > 1e-9 * ratio) {
    throw ConfigError("dq must divide q_step exactly");
  }
  const auto per_row = static_cast<std::int64_t>(steps_per_row);

  const auto qs = spec.q_nodes();
  const auto bs = spec.b_nodes();
  const std::size_t nb = bs.size();
  const std::size_t last = nb - 1;
  const double h = spec.b_step;
  const double dq = params.dq;

  std::vector<double> u(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    const double s = nl(bs[j]);
    u[j] = s * s / (4.0 * kPi);
  }

  std::vector<double> values(qs.size() * nb);
  for (std::size_t j = 0; j < nb; ++j) values[j] = nl(bs[j]) * kInvTwoSqrtPi;

  PdeResult result;
  auto& diag = result.diagnostics;
  std::vector<double> next(nb), lower(nb), diag_c(nb), upper(nb), rhs(nb);

  auto tail_slope_sq = [&](const std::vector<double>& v) {
    const double s = (std::sqrt(v[last]) - std::sqrt(v[last - 1])) / h;
    return s * s;
  };

  for (std::size_t row = 1; row < qs.size(); ++row) {
    for (std::int64_t k = 0; k < per_row; ++k) {
      const double q = qs[row - 1] + static_cast<double>(k) * dq;
      const double s2 = tail_slope_sq(u);
      if (params.scheme == PdeScheme::Explicit) {
        const double umax = *std::max_element(u.begin(), u.end());
        if (umax > 0.0 && dq > h * h / (2.0 * umax)) {
          std::ostringstream msg;
          msg << "explicit CFL violated at q=" << q << ": dq=" << dq
              << " > b_step^2/(2 max u)=" << h * h / (2.0 * umax);
          throw NumericalError(msg.str());
        }
        next[0] = 0.0;
        for (std::size_t j = 1; j < last; ++j) {
          next[j] = u[j] + dq * 0.5 * u[j] * (u[j + 1] - 2.0 * u[j] + u[j - 1]) /
                               (h * h);
        }
        next[last] = u[last] + dq * u[last] * s2;
      } else {
        // Coefficient lagged at u^n; tridiagonal system for the interior.
        const double denom = 1.0 - dq * s2;
        if (!(denom > 0.0)) {
          std::ostringstream msg;
          msg << "semi-implicit tail update singular at q=" << q;
          throw NumericalError(msg.str());
        }
        next[0] = 0.0;
        next[last] = u[last] / denom;
        for (std::size_t j = 1; j < last; ++j) {
          const double c = dq * 0.5 * u[j] / (h * h);
          lower[j] = -c;
          diag_c[j] = 1.0 + 2.0 * c;
          upper[j] = -c;
          rhs[j] = u[j];
        }
        rhs[1] -= lower[1] * next[0];
        rhs[last - 1] -= upper[last - 1] * next[last];
        // Thomas algorithm on rows 1..last-1.
        for (std::size_t j = 2; j < last; ++j) {
          const double f = lower[j] / diag_c[j - 1];
          diag_c[j] -= f * upper[j - 1];
          rhs[j] -= f * rhs[j - 1];
        }
        next[last - 1] = rhs[last - 1] / diag_c[last - 1];
        for (std::size_t j = last - 1; j-- > 1;) {
          next[j] = (rhs[j] - upper[j] * next[j + 1]) / diag_c[j];
        }
      }
      for (double& v : next) {
        if (v < 0.0) {
          v = 0.0;
          ++diag.negative_clamps;
        }
      }
      u.swap(next);
      ++diag.steps;
    }
    for (std::size_t j = 0; j < nb; ++j) values[row * nb + j] = std::sqrt(u[j]);
  }

  result.grid = DecouplingGrid(qs, bs, std::move(values), nl.beta());
  return result;
}

DecouplingGrid direct_pde_solve(const Nonlinearity& nl, const GridSpec& spec,
                                const PdeParams& params) {
  return direct_pde_solve_detailed(nl, spec, params).grid;
}

}  // namespace she2d
