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
#include <sstream>

#include "she2d/errors.hpp"
#include "she2d/parallel.hpp"

namespace she2d {
namespace {

constexpr std::size_t kBlock = 256;
constexpr double kSnap = 1e-12;

void require_grid_covers(const DecouplingGrid& J, double Q) {
  if (J.nq() == 0) throw ShapeError("empty decoupling grid");
  if (Q > J.q_nodes().back() + 1e-12) {
    std::ostringstream msg;
    msg << "Q=" << Q << " exceeds the q-range [0, " << J.q_nodes().back()
        << "] of J";
    throw DomainError(msg.str());
  }
  if (auto bad = J.invariant_violations(); !bad.empty()) {
    throw PreconditionError("decoupling grid violates invariants: " +
                            bad.front());
  }
}

// Index of each record time on the time grid.
std::vector<std::size_t> record_indices(const std::vector<double>& grid,
                                        const std::vector<double>& times) {
  std::vector<std::size_t> out;
  out.reserve(times.size());
  for (double t : times) {
    auto it = std::lower_bound(grid.begin(), grid.end(), t - kSnap);
    out.push_back(static_cast<std::size_t>(it - grid.begin()));
  }
  return out;
}

// Rows of J at Q - q_k for every step k of the time grid.
std::vector<GridRow> step_rows(const DecouplingGrid& J, double Q,
                               const std::vector<double>& grid) {
  std::vector<GridRow> rows;
  rows.reserve(grid.size() - 1);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    rows.push_back(J.row_at(std::max(0.0, Q - grid[k])));
  }
  return rows;
}

}  // namespace

void SdeParams::validate() const {
  if (!(a >= 0.0) || !std::isfinite(a)) {
    throw DomainError("initial value a must be finite and >= 0");
  }
  if (!(Q >= 0.0 && Q <= kMaxQ)) throw DomainError("Q must lie in [0, 2]");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (Q > 0.0 && dt > Q / 100.0 * (1.0 + 1e-12)) {
    throw ConfigError("dt must be <= Q / 100");
  }
  if (n_paths < 1) throw ConfigError("n_paths must be >= 1");
  for (std::size_t i = 0; i < record_times.size(); ++i) {
    const double t = record_times[i];
    if (!(t >= 0.0 && t <= Q)) {
      throw DomainError("record times must lie in [0, Q]");
    }
    if (i > 0 && !(t > record_times[i - 1])) {
      throw ConfigError("record times must be strictly ascending");
    }
  }
}

std::vector<double> time_grid(double Q, double dt,
                              const std::vector<double>& breakpoints) {
  std::vector<double> nodes;
  const auto n = static_cast<std::size_t>(std::ceil(Q / dt - 1e-9));
  nodes.reserve(n + breakpoints.size() + 1);
  for (std::size_t k = 0; k < n; ++k) nodes.push_back(static_cast<double>(k) * dt);
  nodes.push_back(Q);
  for (double b : breakpoints) {
    if (b > 0.0 && b < Q) nodes.push_back(b);
  }
  std::sort(nodes.begin(), nodes.end());
  std::vector<double> out;
  out.reserve(nodes.size());
  for (double t : nodes) {
    if (out.empty() || t - out.back() > kSnap) {
      out.push_back(t);
    } else if (t == Q) {
      out.back() = Q;
    }
  }
  if (out.size() == 1) out.push_back(Q);  // Q = 0: a single empty step
  return out;
}

PathEnsemble simulate_xi(const DecouplingGrid& J, const SdeParams& p,
                         const SeededRng& rng) {
  p.validate();
  require_grid_covers(J, p.Q);

  const std::vector<double> grid = time_grid(p.Q, p.dt, p.record_times);
  const std::vector<std::size_t> rec = record_indices(grid, p.record_times);
  const std::vector<GridRow> rows = step_rows(J, p.Q, grid);
  const std::size_t n_steps = grid.size() - 1;
  const auto n_paths = static_cast<std::size_t>(p.n_paths);
  const std::size_t n_rec = rec.size();

  PathEnsemble ens;
  ens.seed = rng;
  ens.params = p;
  ens.terminal.assign(n_paths, p.a);
  ens.snapshots.assign(n_paths * n_rec, 0.0);

  const std::size_t n_blocks = (n_paths + kBlock - 1) / kBlock;
  parallel_for(n_blocks, [&](std::size_t block) {
    const std::size_t first = block * kBlock;
    const std::size_t count = std::min(kBlock, n_paths - first);
    std::vector<RandomStream> streams;
    streams.reserve(count);
    for (std::size_t i = 0; i < count; ++i) streams.emplace_back(rng.derive(first + i));
    std::vector<double> x(count, p.a);

    std::size_t next_rec = 0;
    auto record = [&](std::size_t k) {
      while (next_rec < n_rec && rec[next_rec] == k) {
        for (std::size_t i = 0; i < count; ++i) {
          ens.snapshots[(first + i) * n_rec + next_rec] = x[i];
        }
        ++next_rec;
      }
    };
    record(0);
    for (std::size_t k = 0; k < n_steps; ++k) {
      const double sqrt_h = std::sqrt(grid[k + 1] - grid[k]);
      const GridRow& row = rows[k];
      for (std::size_t i = 0; i < count; ++i) {
        const double z = streams[i].normal();
        x[i] = std::max(0.0, x[i] + row(x[i]) * sqrt_h * z);
      }
      record(k + 1);
    }
    std::copy(x.begin(), x.end(), ens.terminal.begin() + static_cast<std::ptrdiff_t>(first));
  });
  return ens;
}

std::vector<double> y_process(const DecouplingGrid& J, const PathEnsemble& ens) {
  const auto& times = ens.params.record_times;
  if (ens.snapshots.size() != ens.terminal.size() * times.size()) {
    throw ShapeError("y_process: snapshot matrix does not match record times");
  }
  std::vector<double> y(ens.snapshots.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const GridRow row = J.row_at(std::max(0.0, ens.params.Q - times[k]));
    for (std::size_t p = 0; p < ens.terminal.size(); ++p) {
      const double j = row(ens.snapshot(p, k));
      y[p * times.size() + k] = j * j;
    }
  }
  return y;
}

UltrametricConfig UltrametricConfig::pair(double d12, double Q) {
  UltrametricConfig cfg;
  cfg.n = 2;
  cfg.Q = Q;
  cfg.d = {kSelf, d12, d12, kSelf};
  return cfg;
}

std::optional<std::string> validate_ultrametric(const UltrametricConfig& cfg) {
  std::ostringstream msg;
  if (cfg.n < 1) return std::string("n must be >= 1");
  if (cfg.d.size() != static_cast<std::size_t>(cfg.n) * cfg.n) {
    msg << "distance matrix has " << cfg.d.size() << " entries, expected "
        << cfg.n * cfg.n;
    return msg.str();
  }
  for (int i = 0; i < cfg.n; ++i) {
    if (!(std::isinf(cfg.at(i, i)) && cfg.at(i, i) < 0)) {
      msg << "diagonal entry (" << i << "," << i << ") must be -inf";
      return msg.str();
    }
    for (int j = 0; j < cfg.n; ++j) {
      if (i != j && std::isnan(cfg.at(i, j))) {
        msg << "entry (" << i << "," << j << ") is NaN";
        return msg.str();
      }
      if (cfg.at(i, j) != cfg.at(j, i)) {
        msg << "asymmetric: d(" << i << "," << j << ")=" << cfg.at(i, j)
            << " but d(" << j << "," << i << ")=" << cfg.at(j, i);
        return msg.str();
      }
    }
  }
  for (int i = 0; i < cfg.n; ++i) {
    for (int j = 0; j < cfg.n; ++j) {
      for (int k = 0; k < cfg.n; ++k) {
        if (i == j || j == k || i == k) continue;
        if (cfg.at(i, k) > std::max(cfg.at(i, j), cfg.at(j, k))) {
          msg << "ultrametric inequality fails for (" << i << "," << j << ","
              << k << "): d(" << i << "," << k << ")=" << cfg.at(i, k)
              << " > max(" << cfg.at(i, j) << ", " << cfg.at(j, k) << ")";
          return msg.str();
        }
      }
    }
  }
  return std::nullopt;
}

int driver_index(const UltrametricConfig& cfg, int j, double threshold) {
  for (int i = 0; i < cfg.n; ++i) {
    if (cfg.at(i, j) < threshold) return i;
  }
  return j;
}

MultipointResult simulate_multipoint(const DecouplingGrid& J,
                                     const UltrametricConfig& cfg,
                                     const SdeParams& p, const SeededRng& rng) {
  p.validate();
  if (auto bad = validate_ultrametric(cfg)) throw ConfigError(*bad);
  if (std::abs(cfg.Q - p.Q) > 1e-12) {
    throw ConfigError("ultrametric config and SDE params disagree on Q");
  }
  require_grid_covers(J, p.Q);

  MultipointResult result;
  std::vector<double> uniform = time_grid(p.Q, p.dt, {});
  std::vector<double> breaks = p.record_times;
  for (int i = 0; i < cfg.n; ++i) {
    for (int j = i + 1; j < cfg.n; ++j) {
      const double t = p.Q - 2.0 * cfg.at(i, j);
      if (!(t > 0.0 && t < p.Q)) continue;
      breaks.push_back(t);
      const bool on_grid = std::any_of(uniform.begin(), uniform.end(),
                                       [t](double u) { return std::abs(u - t) <= kSnap; });
      if (!on_grid) result.inserted_breakpoints.push_back(t);
    }
  }
  std::sort(result.inserted_breakpoints.begin(), result.inserted_breakpoints.end());
  result.inserted_breakpoints.erase(
      std::unique(result.inserted_breakpoints.begin(),
                  result.inserted_breakpoints.end()),
      result.inserted_breakpoints.end());

  const std::vector<double> grid = time_grid(p.Q, p.dt, breaks);
  const std::vector<std::size_t> rec = record_indices(grid, p.record_times);
  const std::vector<GridRow> rows = step_rows(J, p.Q, grid);
  const std::size_t n_steps = grid.size() - 1;
  const auto n = static_cast<std::size_t>(cfg.n);
  const std::size_t n_rec = rec.size();

  std::vector<int> drivers(n_steps * n);
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double mid = 0.5 * (grid[k] + grid[k + 1]);
    for (std::size_t j = 0; j < n; ++j) {
      drivers[k * n + j] = driver_index(cfg, static_cast<int>(j), 0.5 * (p.Q - mid));
    }
  }

  const auto n_paths = static_cast<std::size_t>(p.n_paths);
  result.coords.resize(n);
  for (auto& e : result.coords) {
    e.seed = rng;
    e.params = p;
    e.terminal.assign(n_paths, p.a);
    e.snapshots.assign(n_paths * n_rec, 0.0);
  }

  const std::size_t n_blocks = (n_paths + kBlock - 1) / kBlock;
  parallel_for(n_blocks, [&](std::size_t block) {
    const std::size_t first = block * kBlock;
    const std::size_t count = std::min(kBlock, n_paths - first);
    std::vector<double> x(n), z(n);
    for (std::size_t r = first; r < first + count; ++r) {
      RandomStream stream(rng.derive(r));
      std::fill(x.begin(), x.end(), p.a);
      std::size_t next_rec = 0;
      auto record = [&](std::size_t k) {
        while (next_rec < n_rec && rec[next_rec] == k) {
          for (std::size_t j = 0; j < n; ++j) {
            result.coords[j].snapshots[r * n_rec + next_rec] = x[j];
          }
          ++next_rec;
        }
      };
      record(0);
      for (std::size_t k = 0; k < n_steps; ++k) {
        const double sqrt_h = std::sqrt(grid[k + 1] - grid[k]);
        stream.fill_normal(z);
        const int* drv = &drivers[k * n];
        for (std::size_t j = 0; j < n; ++j) {
          x[j] = std::max(0.0, x[j] + rows[k](x[j]) * sqrt_h * z[drv[j]]);
        }
        record(k + 1);
      }
      for (std::size_t j = 0; j < n; ++j) result.coords[j].terminal[r] = x[j];
    }
  });
  return result;
}

}  // namespace she2d
