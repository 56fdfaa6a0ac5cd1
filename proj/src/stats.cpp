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

#include "she2d/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "she2d/errors.hpp"

namespace she2d {

double ks_distance(std::span<const double> samples,
                   const std::function<double(double)>& cdf) {
  if (samples.size() < kMinKsSamples) {
    std::ostringstream msg;
    msg << "ks_distance needs at least " << kMinKsSamples << " samples, got "
        << samples.size();
    throw PreconditionError(msg.str());
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    const double above = static_cast<double>(i + 1) / n;
    const double below = static_cast<double>(i) / n;
    d = std::max({d, std::abs(above - f), std::abs(below - f)});
  }
  return d;
}

MeanEstimate mean_with_stderr(std::span<const double> samples) {
  if (samples.empty()) throw PreconditionError("no samples");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  MeanEstimate out{mean, 0.0};
  if (samples.size() > 1) out.std_error = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

std::vector<MomentReport> empirical_moments(std::span<const double> samples,
                                            std::span<const int> orders) {
  if (samples.empty()) throw PreconditionError("empirical_moments: no samples");
  std::vector<MomentReport> out;
  std::vector<double> powered(samples.size());
  for (int order : orders) {
    if (order < 1) {
      throw ValidationError("moment order must be >= 1, got " +
                            std::to_string(order));
    }
    std::transform(samples.begin(), samples.end(), powered.begin(),
                   [order](double x) { return std::pow(x, order); });
    const MeanEstimate m = mean_with_stderr(powered);
    out.push_back({order, m.mean, m.std_error, samples.size()});
  }
  return out;
}

LogCovReport empirical_log_cov(std::span<const double> x,
                               std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ShapeError("empirical_log_cov: sample vectors differ in length");
  }
  LogCovReport out;
  std::vector<double> lx, ly;
  lx.reserve(x.size());
  ly.reserve(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::min(x[i], y[i]) > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    } else {
      ++out.excluded;
    }
  }
  out.used = lx.size();
  if (out.used < kMinLogCovPairs) {
    std::ostringstream msg;
    msg << "empirical_log_cov: only " << out.used
        << " strictly positive pairs (need " << kMinLogCovPairs << ")";
    throw PreconditionError(msg.str());
  }
  const double n = static_cast<double>(out.used);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sx = 0.0, sy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    lx[i] -= mx;
    ly[i] -= my;
    sx += lx[i];
    sy += ly[i];
    sxy += lx[i] * ly[i];
  }
  out.cov = (sxy - sx * sy / n) / (n - 1.0);

  // Leave-one-out covariances from the running sums.
  std::vector<double> loo(lx.size());
  double loo_mean = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double sxi = sx - lx[i];
    const double syi = sy - ly[i];
    const double sxyi = sxy - lx[i] * ly[i];
    loo[i] = (sxyi - sxi * syi / (n - 1.0)) / (n - 2.0);
    loo_mean += loo[i];
  }
  loo_mean /= n;
  double ss = 0.0;
  for (double v : loo) ss += (v - loo_mean) * (v - loo_mean);
  out.std_error = std::sqrt((n - 1.0) / n * ss);
  return out;
}

GridComparison compare_grids(const DecouplingGrid& g1, const DecouplingGrid& g2,
                             double b_min) {
  if (!g1.same_shape(g2)) {
    throw ShapeError("compare_grids: grids do not share nodes and beta");
  }
  constexpr double kTiny = 1e-300;
  GridComparison out;
  for (std::size_t i = 0; i < g1.nq(); ++i) {
    for (std::size_t j = 0; j < g1.nb(); ++j) {
      if (g1.b_nodes()[j] < b_min - 1e-12) continue;
      const double rel = std::abs(g1.at(i, j) - g2.at(i, j)) /
                         std::max(std::abs(g2.at(i, j)), kTiny);
      out.sup_rel_error = std::max(out.sup_rel_error, rel);
    }
  }
  out.y_distance = y_norm_distance(g1, g2);
  return out;
}

nlohmann::ordered_json to_json(const MomentReport& r) {
  return {{"order", r.order},
          {"estimate", r.estimate},
          {"stderr", r.std_error},
          {"n", r.n}};
}

nlohmann::ordered_json to_json(const LogCovReport& r) {
  return {{"cov", r.cov},
          {"stderr", r.std_error},
          {"excluded_count", r.excluded},
          {"used_count", r.used}};
}

nlohmann::ordered_json to_json(const GridComparison& r) {
  return {{"sup_rel_error", r.sup_rel_error}, {"y_norm_distance", r.y_distance}};
}

}  // namespace she2d
