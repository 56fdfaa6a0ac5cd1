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

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "she2d/core.hpp"

namespace she2d {

/// Sample moment E[x^order] with the standard error of the mean of x^order.
struct MomentReport {
  int order = 1;
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

struct LogCovReport {
  double cov = 0.0;
  double std_error = 0.0;
  std::size_t excluded = 0;
  std::size_t used = 0;
};

struct GridComparison {
  double sup_rel_error = 0.0;
  double y_distance = 0.0;
};

/// Mean and standard error of the mean.
struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

inline constexpr std::size_t kMinKsSamples = 100;
inline constexpr std::size_t kMinLogCovPairs = 100;

/// Kolmogorov-Smirnov distance sup_x |F_n(x) - F(x)|. Requires at least
/// 100 samples.
double ks_distance(std::span<const double> samples,
                   const std::function<double(double)>& cdf);

/// Two-pass moments; orders must be >= 1.
std::vector<MomentReport> empirical_moments(std::span<const double> samples,
                                            std::span<const int> orders);

MeanEstimate mean_with_stderr(std::span<const double> samples);

/// Covariance of (log x, log y) over pairs with min(x, y) > 0, with a
/// jackknife standard error. Throws if fewer than 100 pairs survive.
LogCovReport empirical_log_cov(std::span<const double> x,
                               std::span<const double> y);

/// Sup relative error of g1 against g2 over nodes with b >= b_min (guarded
/// by 1e-300 in the denominator), and the weighted-norm distance.
GridComparison compare_grids(const DecouplingGrid& g1, const DecouplingGrid& g2,
                             double b_min);

nlohmann::ordered_json to_json(const MomentReport& r);
nlohmann::ordered_json to_json(const LogCovReport& r);
nlohmann::ordered_json to_json(const GridComparison& r);

}  // namespace she2d
