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

// Closed forms for sigma(u) = beta * u. With c = 4*pi/beta^2 the decoupling
// function is J(q, b) = b (c - q)^{-1/2}, the one-point law at macroscopic
// time Q is log-normal with log-variance log(c / (c - Q)), and the log
// covariance of two branching coordinates separated by d is
// log((c - (2d v 0) ^ Q) / (c - Q)).

#pragma once

#include "she2d/core.hpp"

namespace she2d {

struct LogNormalLaw {
  double mu_log = 0.0;
  double s2 = 0.0;
  /// a = 0: point mass at zero.
  bool degenerate_zero = false;

  double mean() const;
  double median() const;
  double pdf(double x) const;
};

/// (4*pi/beta^2 - Q)^{-1/2}; J(q, b) = b * jbar(q, beta) in the linear case.
double jbar(double Q, double beta);

/// Law of the terminal value started at a > 0 after macroscopic time Q.
/// a = 0 returns a law flagged degenerate_zero.
LogNormalLaw lognormal_params(double a, double Q, double beta);

/// Phi((log x - mu_log) / sqrt(s2)) with Phi evaluated through std::erfc.
/// A step at exp(mu_log) when s2 = 0; 0 for x <= 0.
double lognormal_cdf(const LogNormalLaw& law, double x);

/// log((c - min(max(2d, 0), Q)) / (c - Q)); d may be -infinity.
double multipoint_cov(double Q, double beta, double d);

/// E Xi(Q)^2 = a^2 c / (c - Q).
double linear_second_moment(double a, double Q, double beta);

/// The exact linear J sampled on the nodes of spec.
DecouplingGrid exact_linear_grid(const GridSpec& spec, double beta);

/// Standard normal CDF.
double normal_cdf(double z);

}  // namespace she2d
