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

// Spectral simulation of the 2D stochastic heat equation
//     du = (1/2) Lap u dt + delta sigma(u) dW,   u(0, .) = a,
// on a periodic torus, with noise white in time and Gaussian-mollified in
// space. Also the linear-case Volterra oracle for E u^2, the empirical
// decoupling function J_eps and the Edwards-Wilkinson variance functional.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "she2d/core.hpp"
#include "she2d/decoupling.hpp"
#include "she2d/rng.hpp"
#include "she2d/stats.hpp"

namespace she2d {

/// Variables the torus is expressed in.
///  * Macroscopic: noise mollified at scale eps, sample time for q is
///    eps^{2-q}.
///  * Microscopic: space and time rescaled by eps^{-1} and eps^{-2}, so the
///    mollifier has scale 1 and the sample time for q is eps^{-q}.
/// Both use the same attenuation delta.
enum class SpdeScale { Macroscopic, Microscopic };

enum class Attenuation {
  /// delta = (log 1/eps)^{-1/2}.
  Logarithmic,
  /// delta = SpdeConfig::delta.
  Custom,
};

struct SpdeConfig {
  double L = 128.0;
  int n_grid = 256;
  double eps = 0.05;
  double a = 1.0;
  /// Time step as a multiple of dx^2.
  double dt_factor = 0.25;
  double T = 1.0;
  Attenuation attenuation = Attenuation::Logarithmic;
  double delta = 0.0;
  SpdeScale scale = SpdeScale::Microscopic;

  /// Throws ConfigError: n_grid even, mollifier >= 2 dx, dt_factor <= 0.25,
  /// L >= 20 sqrt(T), eps in (0, 1) for the logarithmic attenuation.
  void validate() const;

  double dx() const { return L / n_grid; }
  double dt() const { return dt_factor * dx() * dx(); }
  /// Mollification length on the torus: eps or 1.
  double mollifier() const;
  double attenuation_delta() const;
  /// Simulation time that corresponds to the exponential-scale variable q.
  double time_of_q(double q) const;
};

SpdeScale spde_scale_from_string(const std::string& name);
std::string to_string(SpdeScale scale);

struct FieldSnapshot {
  double t = 0.0;
  int n_grid = 0;
  /// Row-major n_grid x n_grid, index y * n_grid + x.
  std::vector<double> values;
  std::int64_t negative_count = 0;
};

/// One realization sampled at the given ascending times in [0, T].
/// Exponential integrator: u_hat <- exp(-k^2 h/2) u_hat + F_k FFT(delta
/// sigma(u) dW) with F_k = ((1 - exp(-k^2 h)) / (k^2 h))^{1/2}, the factor
/// that gives each mode the exact variance of the heat-damped stochastic
/// integral over the step. sigma is extended oddly to u < 0. Throws
/// NumericalError if any |u| exceeds 1e12.
std::vector<FieldSnapshot> simulate_spde(const SpdeConfig& cfg,
                                         const Nonlinearity& nl,
                                         const std::vector<double>& sample_times,
                                         const SeededRng& rng);

/// Realization-averaged one-point statistics; each realization contributes
/// its spatial average, so standard errors are across realizations.
struct SpdeMoments {
  std::vector<double> times;
  std::vector<MeanEstimate> mean;
  std::vector<MeanEstimate> second_moment;
  std::int64_t negative_entries = 0;
  std::int64_t total_entries = 0;
};

/// Realization r draws from rng.derive(r).
SpdeMoments spde_moments(const SpdeConfig& cfg, const Nonlinearity& nl,
                         const std::vector<double>& times,
                         std::int64_t n_realizations, const SeededRng& rng);

/// Solution with a = 1 of f(t) = 1 + lambda int_0^t f(s) / (t - s + 1/2) ds,
/// lambda = delta^2 beta^2 / (4 pi), at each t of t_grid. Product
/// trapezoid rule with the kernel integrated exactly on an internal grid
/// that contains t_grid. Throws DomainError when lambda log(1 + 2 t_max)
/// >= 1, naming the critical time.
std::vector<double> volterra_second_moment(double beta, double delta,
                                           const std::vector<double>& t_grid);

/// 1 / (1 - delta^2 beta^2 log t / (4 pi)).
double volterra_asymptotic(double beta, double delta, double t);

struct JEpsEstimate {
  double q = 0.0;
  double t = 0.0;
  double j_eps = 0.0;
  double std_error = 0.0;
};

/// (1 / 2 sqrt(pi)) (E sigma(u(t_q, x))^2)^{1/2} at t_q = cfg.time_of_q(q).
/// The expectation averages over realizations and over a sublattice with
/// spacing >= 4 times the mollifier; the standard error comes from the
/// per-realization averages (delta method).
std::vector<JEpsEstimate> estimate_j_eps(const SpdeConfig& cfg,
                                         const Nonlinearity& nl,
                                         const std::vector<double>& q_list,
                                         double a, std::int64_t n_realizations,
                                         const SeededRng& rng);

/// g(x) = exp(-|x - center|^2 / (2 width^2)) in macroscopic coordinates.
struct GaussianBump {
  double cx = 0.0;
  double cy = 0.0;
  double width = 1.0;
};

/// int_0^T int |G_{T-s} * g|^2 dy ds by spectral quadrature over the dual
/// lattice of a torus of side L (macroscopic units).
double ew_kernel_integral(const GaussianBump& g, double T, double L);

struct EwResult {
  double empirical_variance = 0.0;
  double empirical_std_error = 0.0;
  /// E sigma(Xi_{a,2}(2))^2 from simulated terminal samples.
  double sigma2_mean = 0.0;
  double kernel_integral = 0.0;
  double limit_prediction = 0.0;
};

/// Variance over realizations of (log 1/eps)^{1/2} int (u(T, x) - a) g(x) dx
/// against E sigma(Xi_{a,2}(2))^2 int_0^T int |G_{T-s} * g|^2. T and g are
/// macroscopic; in microscopic runs the torus is rescaled accordingly.
/// xi_paths terminal samples (dt = 1e-3) estimate the sigma^2 mean.
EwResult ew_variance_functional(const SpdeConfig& cfg, const Nonlinearity& nl,
                                const GaussianBump& g, const DecouplingGrid& J,
                                std::int64_t n_realizations, const SeededRng& rng,
                                std::int64_t xi_paths = 100000);

}  // namespace she2d
