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

#include "she2d/linear_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "she2d/errors.hpp"

namespace she2d {
namespace {

void require_q(double Q) {
  if (!(Q >= 0.0 && Q <= kMaxQ)) {
    std::ostringstream msg;
    msg << "Q=" << Q << " must lie in [0, 2]";
    throw DomainError(msg.str());
  }
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double LogNormalLaw::mean() const {
  return degenerate_zero ? 0.0 : std::exp(mu_log + 0.5 * s2);
}

double LogNormalLaw::median() const {
  return degenerate_zero ? 0.0 : std::exp(mu_log);
}

double LogNormalLaw::pdf(double x) const {
  if (degenerate_zero || s2 <= 0.0 || x <= 0.0) return 0.0;
  const double z = std::log(x) - mu_log;
  return std::exp(-z * z / (2.0 * s2)) / (x * std::sqrt(2.0 * kPi * s2));
}

double jbar(double Q, double beta) {
  require_subcritical(beta);
  require_q(Q);
  return lip_bound(Q, beta);
}

LogNormalLaw lognormal_params(double a, double Q, double beta) {
  require_subcritical(beta);
  require_q(Q);
  if (!(a >= 0.0)) throw DomainError("initial value a must be >= 0");
  LogNormalLaw law;
  if (a == 0.0) {
    law.degenerate_zero = true;
    return law;
  }
  const double c = inverse_coupling(beta);
  law.s2 = std::isinf(c) ? 0.0 : std::log(c / (c - Q));
  law.mu_log = std::log(a) - 0.5 * law.s2;
  return law;
}

double lognormal_cdf(const LogNormalLaw& law, double x) {
  if (x <= 0.0) return law.degenerate_zero && x == 0.0 ? 1.0 : 0.0;
  if (law.degenerate_zero) return 1.0;
  if (law.s2 <= 0.0) return x >= std::exp(law.mu_log) ? 1.0 : 0.0;
  return normal_cdf((std::log(x) - law.mu_log) / std::sqrt(law.s2));
}

double multipoint_cov(double Q, double beta, double d) {
  require_subcritical(beta);
  require_q(Q);
  const double c = inverse_coupling(beta);
  if (std::isinf(c)) return 0.0;
  const double shared = std::min(std::max(2.0 * d, 0.0), Q);
  return std::log((c - shared) / (c - Q));
}

double linear_second_moment(double a, double Q, double beta) {
  require_subcritical(beta);
  require_q(Q);
  const double c = inverse_coupling(beta);
  if (std::isinf(c)) return a * a;
  return a * a * c / (c - Q);
}

DecouplingGrid exact_linear_grid(const GridSpec& spec, double beta) {
  spec.validate();
  return DecouplingGrid::from_function(
      spec, beta, [beta](double q, double b) { return b * jbar(q, beta); });
}

}  // namespace she2d
