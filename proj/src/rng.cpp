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

#include "she2d/rng.hpp"

#include <cmath>
#include <numbers>

namespace she2d {
namespace {

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

SeededRng SeededRng::derive(std::uint64_t k) const {
  return {master_seed, mix64(stream_id ^ mix64(k + 0x632be59bd9b4e019ULL))};
}

RandomStream::RandomStream(const SeededRng& address) {
  std::seed_seq seq{static_cast<std::uint32_t>(address.master_seed),
                    static_cast<std::uint32_t>(address.master_seed >> 32),
                    static_cast<std::uint32_t>(address.stream_id),
                    static_cast<std::uint32_t>(address.stream_id >> 32)};
  engine_.seed(seq);
}

double RandomStream::uniform() {
  // (k + 0.5) / 2^53 is never 0 or 1.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double theta = 2.0 * std::numbers::pi * uniform();
  cached_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

void RandomStream::fill_normal(std::span<double> out) {
  for (double& z : out) z = normal();
}

}  // namespace she2d
