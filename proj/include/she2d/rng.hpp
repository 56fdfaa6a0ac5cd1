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

#include <cstdint>
#include <random>
#include <span>

namespace she2d {

/// Address of a random stream: a master seed plus a stream id. Value type;
/// the same address always reproduces the same numbers. Child streams are
/// derived by hashing, so results never depend on scheduling.
struct SeededRng {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  /// Child stream number k of this stream.
  SeededRng derive(std::uint64_t k) const;

  friend bool operator==(const SeededRng&, const SeededRng&) = default;
};

/// Engine for one stream: mt19937_64 seeded through std::seed_seq from the
/// four 32-bit halves of (master_seed, stream_id). Both are fully specified
/// by the standard, and normals come from Box-Muller, so the output is
/// identical on every conforming platform.
class RandomStream {
 public:
  explicit RandomStream(const SeededRng& address);

  /// Uniform on (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal.
  double normal();
  void fill_normal(std::span<double> out);

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace she2d
