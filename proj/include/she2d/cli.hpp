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

// Batch experiment runner. Each subcommand reads a strict JSON config,
// writes CSV/JSON artifacts plus manifest.json into the output directory,
// and returns 0 on success, 2 on invalid input and 3 on numerical failure.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace she2d {

inline constexpr const char* kVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitNumerical = 3;

/// args[0] is the program name. Progress and results go to out, errors to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Same, writing to std::cout and std::cerr.
int run(int argc, const char* const* argv);

}  // namespace she2d
