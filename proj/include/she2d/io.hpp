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

// CSV and JSON artifacts. Every real number is written with 17 significant
// digits so that files round-trip exactly and compare byte for byte.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "she2d/core.hpp"
#include "she2d/sde.hpp"
#include "she2d/spde.hpp"

namespace she2d {

/// "%.17g".
std::string format_real(double x);

/// Header q,b,J; rows ordered by q then b.
void write_grid_csv(const std::filesystem::path& path, const DecouplingGrid& grid);
/// Reads a q,b,J file back; node sets are inferred from the rows.
DecouplingGrid read_grid_csv(const std::filesystem::path& path, double beta);

/// Header path_id,value.
void write_terminal_csv(const std::filesystem::path& path,
                        const std::vector<double>& values);
/// Values column of a path_id,value file.
std::vector<double> read_terminal_csv(const std::filesystem::path& path);

/// Header path_id,coord_1,...,coord_N.
void write_multipoint_csv(const std::filesystem::path& path,
                          const std::vector<PathEnsemble>& coords);
/// One vector per coordinate column.
std::vector<std::vector<double>> read_multipoint_csv(
    const std::filesystem::path& path);

/// Header path_id,q,value; one row per path and record time.
void write_snapshot_csv(const std::filesystem::path& path,
                        const PathEnsemble& ens, const std::vector<double>& values);

/// Header x_index,y_index,value.
void write_field_csv(const std::filesystem::path& path, const FieldSnapshot& snap);

/// Header q,j_eps,stderr.
void write_jeps_csv(const std::filesystem::path& path,
                    const std::vector<JEpsEstimate>& estimates);

/// Pretty-printed with two-space indent and a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);

}  // namespace she2d
