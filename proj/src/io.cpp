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

#include "she2d/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "she2d/errors.hpp"

namespace she2d {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  return in;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_real(const std::string& s, const std::filesystem::path& path,
                  std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() && s.find_first_not_of(" \r", used) != std::string::npos) {
      throw std::invalid_argument(s);
    }
    return v;
  } catch (const std::exception&) {
    std::ostringstream msg;
    msg << path.string() << ":" << line << ": not a number: '" << s << "'";
    throw ConfigError(msg.str());
  }
}

// Rows of a CSV with a header; every row must have `width` cells.
std::vector<std::vector<double>> read_table(const std::filesystem::path& path,
                                            std::vector<std::string>* header) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  *header = split(line);
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header->size()) {
      std::ostringstream msg;
      msg << path.string() << ":" << line_no << ": expected " << header->size()
          << " columns, got " << cells.size();
      throw ConfigError(msg.str());
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_real(c, path, line_no));
    rows.push_back(std::move(row));
  }
  return rows;
}

void require_header(const std::filesystem::path& path,
                    const std::vector<std::string>& got,
                    const std::vector<std::string>& want) {
  if (got != want) {
    std::string expected;
    for (const auto& w : want) expected += (expected.empty() ? "" : ",") + w;
    throw ConfigError(path.string() + ": expected header " + expected);
  }
}

}  // namespace

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_grid_csv(const std::filesystem::path& path, const DecouplingGrid& grid) {
  std::ofstream out = open_out(path);
  out << "q,b,J\n";
  for (std::size_t i = 0; i < grid.nq(); ++i) {
    for (std::size_t j = 0; j < grid.nb(); ++j) {
      out << format_real(grid.q_nodes()[i]) << ',' << format_real(grid.b_nodes()[j])
          << ',' << format_real(grid.at(i, j)) << '\n';
    }
  }
}

DecouplingGrid read_grid_csv(const std::filesystem::path& path, double beta) {
  std::vector<std::string> header;
  const auto rows = read_table(path, &header);
  require_header(path, header, {"q", "b", "J"});
  if (rows.empty()) throw ConfigError(path.string() + ": no grid rows");
  std::vector<double> qs, bs;
  for (const auto& r : rows) {
    if (qs.empty() || r[0] != qs.back()) qs.push_back(r[0]);
  }
  for (const auto& r : rows) {
    if (r[0] != qs.front()) break;
    bs.push_back(r[1]);
  }
  if (qs.size() * bs.size() != rows.size()) {
    throw ConfigError(path.string() + ": rows do not form a q x b tensor grid");
  }
  std::vector<double> values;
  values.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k][0] != qs[k / bs.size()] || rows[k][1] != bs[k % bs.size()]) {
      throw ConfigError(path.string() + ": rows are not ordered by q then b");
    }
    values.push_back(rows[k][2]);
  }
  return DecouplingGrid(std::move(qs), std::move(bs), std::move(values), beta);
}

void write_terminal_csv(const std::filesystem::path& path,
                        const std::vector<double>& values) {
  std::ofstream out = open_out(path);
  out << "path_id,value\n";
  for (std::size_t p = 0; p < values.size(); ++p) {
    out << p << ',' << format_real(values[p]) << '\n';
  }
}

std::vector<double> read_terminal_csv(const std::filesystem::path& path) {
  std::vector<std::string> header;
  const auto rows = read_table(path, &header);
  require_header(path, header, {"path_id", "value"});
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[1]);
  return out;
}

void write_multipoint_csv(const std::filesystem::path& path,
                          const std::vector<PathEnsemble>& coords) {
  std::ofstream out = open_out(path);
  out << "path_id";
  for (std::size_t j = 0; j < coords.size(); ++j) out << ",coord_" << j + 1;
  out << '\n';
  const std::size_t n = coords.empty() ? 0 : coords.front().n_paths();
  for (std::size_t p = 0; p < n; ++p) {
    out << p;
    for (const auto& c : coords) out << ',' << format_real(c.terminal[p]);
    out << '\n';
  }
}

std::vector<std::vector<double>> read_multipoint_csv(
    const std::filesystem::path& path) {
  std::vector<std::string> header;
  const auto rows = read_table(path, &header);
  if (header.size() < 2 || header[0] != "path_id") {
    throw ConfigError(path.string() + ": expected header path_id,coord_1,...");
  }
  std::vector<std::vector<double>> out(header.size() - 1);
  for (const auto& r : rows) {
    for (std::size_t j = 1; j < r.size(); ++j) out[j - 1].push_back(r[j]);
  }
  return out;
}

void write_snapshot_csv(const std::filesystem::path& path, const PathEnsemble& ens,
                        const std::vector<double>& values) {
  const auto& times = ens.params.record_times;
  if (values.size() != ens.n_paths() * times.size()) {
    throw ShapeError("snapshot values do not match paths x record times");
  }
  std::ofstream out = open_out(path);
  out << "path_id,q,value\n";
  for (std::size_t p = 0; p < ens.n_paths(); ++p) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      out << p << ',' << format_real(times[k]) << ','
          << format_real(values[p * times.size() + k]) << '\n';
    }
  }
}

void write_field_csv(const std::filesystem::path& path, const FieldSnapshot& snap) {
  std::ofstream out = open_out(path);
  out << "x_index,y_index,value\n";
  const auto n = static_cast<std::size_t>(snap.n_grid);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      out << x << ',' << y << ',' << format_real(snap.values[y * n + x]) << '\n';
    }
  }
}

void write_jeps_csv(const std::filesystem::path& path,
                    const std::vector<JEpsEstimate>& estimates) {
  std::ofstream out = open_out(path);
  out << "q,j_eps,stderr\n";
  for (const auto& e : estimates) {
    out << format_real(e.q) << ',' << format_real(e.j_eps) << ','
        << format_real(e.std_error) << '\n';
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace she2d
