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


#include "she2d/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gtest/gtest.h"
#include "she2d/io.hpp"

namespace she2d {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("she2d_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& text, const std::string& name = "cfg.json") {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "she2d");
    out_.str("");
    err_.str("");
    return run(args, out_, err_);
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, LinearOraclePrintsClosedForms) {
  ASSERT_EQ(run_cli({"linear-oracle", "--Q", "2", "--beta", "1", "--a", "1"}), kExitOk);
  const auto j = nlohmann::json::parse(out_.str());
  EXPECT_NEAR(j["s2"].get<double>(), 0.173348, 5e-7);
  EXPECT_NEAR(j["mu_log"].get<double>(), -0.0866739, 5e-8);
  EXPECT_NEAR(j["second_moment"].get<double>(), 1.18928, 5e-6);
  EXPECT_NEAR(j["jbar_Q"].get<double>(), 0.3076359, 5e-7);
}

TEST_F(CliTest, SupercriticalBetaIsInvalidInput) {
  EXPECT_EQ(run_cli({"linear-oracle", "--beta", "2.6"}), kExitInvalid);
  EXPECT_NE(err_.str().find("sqrt(2*pi)"), std::string::npos);
}

TEST_F(CliTest, UnknownSubcommandAndMissingSubcommand) {
  EXPECT_EQ(run_cli({"frobnicate"}), kExitInvalid);
  EXPECT_EQ(run_cli({}), kExitInvalid);
}

TEST_F(CliTest, MalformedJsonReportsLocation) {
  const auto cfg = write_config("{\n  \"master_seed\": 1,\n  \"nonlinearity\": {,\n}\n");
  EXPECT_EQ(run_cli({"solve-j-pde", "--config", cfg.string()}), kExitInvalid);
  EXPECT_NE(err_.str().find("cfg.json:3:"), std::string::npos) << err_.str();
}

TEST_F(CliTest, UnknownKeyRejected) {
  const auto cfg = write_config(R"({"output_dir": ")" + (dir_ / "o").string() +
                                R"(", "nonlinearity": {"kind": "linear", "beta": 1, "gamma": 2}})");
  EXPECT_EQ(run_cli({"solve-j-pde", "--config", cfg.string()}), kExitInvalid);
  EXPECT_NE(err_.str().find("gamma"), std::string::npos);
}

TEST_F(CliTest, MissingSeedRejectedForStochasticCommands) {
  const auto cfg = write_config(R"({"output_dir": ")" + (dir_ / "o").string() +
                                R"(", "j": {"kind": "zero"}, "sde": {"n_paths": 10}})");
  EXPECT_EQ(run_cli({"simulate-xi", "--config", cfg.string()}), kExitInvalid);
  EXPECT_NE(err_.str().find("master_seed"), std::string::npos);
  EXPECT_EQ(run_cli({"simulate-xi", "--config", cfg.string(), "--seed", "3"}), kExitOk);
}

TEST_F(CliTest, MissingConfigFileIsInvalid) {
  EXPECT_EQ(run_cli({"solve-j", "--config", (dir_ / "nope.json").string()}), kExitInvalid);
}

TEST_F(CliTest, SolveJPdeWritesArtifactsAndManifest) {
  const auto out = dir_ / "pde";
  const auto cfg = write_config(R"({"output_dir": ")" + out.string() + R"(",
    "nonlinearity": {"kind": "linear", "beta": 1},
    "grid": {"q_step": 0.1, "b_max": 4, "b_step": 0.1},
    "pde": {"dq": 0.002, "scheme": "semi_implicit"}})");
  ASSERT_EQ(run_cli({"solve-j-pde", "--config", cfg.string()}), kExitOk) << err_.str();
  const auto grid = read_grid_csv(out / "grid.csv", 1.0);
  EXPECT_EQ(grid.nq(), 21u);
  EXPECT_EQ(grid.nb(), 41u);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(manifest["subcommand"], "solve-j-pde");
  EXPECT_TRUE(manifest["versions"].contains("fftw"));
  EXPECT_EQ(manifest["artifacts"].size(), 2u);

  // The grid comparison reads the CSV back and reports against the closed form.
  const auto cmp = write_config(R"({"output_dir": ")" + (dir_ / "cmp").string() +
                                    R"(", "kind": "grid", "beta": 1, "grid_csv": ")" +
                                    (out / "grid.csv").string() + R"("})",
                                "cmp.json");
  ASSERT_EQ(run_cli({"compare", "--config", cmp.string()}), kExitOk) << err_.str();
  const auto report = nlohmann::json::parse(slurp(dir_ / "cmp" / "comparison.json"));
  EXPECT_LT(report["sup_rel_error"].get<double>(), 1e-2);
  EXPECT_EQ(report["slope_to_bound"].size(), 21u);
}

TEST_F(CliTest, ExplicitCflFailureIsNumerical) {
  const auto cfg = write_config(R"({"output_dir": ")" + (dir_ / "o").string() + R"(",
    "nonlinearity": {"kind": "linear", "beta": 1},
    "grid": {"q_step": 0.1, "b_max": 4, "b_step": 0.01},
    "pde": {"dq": 0.01, "scheme": "explicit"}})");
  EXPECT_EQ(run_cli({"solve-j-pde", "--config", cfg.string()}), kExitNumerical);
}

TEST_F(CliTest, SimulateXiIsReproducibleAcrossThreadCounts) {
  const auto cfg = write_config(R"({"master_seed": 17,
    "j": {"kind": "linear", "beta": 1},
    "sde": {"a": 1, "Q": 2, "dt": 0.002, "n_paths": 300, "record_times": [1.0]}})");
  ASSERT_EQ(run_cli({"simulate-xi", "--config", cfg.string(), "--threads", "1", "--output",
                     (dir_ / "a").string()}),
            kExitOk);
  ASSERT_EQ(run_cli({"simulate-xi", "--config", cfg.string(), "--threads", "3", "--output",
                     (dir_ / "b").string()}),
            kExitOk);
  for (const char* f : {"terminal.csv", "snapshots.csv", "y.csv"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
  EXPECT_EQ(read_terminal_csv(dir_ / "a" / "terminal.csv").size(), 300u);
}

TEST_F(CliTest, MultipointReadsUltrametricMatrix) {
  const auto out = dir_ / "mp";
  const auto cfg = write_config(R"({"master_seed": 2, "output_dir": ")" + out.string() + R"(",
    "j": {"kind": "linear", "beta": 1},
    "sde": {"Q": 2, "dt": 0.002, "n_paths": 50},
    "ultrametric": {"d": [[null, 0.3, 0.9], [0.3, "-inf", 0.9], [0.9, 0.9, null]]}})");
  ASSERT_EQ(run_cli({"simulate-multipoint", "--config", cfg.string()}), kExitOk) << err_.str();
  const auto cols = read_multipoint_csv(out / "terminal.csv");
  ASSERT_EQ(cols.size(), 3u);
  EXPECT_EQ(cols[0].size(), 50u);

  const auto bad = write_config(R"({"master_seed": 2, "output_dir": ")" + out.string() + R"(",
    "j": {"kind": "linear", "beta": 1},
    "sde": {"Q": 2, "dt": 0.002, "n_paths": 50},
    "ultrametric": {"d": [[null, 0.3, 0.9], [0.3, null, 0.5], [0.9, 0.5, null]]}})",
                                "bad.json");
  EXPECT_EQ(run_cli({"simulate-multipoint", "--config", bad.string()}), kExitInvalid);
}

TEST_F(CliTest, SimulateSpdeWritesFields) {
  const auto out = dir_ / "spde";
  const auto cfg = write_config(R"({"master_seed": 4, "output_dir": ")" + out.string() + R"(",
    "nonlinearity": {"kind": "saturating", "beta": 1},
    "spde": {"L": 20, "n_grid": 40, "T": 1, "eps": 0.1},
    "sample_times": [0.5, 1.0], "n_realizations": 2})");
  ASSERT_EQ(run_cli({"simulate-spde", "--config", cfg.string()}), kExitOk) << err_.str();
  EXPECT_TRUE(fs::exists(out / "field_r1_t1.csv"));
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(summary["seeds"].size(), 2u);
}

}  // namespace
}  // namespace she2d
