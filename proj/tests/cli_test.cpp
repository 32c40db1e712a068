// Copyright 2026 The dphp Authors
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

// Runs the dphp binary end to end.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dphp/json_io.hpp"

namespace dphp {
namespace {

namespace fs = std::filesystem;

const std::string kCli = DPHP_CLI_PATH;
const std::string kConfigDir = DPHP_CONFIG_DIR;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("dphp_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Returns the exit status; stdout and stderr go to files in the scratch dir.
  int Run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " > " + Path("stdout.txt") + " 2> " +
                            Path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string Slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(Run(""), 2);
  EXPECT_EQ(Run("frobnicate"), 2);
  EXPECT_EQ(Run("calibrate --epsilon 1"), 2);
  EXPECT_EQ(Run("eval --task fid --real a --synth b --out c"), 2);
  EXPECT_EQ(Run("train --config " + Path("missing.json") + " --out " + Path("o")), 2);
}

TEST_F(CliTest, CalibrateClassical) {
  ASSERT_EQ(Run("calibrate --epsilon 1 --delta 1e-5 --method classical --out " + Path("c.json")), 0);
  const Json j = ReadJsonFile(Path("c.json"));
  EXPECT_NEAR(j["sigma"].get<double>(), std::sqrt(2.0 * std::log(1.25e5)), 1e-12);
  EXPECT_EQ(j["method"], "classical");
  ASSERT_EQ(Run("calibrate --epsilon 1 --delta 1e-5 --method classical --releases 4 --out " +
                Path("c4.json")),
            0);
  const Json j4 = ReadJsonFile(Path("c4.json"));
  EXPECT_NEAR(j4["sigma"].get<double>(), 2.0 * j["sigma"].get<double>(), 1e-12);
  EXPECT_EQ(j4["releases"], 4);
}

TEST_F(CliTest, CalibrateRejectsBadBudgets) {
  EXPECT_EQ(Run("calibrate --epsilon 0 --delta 1e-5"), 2);
  EXPECT_EQ(Run("calibrate --epsilon 1 --delta 1"), 2);
  EXPECT_EQ(Run("calibrate --epsilon 2 --delta 1e-5 --method classical"), 2);
  EXPECT_EQ(Run("calibrate --epsilon 2 --delta 1e-5 --method analytic"), 0);
  EXPECT_NE(Slurp(Path("stdout.txt")).find("\"sigma\""), std::string::npos);
}

TEST_F(CliTest, FeaturesBenchIsDeterministic) {
  const std::string base = "features-bench --config " + kConfigDir +
                           "/features_bench.json --set bench.redraws=2 --out ";
  ASSERT_EQ(Run(base + Path("a")), 0);
  ASSERT_EQ(Run(base + Path("b")), 0);
  for (const char* f : {"hp_error.csv", "rf_error.csv", "bench.json"}) {
    const std::string a = Slurp(Path(std::string("a/") + f));
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, Slurp(Path(std::string("b/") + f))) << f;
  }
  EXPECT_EQ(Slurp(Path("a/hp_error.csv")).rfind("order_or_count,error,stddev\n", 0), 0u);
  EXPECT_EQ(Run("features-bench --config " + kConfigDir +
                "/features_bench.json --set bench.hp_orders=[] --out " + Path("c")),
            2);
}

TEST_F(CliTest, TabularCsvWithoutSchemaFails) {
  {
    std::ofstream cfg(Path("cfg.json"));
    cfg << R"({"task": "tabular", "tabular": {"csv": ")" << kConfigDir
        << R"(/data/toy_census.csv"}})";
  }
  EXPECT_EQ(Run("train --config " + Path("cfg.json") + " --out " + Path("o")), 2);
  EXPECT_NE(Slurp(Path("stderr.txt")).find("schema"), std::string::npos);
}

TEST_F(CliTest, TrainGenerateEval) {
  const std::string train = "train --config " + kConfigDir +
                            "/gmm_nonprivate.json --set train.epochs=2 --set gmm.n_total=1000 "
                            "--set train.hidden=[16] --set eval.num_generated=200 --out ";
  ASSERT_EQ(Run(train + Path("r1")), 0);
  ASSERT_EQ(Run(train + Path("r2")), 0);
  for (const char* f : {"checkpoint.json", "report.json", "samples.csv"}) {
    EXPECT_EQ(Slurp(Path(std::string("r1/") + f)), Slurp(Path(std::string("r2/") + f))) << f;
  }
  const Json report = ReadJsonFile(Path("r1/report.json"));
  EXPECT_EQ(report["config"]["train"]["epochs"], 2);

  const std::string ckpt = Path("r1/checkpoint.json");
  ASSERT_EQ(Run("generate --model " + ckpt + " --n 0 --seed 1 --out " + Path("g0.csv")), 0);
  EXPECT_EQ(Slurp(Path("g0.csv")), "x0,x1,label\n");
  ASSERT_EQ(Run("generate --model " + ckpt + " --n 100 --seed 5 --out " + Path("g1.csv")), 0);
  ASSERT_EQ(Run("generate --model " + ckpt + " --n 100 --seed 5 --out " + Path("g2.csv")), 0);
  EXPECT_EQ(Slurp(Path("g1.csv")), Slurp(Path("g2.csv")));
  EXPECT_EQ(Run("generate --model " + Path("nope.json") + " --n 1 --seed 1 --out " +
                Path("g3.csv")),
            2);

  const std::string real = Path("r1/samples.csv");
  ASSERT_EQ(Run("eval --task nll --real " + real + " --synth " + real + " --out " +
                Path("nll.json")),
            0);
  const Json nll = ReadJsonFile(Path("nll.json"));
  EXPECT_EQ(nll["real_nll"], nll["synth_nll"]);
  ASSERT_EQ(Run("eval --task marginals --alpha 2 --real " + real + " --synth " + Path("g1.csv") +
                " --out " + Path("m.json")),
            0);
  EXPECT_GE(ReadJsonFile(Path("m.json"))["mean_tv_error"].get<double>(), 0.0);
  ASSERT_EQ(Run("eval --task marginals --alpha 3 --real " + real + " --synth " + real +
                " --out " + Path("m0.json")),
            0);
  EXPECT_EQ(ReadJsonFile(Path("m0.json"))["mean_tv_error"], 0.0);
  EXPECT_EQ(Run("eval --task marginals --alpha 4 --real " + real + " --synth " + real +
                " --out " + Path("m4.json")),
            2);
}

TEST_F(CliTest, SeedOverrideChangesOutput) {
  const std::string train = "train --config " + kConfigDir +
                            "/gmm_nonprivate.json --set train.epochs=1 --set gmm.n_total=500 "
                            "--set train.hidden=[8] --set eval.num_generated=50 --out ";
  ASSERT_EQ(Run(train + Path("a") + " --seed 1"), 0);
  ASSERT_EQ(Run(train + Path("b") + " --seed 2"), 0);
  EXPECT_NE(Slurp(Path("a/samples.csv")), Slurp(Path("b/samples.csv")));
  EXPECT_NE(ReadJsonFile(Path("a/report.json"))["config_hash"],
            ReadJsonFile(Path("b/report.json"))["config_hash"]);
}

}  // namespace
}  // namespace dphp
