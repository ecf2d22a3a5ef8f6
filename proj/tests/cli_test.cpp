// Copyright 2026 The POET Authors.
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


#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"

namespace poet::cli {
namespace {

namespace fs = std::filesystem;

fs::path config_path(const std::string& name) {
  return fs::path(POET_SOURCE_DIR) / "configs" / name;
}

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("poet_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string c; std::getline(in, c, ',');) out.push_back(c);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

const char* kTinyMlp = R"({
  "seed": 5,
  "model": {"kind": "mlp", "layers": [2, 16, 1]},
  "spo": {"merge_every": 10},
  "schedule": {"steps": 40, "eval_every": 10, "batch_size": 16},
  "data": {"train_size": 64, "val_size": 32}
})";

int run_binary(const std::string& args) {
  const std::string cmd = std::string(POET_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(CmdTrain, WritesMetricsAndCheckpoint) {
  const fs::path dir = scratch_dir("train");
  const fs::path cfg = write_file(dir / "mlp.json", kTinyMlp);
  std::ostringstream out, err;
  EXPECT_EQ(cmd_train({.config = cfg, .out_dir = dir / "run"}, out, err), kOk) << err.str();
  std::ifstream in(dir / "run" / "metrics.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto rows = lines(ss.str());
  ASSERT_EQ(rows.size(), 6u);  // header + steps 0, 10, 20, 30, 40
  EXPECT_EQ(rows[0].rfind("step,train_loss,val_loss,lr,he_total,svd_entropy_mean,e_orth_max", 0),
            0u);
  EXPECT_EQ(split(rows[0]).size(), split(rows[5]).size());
  EXPECT_TRUE(fs::exists(dir / "run" / "checkpoint.poet"));
  fs::remove_all(dir);
}

TEST(CmdTrain, ErrorsMapToDistinctExitCodes) {
  const fs::path dir = scratch_dir("codes");
  std::ostringstream out, err;
  const fs::path bad = write_file(dir / "bad.json", R"({"spo": {"merge_every": 0}})");
  EXPECT_EQ(cmd_train({.config = bad, .out_dir = dir / "r"}, out, err), kConfigError);
  EXPECT_NE(err.str().find("merge_every"), std::string::npos) << err.str();

  const fs::path typo = write_file(dir / "typo.json", R"({"shedule": {}})");
  EXPECT_EQ(cmd_train({.config = typo, .out_dir = dir / "r"}, out, err), kConfigError);

  EXPECT_EQ(cmd_train({.config = dir / "absent.json", .out_dir = dir / "r"}, out, err), kIoError);

  const fs::path nocorpus = write_file(
      dir / "lm.json", R"({"model": {"kind": "tiny_lm"}, "data": {"kind": "text", "path": "x.txt"}})");
  EXPECT_EQ(cmd_train({.config = nocorpus, .out_dir = dir / "r"}, out, err), kIoError);

  const fs::path wild = write_file(dir / "wild.json", R"({
    "model": {"kind": "mlp", "layers": [2, 16, 1]}, "spo": {"mode": "direct"},
    "optimizer": {"lr_direct": 1e300, "clip": 1e300},
    "schedule": {"steps": 50, "eval_every": 10, "batch_size": 16}})");
  EXPECT_EQ(cmd_train({.config = wild, .out_dir = dir / "w"}, out, err), kDiverged) << err.str();
  fs::remove_all(dir);
}

TEST(CmdTrain, SeedOverrideAndRerunDeterminism) {
  const fs::path dir = scratch_dir("seed");
  const fs::path cfg = write_file(dir / "mlp.json", kTinyMlp);
  std::ostringstream out, err;
  auto read = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  ASSERT_EQ(cmd_train({.config = cfg, .out_dir = dir / "a"}, out, err), kOk);
  ASSERT_EQ(cmd_train({.config = cfg, .out_dir = dir / "b"}, out, err), kOk);
  ASSERT_EQ(cmd_train({.config = cfg, .out_dir = dir / "c", .seed = 6}, out, err), kOk);
  EXPECT_EQ(read(dir / "a" / "metrics.csv"), read(dir / "b" / "metrics.csv"));
  EXPECT_NE(read(dir / "a" / "metrics.csv"), read(dir / "c" / "metrics.csv"));
  fs::remove_all(dir);
}

TEST(CmdCountParams, LlamaSixtyMillionBlockStochastic) {
  std::ostringstream out, err;
  ASSERT_EQ(cmd_count_params(config_path("llama60m_bs64.json"), out, err), kOk) << err.str();
  const auto rows = lines(out.str());
  ASSERT_EQ(rows.size(), 1u + 8u * 7u + 1u);
  EXPECT_EQ(split(rows.back())[5], "2386944");
  EXPECT_TRUE(err.str().empty());
}

TEST(CmdCountParams, FullyStochasticPerMatrixCount) {
  const fs::path dir = scratch_dir("count");
  const fs::path cfg = write_file(dir / "fs.json", R"({
    "model": {"kind": "mlp", "layers": [2, 16, 16, 1]},
    "spo": {"variant": "fs", "block_size": 2}})");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_count_params(cfg, out, err), kOk) << err.str();
  const auto rows = lines(out.str());
  // fc2 is 16 x 16 with b_R = b_P = 2: b(b-1) = 2.
  bool found = false;
  for (const auto& r : rows) {
    const auto cells = split(r);
    if (cells[0] == "fc2") {
      found = true;
      EXPECT_EQ(cells[5], "2");
    }
  }
  EXPECT_TRUE(found) << out.str();
  fs::remove_all(dir);
}

TEST(CmdCountParams, UnitBlocksWarn) {
  const fs::path dir = scratch_dir("unit");
  const fs::path cfg = write_file(dir / "bs1.json", R"({
    "model": {"kind": "mlp", "layers": [2, 16, 1]},
    "spo": {"variant": "bs", "block_size": 1}})");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_count_params(cfg, out, err), kOk) << err.str();
  EXPECT_EQ(split(lines(out.str()).back())[5], "0");
  EXPECT_NE(err.str().find("warning"), std::string::npos);
  fs::remove_all(dir);
}

class CheckpointCommands : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = scratch_dir("ckpt");
    std::ostringstream out, err;
    const fs::path cfg = write_file(dir_ / "mlp.json", kTinyMlp);
    ASSERT_EQ(cmd_train({.config = cfg, .out_dir = dir_ / "run"}, out, err), kOk);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }
  static fs::path checkpoint() { return dir_ / "run" / "checkpoint.poet"; }
  static inline fs::path dir_;
};

TEST_F(CheckpointCommands, ProbeStartsAtOneAndStaysBounded) {
  for (const char* matrix : {"fc1.R", "fc1.P", "fc2.R", "fc2.P"}) {
    std::ostringstream out, err;
    ASSERT_EQ(cmd_probe(checkpoint(), matrix, out, err), kOk) << err.str();
    const auto rows = lines(out.str());
    ASSERT_EQ(rows[0], "step,cosine");
    ASSERT_GE(rows.size(), 3u);
    EXPECT_EQ(rows[1], "0,1") << matrix;
    for (std::size_t i = 2; i < rows.size(); ++i) {
      const double v = std::stod(split(rows[i])[1]);
      EXPECT_GE(v, -1.01);
      EXPECT_LE(v, 1.01);
    }
  }
}

TEST_F(CheckpointCommands, UnknownMatrixListsTheAvailableOnes) {
  std::ostringstream out, err;
  EXPECT_NE(cmd_probe(checkpoint(), "fc9.R", out, err), kOk);
  EXPECT_NE(err.str().find("fc1.R"), std::string::npos) << err.str();
  std::ostringstream out2, err2;
  EXPECT_NE(cmd_spectrum(checkpoint(), "fc9", out2, err2), kOk);
  EXPECT_NE(err2.str().find("fc1"), std::string::npos) << err2.str();
}

TEST_F(CheckpointCommands, SpectrumTrajectory) {
  std::ostringstream out, err;
  ASSERT_EQ(cmd_spectrum(checkpoint(), "fc1", out, err), kOk) << err.str();
  const auto rows = lines(out.str());
  EXPECT_EQ(rows[0], "step,sigma_1,sigma_2");
  EXPECT_EQ(rows.size(), 6u);
  EXPECT_EQ(split(rows[1])[0], "0");
}

TEST_F(CheckpointCommands, CorruptCheckpointIsReported) {
  const fs::path copy = dir_ / "corrupt.poet";
  fs::copy_file(checkpoint(), copy, fs::copy_options::overwrite_existing);
  {
    std::fstream f(copy, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-20, std::ios::end);
    char c;
    f.read(&c, 1);
    f.seekp(-20, std::ios::end);
    c = static_cast<char>(c ^ 0x40);
    f.write(&c, 1);
  }
  std::ostringstream out, err;
  EXPECT_NE(cmd_spectrum(copy, "fc1", out, err), kOk);
  EXPECT_NE(err.str().find("checksum"), std::string::npos) << err.str();
}

TEST(CmdFactorize, FullBlockNeedsOnePrimitive) {
  std::ostringstream out, err;
  ASSERT_EQ(cmd_factorize(6, 6, 1.0, 1, 10, out, err), kOk) << err.str();
  const std::string s = out.str();
  EXPECT_NE(s.find("success_rate,1\n"), std::string::npos) << s;
  EXPECT_NE(s.find("mean_primitives,1\n"), std::string::npos) << s;
}

TEST(CmdFactorize, SmallBudgetIsReportedNotFatal) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_factorize(8, 2, 0.1, 1, 5, out, err), kOk);
  EXPECT_NE(out.str().find("budget_exhausted,5"), std::string::npos) << out.str();
  EXPECT_NE(err.str().find("budget exhausted"), std::string::npos);
}

TEST(CmdFactorize, InfeasibleArguments) {
  std::ostringstream out, err;
  EXPECT_NE(cmd_factorize(8, 1, 4.0, 1, 5, out, err), kOk);
  EXPECT_NE(cmd_factorize(8, 9, 4.0, 1, 5, out, err), kOk);
  EXPECT_NE(cmd_factorize(65, 8, 4.0, 1, 5, out, err), kOk);
  EXPECT_NE(cmd_factorize(8, 3, 0.0, 1, 5, out, err), kOk);
}

TEST(Binary, ExitCodes) {
  const fs::path dir = scratch_dir("binary");
  const fs::path cfg = write_file(dir / "mlp.json", kTinyMlp);
  const fs::path bad = write_file(dir / "bad.json", R"({"spo": {"merge_every": 0}})");
  EXPECT_EQ(run_binary("train --config " + cfg.string() + " --out " + (dir / "r").string()), 0);
  EXPECT_EQ(run_binary("train --config " + bad.string() + " --out " + (dir / "r").string()), 2);
  EXPECT_EQ(run_binary("train --config " + (dir / "absent.json").string()), 3);
  EXPECT_EQ(run_binary("count-params --config " + config_path("llama60m_bs64.json").string()), 0);
  EXPECT_NE(run_binary("no-such-command"), 0);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace poet::cli
