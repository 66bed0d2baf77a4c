/* Copyright 2026 The Soiling Coverage Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Runs the soilcov binary end to end and checks outputs and exit codes.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run soilcov(const std::string& args) {
  const std::string cmd = std::string(SOILCOV_BIN) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("soilcov_cli_" + std::to_string(getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& rel) const { return (dir_ / rel).string(); }

  fs::path dir_;
};

const std::string kData = SOILING_TEST_DATA;

TEST_F(CliTest, AllCleanAnnotationGivesCleanRows) {
  const auto r = soilcov("coverage --annotations " + kData + "/all_clean_annotation.json --out " +
                         path("cov"));
  ASSERT_EQ(r.code, 0);
  std::ifstream in(path("cov/all_clean.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "tile_row,tile_col,clean,transparent,semitransparent,opaque");
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(line.substr(line.find(',', line.find(',') + 1) + 1), "1,0,0,0");
    ++rows;
  }
  EXPECT_EQ(rows, 16);
}

TEST_F(CliTest, EvalAgainstItselfIsPerfect) {
  ASSERT_EQ(soilcov("synth --out " + path("corpus") + " --count 6 --min-blobs 1 --seed 3").code, 0);
  const auto r = soilcov("eval --truth " + path("corpus") + " --pred " + path("corpus") + " --json");
  ASSERT_EQ(r.code, 0);
  const auto report = nlohmann::json::parse(r.out);
  EXPECT_EQ(report.at("rmse_overall").get<double>(), 0.0);
  EXPECT_EQ(report.at("images").get<int>(), 6);
  const auto& raw = report.at("confusion_raw");
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i != j) {
        EXPECT_EQ(raw.at(i).at(j).get<int>(), 0);
      }
    }
  }
}

TEST_F(CliTest, EvalTextShowsTables) {
  ASSERT_EQ(soilcov("coverage --annotations " + kData + " --out " + path("cov")).code, 0);
  const auto r = soilcov("eval --truth " + path("cov") + " --pred " + path("cov"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("semitransparent"), std::string::npos);
  EXPECT_NE(r.out.find("\"rmse_per_class\""), std::string::npos);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(soilcov("").code, 1);
  EXPECT_EQ(soilcov("coverage --out " + path("x")).code, 1);
  EXPECT_EQ(soilcov("synth --out " + path("c") + " --count 2 --width 66").code, 1);
  EXPECT_EQ(soilcov("split --corpus " + path("missing") + " --out " + path("s.json")).code, 2);
  EXPECT_EQ(soilcov("eval --truth " + path("missing") + " --pred " + path("missing")).code, 2);
}

TEST_F(CliTest, HelpListsDefaults) {
  const auto train = soilcov("train --help");
  EXPECT_EQ(train.code, 0);
  for (const char* opt : {"--epochs", "--phase1-epochs", "--batch-size", "--lr", "--seed"}) {
    EXPECT_NE(train.out.find(opt), std::string::npos) << opt;
  }
  EXPECT_NE(train.out.find("[0.001]"), std::string::npos);
  const auto coverage = soilcov("coverage --help");
  EXPECT_NE(coverage.out.find("[4]"), std::string::npos);
}

TEST_F(CliTest, SynthIsByteIdentical) {
  ASSERT_EQ(soilcov("synth --out " + path("a") + " --count 4 --seed 9").code, 0);
  ASSERT_EQ(soilcov("synth --out " + path("b") + " --count 4 --seed 9").code, 0);
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(path("a"))) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), path("a"));
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 0);
}

TEST_F(CliTest, PipelineSmoke) {
  ASSERT_EQ(soilcov("synth --out " + path("corpus") + " --count 30 --seed 5").code, 0);
  ASSERT_EQ(soilcov("split --corpus " + path("corpus") + " --out " + path("split.json")).code, 0);
  ASSERT_EQ(soilcov("train --corpus " + path("corpus") + " --split " + path("split.json") +
                    " --out " + path("run") + " --epochs 1 --batch-size 8")
                .code,
            0);
  EXPECT_TRUE(fs::exists(path("run/model.bin")));
  EXPECT_TRUE(fs::exists(path("run/train_log.jsonl")));
  ASSERT_EQ(soilcov("predict --checkpoint " + path("run/model.bin") + " --corpus " + path("corpus") +
                    " --split " + path("split.json") + " --subset test --out " + path("pred"))
                .code,
            0);
  const auto r = soilcov("eval --truth " + path("corpus") + " --pred " + path("pred") + " --json");
  ASSERT_EQ(r.code, 0);
  const auto report = nlohmann::json::parse(r.out);
  EXPECT_GT(report.at("images").get<int>(), 0);
  for (const char* k : {"clean", "transparent", "semitransparent", "opaque"}) {
    const double v = report.at("rmse_per_class").at(k).get<double>();
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

}  // namespace
