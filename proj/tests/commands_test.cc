/*
 * Copyright 2026 The FairMod Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fairmod/commands.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace fairmod::cli {
namespace {

namespace fs = std::filesystem;

class CommandsTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("fairmod_cmd_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  // Sex and income split by employment sector.
  void WriteSectorSample() {
    std::string csv = "sex,sec,income\n";
    auto add = [&](int n, const char* row) {
      for (int k = 0; k < n; ++k) csv += std::string(row) + "\n";
    };
    add(9, "1,1,1");
    add(3, "0,1,1");
    add(20, "1,1,0");
    add(30, "0,1,0");
    add(1, "1,0,1");
    add(12, "0,0,1");
    add(20, "1,0,0");
    add(30, "0,0,0");
    WriteTextFile(Path("data.csv"), csv);
    WriteTextFile(Path("schema.json"),
                  R"({"outcome":"income","protected":["sex"],"explanatory":["sec"],"other":[]})");
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CommandsTest, AuditSectorSample) {
  WriteSectorSample();
  AuditOptions options{Path("data.csv"), Path("schema.json"), 0.05, Path("report.json"), true};
  EXPECT_EQ(RunAudit(options, out_, err_), kExitOk) << err_.str();
  const auto report = nlohmann::json::parse(ReadTextFile(Path("report.json")));
  const double expected = ((9.0 / 29 - 3.0 / 33) * 62 + (1.0 / 21 - 12.0 / 42) * 63) / 125;
  EXPECT_NEAR(report.at("glbds").get<double>(), std::abs(expected), 1e-12);
  for (const auto& group : report.at("per_group")) {
    EXPECT_TRUE(group.at("over_limit").get<bool>());
  }
  EXPECT_NE(out_.str().find("oracle"), std::string::npos);
}

TEST_F(CommandsTest, AuditExitCodes) {
  WriteTextFile(Path("fair.csv"), "p,d\n1,1\n0,1\n1,0\n0,0\n");
  WriteTextFile(Path("fair.json"), R"({"outcome":"d","protected":["p"]})");
  EXPECT_EQ(RunAudit({Path("fair.csv"), Path("fair.json"), 0.05, "", false}, out_, err_),
            kExitOk);
  EXPECT_NE(out_.str().find("discrimination-free"), std::string::npos);

  WriteTextFile(Path("unfair.csv"), "p,d\n1,1\n0,0\n1,1\n0,0\n");
  EXPECT_EQ(RunAudit({Path("unfair.csv"), Path("fair.json"), 0.05, "", false}, out_, err_),
            kExitDiscriminatory);
  EXPECT_EQ(RunAudit({Path("fair.csv"), Path("missing.json"), 0.05, "", false}, out_, err_),
            kExitUsage);
  EXPECT_FALSE(err_.str().empty());
}

TEST_F(CommandsTest, BuildAdjustEvaluate) {
  WriteSectorSample();
  const auto ds = internal::LoadData(Path("data.csv"), Path("schema.json"));
  WriteTextFile(Path("pred.csv"), BitColumnToCsv("dhat", ds.Outcome()));

  BuildModelOptions build;
  build.data = Path("data.csv");
  build.predictions = Path("pred.csv");
  build.schema = Path("schema.json");
  build.out = Path("model.json");
  ASSERT_EQ(RunBuildModel(build, out_, err_), kExitOk) << err_.str();
  const auto model = LoadModel(ReadTextFile(Path("model.json")));
  for (const auto& [bits, group] : model.groups) {
    EXPECT_LE(std::abs(group.diagnostics.expected_scores[0]), 0.05 + 1e-6);
  }

  AdjustOptions adjust{Path("data.csv"), Path("pred.csv"), Path("model.json"),
                       Path("schema.json"), 5, Path("adj.csv")};
  ASSERT_EQ(RunAdjust(adjust, out_, err_), kExitOk) << err_.str();
  const std::string first = ReadTextFile(Path("adj.csv"));
  ASSERT_EQ(RunAdjust(adjust, out_, err_), kExitOk);
  EXPECT_EQ(ReadTextFile(Path("adj.csv")), first);
  EXPECT_EQ(first.substr(0, 7), "dfinal\n");
  EXPECT_NE(out_.str().find("\"pass_throughs\":0"), std::string::npos);

  EvaluateOptions evaluate{Path("data.csv"), Path("pred.csv"), Path("adj.csv"),
                           Path("schema.json"), 0.05, Path("eval.json")};
  ASSERT_EQ(RunEvaluate(evaluate, out_, err_), kExitOk) << err_.str();
  const auto doc = nlohmann::json::parse(ReadTextFile(Path("eval.json")));
  EXPECT_FALSE(doc.at("Ori").contains("bcr"));
  EXPECT_DOUBLE_EQ(doc.at("Prd").at("bcr").get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(doc.at("Prd").at("err").get<double>(), 0.0);
  EXPECT_TRUE(doc.at("Adj").contains("ces"));
}

TEST_F(CommandsTest, AllZeroModelLeavesPredictionsAlone) {
  WriteTextFile(Path("data.csv"), "p,d\n1,1\n0,1\n1,0\n0,0\n");
  WriteTextFile(Path("schema.json"), R"({"outcome":"d","protected":["p"]})");
  WriteTextFile(Path("pred.csv"), "dhat\n1\n1\n0\n0\n");
  BuildModelOptions build;
  build.data = Path("data.csv");
  build.predictions = Path("pred.csv");
  build.schema = Path("schema.json");
  build.out = Path("model.json");
  ASSERT_EQ(RunBuildModel(build, out_, err_), kExitOk) << err_.str();
  AdjustOptions adjust{Path("data.csv"), Path("pred.csv"), Path("model.json"),
                       Path("schema.json"), 0, Path("adj.csv")};
  ASSERT_EQ(RunAdjust(adjust, out_, err_), kExitOk);
  EXPECT_EQ(ReadTextFile(Path("adj.csv")), "dfinal\n1\n1\n0\n0\n");
}

TEST_F(CommandsTest, InputErrorsExitOne) {
  WriteSectorSample();
  WriteTextFile(Path("bad_header.csv"), "prediction\n1\n");
  BuildModelOptions build;
  build.data = Path("data.csv");
  build.predictions = Path("bad_header.csv");
  build.schema = Path("schema.json");
  build.out = Path("model.json");
  EXPECT_EQ(RunBuildModel(build, out_, err_), kExitUsage);

  WriteTextFile(Path("short.csv"), "dhat\n1\n0\n");
  build.predictions = Path("short.csv");
  EXPECT_EQ(RunBuildModel(build, out_, err_), kExitUsage);

  // A model built for another schema is refused.
  WriteTextFile(Path("pred.csv"),
                BitColumnToCsv("dhat", internal::LoadData(Path("data.csv"), Path("schema.json")).Outcome()));
  build.predictions = Path("pred.csv");
  ASSERT_EQ(RunBuildModel(build, out_, err_), kExitOk);
  WriteTextFile(Path("schema2.json"),
                R"({"outcome":"income","protected":["sex"],"explanatory":[],"other":["sec"]})");
  AdjustOptions adjust{Path("data.csv"), Path("pred.csv"), Path("model.json"),
                       Path("schema2.json"), 0, Path("adj.csv")};
  EXPECT_EQ(RunAdjust(adjust, out_, err_), kExitUsage);
  EXPECT_NE(err_.str().find("fingerprint"), std::string::npos);
}

TEST_F(CommandsTest, PipelineProducesArtifactsDeterministically) {
  ASSERT_EQ(RunSynthGerman({300, 4, Path("synth")}, out_, err_), kExitOk);
  PipelineOptions options;
  options.data = Path("synth/data.csv");
  options.schema = Path("synth/schema.json");
  options.seed = 12;
  options.epochs = 100;
  const std::vector<std::string> files{"classifier.json", "predictions.csv", "model.json",
                                       "adjusted.csv", "report.json"};
  options.outdir = Path("run1");
  ASSERT_EQ(RunPipeline(options, out_, err_), kExitOk) << err_.str();
  options.outdir = Path("run2");
  ASSERT_EQ(RunPipeline(options, out_, err_), kExitOk);
  for (const auto& f : files) {
    EXPECT_EQ(ReadTextFile(Path("run1/" + f)), ReadTextFile(Path("run2/" + f))) << f;
  }
}

TEST_F(CommandsTest, EveryVariantSatisfiesLimit) {
  WriteSectorSample();
  for (const char* variant : {"norm", "errc", "chg"}) {
    PipelineOptions options;
    options.data = Path("data.csv");
    options.schema = Path("schema.json");
    options.objective = variant;
    options.outdir = Path(variant);
    ASSERT_EQ(RunPipeline(options, out_, err_), kExitOk) << err_.str();
    const auto model = LoadModel(ReadTextFile(Path(std::string(variant) + "/model.json")));
    for (const auto& [bits, group] : model.groups) {
      for (double s : group.diagnostics.expected_scores) EXPECT_LE(std::abs(s), 0.05 + 1e-6);
    }
  }
}

int RunCli(const std::string& args) {
  const int status = std::system((std::string(FAIRMOD_CLI_PATH) + " " + args).c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(CommandsTest, BinaryEndToEnd) {
  WriteSectorSample();
  const std::string quiet = " > " + Path("stdout.txt") + " 2> " + Path("stderr.txt");
  EXPECT_EQ(RunCli("audit " + Path("data.csv") + " " + Path("schema.json") +
                   " --alpha 0.05 --out " + Path("r.json") + quiet),
            0);
  EXPECT_TRUE(fs::exists(Path("r.json")));
  EXPECT_EQ(RunCli("audit " + Path("data.csv") + " " + Path("schema.json") +
                   " --alpha 0.001" + quiet),
            3);
  EXPECT_EQ(RunCli("audit " + Path("data.csv") + " " + Path("nope.json") + quiet), 1);
  EXPECT_EQ(RunCli("audit " + Path("data.csv") + " " + Path("schema.json") +
                   " --alpha 7" + quiet),
            1);
  EXPECT_EQ(RunCli("pipeline " + Path("data.csv") + " " + Path("schema.json") +
                   " --objective chg --seed 3 --outdir " + Path("out") + quiet),
            0);
  for (const char* f : {"classifier.json", "predictions.csv", "model.json", "adjusted.csv",
                        "report.json"}) {
    EXPECT_TRUE(fs::exists(Path(std::string("out/") + f))) << f;
  }
  EXPECT_EQ(RunCli("pipeline " + Path("data.csv") + " " + Path("schema.json") +
                   " --objective l1 --outdir " + Path("out") + quiet),
            1);
}

}  // namespace
}  // namespace fairmod::cli
