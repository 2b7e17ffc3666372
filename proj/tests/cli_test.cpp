// Copyright 2026 The emrgen Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "emrgen/cli.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "emrgen/harness.hpp"
#include "emrgen/mock_endpoint.hpp"
#include "test_support.hpp"

namespace emrgen::cli {
namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "emrgen");
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

TEST(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
  EXPECT_EQ(invoke({}).code, kExitFatal);
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitFatal);
  EXPECT_EQ(invoke({"synth", "--seed", "1"}).code, kExitFatal);
}

TEST(CliTest, SynthIsDeterministic) {
  testing::TempDir dir;
  const auto a = (dir / "a.jsonl").string();
  const auto b = (dir / "b.jsonl").string();
  ASSERT_EQ(invoke({"synth", "--seed", "42", "--count", "5", "--out", a}).code, kExitOk);
  ASSERT_EQ(invoke({"synth", "--seed", "42", "--count", "5", "--out", b}).code, kExitOk);
  EXPECT_EQ(testing::read_file(a), testing::read_file(b));
  EXPECT_EQ(read_corpus(a).size(), 5u);
}

TEST(CliTest, CleanMasksAndDropsEmptyDialogues) {
  testing::TempDir dir;
  std::vector<QAPair> pairs{
      {{"d1", {{Speaker::patient, "嗯，电话13812345678"}}, {}, {}}, {{"age", "30岁"}}},
      {{"d2", {{Speaker::patient, "嗯 啊"}}, {}, {}}, {}},
  };
  write_corpus(pairs, dir / "raw.jsonl");
  const auto r = invoke({"clean", "--in", (dir / "raw.jsonl").string(), "--out", (dir / "c.jsonl").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto cleaned = read_corpus(dir / "c.jsonl");
  ASSERT_EQ(cleaned.size(), 1u);
  EXPECT_EQ(cleaned[0].dialogue.turns[0].text, "，电话[PHONE]");
  EXPECT_EQ(cleaned[0].gold.value("age"), "30岁");
}

TEST(CliTest, EncodeDecodeEvalPipeline) {
  testing::TempDir dir;
  const auto corpus = (dir / "c.jsonl").string();
  ASSERT_EQ(invoke({"synth", "--seed", "3", "--count", "6", "--out", corpus}).code, kExitOk);
  for (const std::string style : {"code", "nl"}) {
    const auto prompts = (dir / ("p-" + style + ".jsonl")).string();
    ASSERT_EQ(invoke({"encode", "--style", style, "--in", corpus, "--out", prompts}).code, kExitOk);
    const auto text = testing::read_file(prompts);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);

    // Perfect raw outputs, decoded and scored through the CLI.
    const auto schema = default_schema();
    std::string raw;
    for (const auto& p : read_corpus(corpus)) {
      nlohmann::ordered_json line{{"id", p.dialogue.id},
                                  {"raw", serialize_record(*parse_prompt_style(style), p.gold, schema)}};
      raw += line.dump() + '\n';
    }
    testing::write_file(dir / "raw.jsonl", raw);
    const auto pred = (dir / ("pred-" + style + ".jsonl")).string();
    ASSERT_EQ(invoke({"decode", "--style", style, "--in", (dir / "raw.jsonl").string(), "--out", pred}).code,
              kExitOk);
    const auto report = (dir / "report.json").string();
    const auto r = invoke({"eval", "--gold", corpus, "--pred", pred, "--report", report});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(nlohmann::json::parse(testing::read_file(report))["mean_f1"], 1.0);
  }
}

TEST(CliTest, EvalLengthMismatchExitCode) {
  testing::TempDir dir;
  const auto corpus = (dir / "c.jsonl").string();
  ASSERT_EQ(invoke({"synth", "--seed", "3", "--count", "3", "--out", corpus}).code, kExitOk);
  testing::write_file(dir / "pred.jsonl", R"({"id":"synth-3-00000","fields":{}})" "\n");
  const auto r = invoke({"eval", "--gold", corpus, "--pred", (dir / "pred.jsonl").string(), "--report",
                         (dir / "r.json").string()});
  EXPECT_EQ(r.code, kExitLengthMismatch);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(CliTest, MissingInputIsFatal) {
  testing::TempDir dir;
  const auto r = invoke({"encode", "--style", "code", "--in", (dir / "none.jsonl").string(), "--out",
                         (dir / "o.jsonl").string()});
  EXPECT_EQ(r.code, kExitFatal);
}

TEST(CliTest, ExportAndSchema) {
  testing::TempDir dir;
  const auto corpus = (dir / "c.jsonl").string();
  ASSERT_EQ(invoke({"synth", "--seed", "4", "--count", "2", "--out", corpus}).code, kExitOk);
  ASSERT_EQ(invoke({"export-ft", "--style", "nl", "--in", corpus, "--out", (dir / "ft.jsonl").string()}).code,
            kExitOk);
  const auto r = invoke({"schema"});
  ASSERT_EQ(r.code, kExitOk);
  EXPECT_EQ(schema_from_json(nlohmann::json::parse(r.out)), default_schema());
}

TEST(CliTest, RunMatrixAgainstMockServer) {
  testing::TempDir dir;
  const auto schema = default_schema();
  const auto pairs = synth_corpus(8, 12, schema);
  write_corpus(pairs, dir / "c.jsonl", &schema);

  mock::MockPlan plan;
  plan.corpus = pairs;
  mock::MockChatServer code_server(mock::make_script(plan));
  plan.style = PromptStyle::natural_language;
  mock::MockChatServer nl_server(mock::make_script(plan));

  nlohmann::json matrix{{"experiments",
                         {{{"name", "code"},
                           {"endpoint", {{"base_url", code_server.base_url()}, {"model", "m"}, {"parallelism", 4}}},
                           {"style", "code"},
                           {"corpus", "c.jsonl"},
                           {"output_dir", "out"}},
                          {{"name", "nl"},
                           {"endpoint", {{"base_url", nl_server.base_url()}, {"model", "m"}}},
                           {"style", "nl"},
                           {"corpus", "c.jsonl"},
                           {"output_dir", "out"}}}}};
  testing::write_file(dir / "m.json", matrix.dump());
  const auto r = invoke({"run-matrix", "--config", (dir / "m.json").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const std::string name : {"code", "nl"}) {
    const auto report = nlohmann::json::parse(testing::read_file(dir / "out" / name / "report.json"));
    EXPECT_EQ(report["mean_f1"], 1.0) << name;
    EXPECT_EQ(report["config"], name);
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / name / "fields.txt"));
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "summary.txt"));
}

}  // namespace
}  // namespace emrgen::cli
