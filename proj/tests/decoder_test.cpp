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


#include "emrgen/decoder.hpp"

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace emrgen {
namespace {

const RecordSchema& schema() {
  static const RecordSchema kSchema = default_schema();
  return kSchema;
}

void expect_complete(const DecodeResult& r) {
  EXPECT_TRUE(validate_record(schema(), r.record).valid());
}

TEST(UnescapeTest, KnownAndUnknownEscapes) {
  EXPECT_EQ(unescape_value(R"(a\"b\\c\nd)").text, "a\"b\\c\nd");
  EXPECT_TRUE(unescape_value(R"(a\"b)").warnings.empty());
  const auto unknown = unescape_value(R"(x\t)");
  EXPECT_EQ(unknown.text, "xt");
  ASSERT_EQ(unknown.warnings.size(), 1u);
  EXPECT_EQ(unknown.warnings[0].kind, WarningKind::repaired_quote);
  const auto dangling = unescape_value("x\\");
  EXPECT_EQ(dangling.text, "x\\");
  EXPECT_EQ(dangling.warnings.size(), 1u);
}

TEST(WarningKindTest, Names) {
  for (auto k : {WarningKind::missing_field, WarningKind::unknown_field, WarningKind::unparsed_tail,
                 WarningKind::repaired_quote}) {
    EXPECT_EQ(parse_warning_kind(to_string(k)), k);
  }
  EXPECT_FALSE(parse_warning_kind("other").has_value());
}

TEST(CodeDecoderTest, CleanBlock) {
  const auto r = parse_code_output(
      "record = MedicalRecord(\n    age = \"45岁\",\n    gender = \"男\",\n    chief_complaint = \"发热三天\"\n)",
      schema());
  EXPECT_EQ(r.record.value("age"), "45岁");
  EXPECT_EQ(r.record.value("gender"), "男");
  EXPECT_EQ(r.record.value("chief_complaint"), "发热三天");
  EXPECT_EQ(r.count(WarningKind::missing_field), 7u);
  EXPECT_EQ(r.count(WarningKind::unparsed_tail), 0u);
  expect_complete(r);
}

TEST(CodeDecoderTest, SingleLineAndTrailingComma) {
  const auto r = parse_code_output(R"(record=Emr(age="3岁",gender="女",))", schema());
  EXPECT_EQ(r.record.value("age"), "3岁");
  EXPECT_EQ(r.record.value("gender"), "女");
  EXPECT_EQ(r.count(WarningKind::unparsed_tail), 0u);
}

TEST(CodeDecoderTest, MarkdownFenceAndProseAround) {
  const auto r = parse_code_output(
      "好的，以下是病历：\n```python\nrecord = MedicalRecord(\n    age = \"45岁\",\n)\n```\n希望有帮助。", schema());
  EXPECT_EQ(r.record.value("age"), "45岁");
  EXPECT_EQ(r.count(WarningKind::unparsed_tail), 1u);  // the closing fence and sign-off
}

TEST(CodeDecoderTest, EchoedPromptIgnored) {
  // The model repeats the prompt (comment lines and the open stub) first.
  const std::string out =
      "// patient: record = MedicalRecord(age = \"wrong\")\n"
      "record = MedicalRecord(\n"
      "record = MedicalRecord(\n    age = \"45岁\",\n)";
  const auto r = parse_code_output(out, schema());
  EXPECT_EQ(r.record.value("age"), "45岁");
}

TEST(CodeDecoderTest, LastNonEmptyBlockWins) {
  const auto r = parse_code_output(
      "record = MedicalRecord(age = \"1岁\")\nrecord = MedicalRecord(age = \"2岁\")\nrecord = MedicalRecord()",
      schema());
  EXPECT_EQ(r.record.value("age"), "2岁");
}

TEST(CodeDecoderTest, DuplicateKeyFirstWins) {
  const auto r = parse_code_output(R"(record = R(age = "1岁", age = "2岁"))", schema());
  EXPECT_EQ(r.record.value("age"), "1岁");
}

TEST(CodeDecoderTest, UnknownKeysWarned) {
  const auto r = parse_code_output(R"(record = R(zodiac = "牛", age = "1岁"))", schema());
  EXPECT_FALSE(r.record.has("zodiac"));
  ASSERT_EQ(r.count(WarningKind::unknown_field), 1u);
  expect_complete(r);
}

TEST(CodeDecoderTest, UnquotedValuesRepaired) {
  const auto r = parse_code_output("record = R(\n  age = 45岁,\n  gender = '男'\n)", schema());
  EXPECT_EQ(r.record.value("age"), "45岁");
  EXPECT_EQ(r.record.value("gender"), "男");
  EXPECT_EQ(r.count(WarningKind::repaired_quote), 2u);
}

TEST(CodeDecoderTest, TruncatedOutputKeepsWhatItHas) {
  const auto r = parse_code_output("record = R(\n  age = \"45岁\",\n  gender = \"男", schema());
  EXPECT_EQ(r.record.value("age"), "45岁");
  EXPECT_EQ(r.record.value("gender"), "男");
  EXPECT_GE(r.count(WarningKind::repaired_quote), 1u);
  EXPECT_GE(r.count(WarningKind::unparsed_tail), 1u);
  expect_complete(r);
}

TEST(CodeDecoderTest, CommentsInsideBlockSkipped) {
  const auto r = parse_code_output("record = R(\n  // 年龄\n  age = \"45岁\",  // from turn 2\n)", schema());
  EXPECT_EQ(r.record.value("age"), "45岁");
  EXPECT_EQ(r.count(WarningKind::unparsed_tail), 0u);
}

TEST(CodeDecoderTest, NoBlockGivesAllMissing) {
  const auto r = parse_code_output("抱歉，我无法回答。", schema());
  EXPECT_EQ(r.count(WarningKind::missing_field), schema().size());
  expect_complete(r);
  EXPECT_EQ(r.record, empty_result(schema()).record);
}

TEST(NlDecoderTest, PlainLines) {
  const auto r = parse_nl_output("年龄: 45岁\n性别：男\n主诉: 发热三天", schema());
  EXPECT_EQ(r.record.value("age"), "45岁");
  EXPECT_EQ(r.record.value("gender"), "男");
  EXPECT_EQ(r.record.value("chief_complaint"), "发热三天");
  EXPECT_EQ(r.count(WarningKind::missing_field), 7u);
}

TEST(NlDecoderTest, BulletsBoldParentheticalAndIds) {
  const auto r = parse_nl_output(
      "- **年龄**: 45岁\n* 性别（生理性别）：男\n• chief_complaint: 发热\n**初步诊断**(待定): 上感", schema());
  EXPECT_EQ(r.record.value("age"), "45岁");
  EXPECT_EQ(r.record.value("gender"), "男");
  EXPECT_EQ(r.record.value("chief_complaint"), "发热");
  EXPECT_EQ(r.record.value("preliminary_diagnosis"), "上感");
}

TEST(NlDecoderTest, ContinuationAndBlankLines) {
  const auto r = parse_nl_output("现病史: 第一行\n  第二行\n\n  第四行\n\n既往史: 无\n\n", schema());
  EXPECT_EQ(r.record.value("present_illness_history"), "第一行\n第二行\n\n第四行");
  EXPECT_EQ(r.record.value("past_medical_history"), "无");
}

TEST(NlDecoderTest, FirstHeaderWins) {
  const auto r = parse_nl_output("年龄: 45岁\n年龄: 50岁\n  tail", schema());
  EXPECT_EQ(r.record.value("age"), "45岁");
}

TEST(NlDecoderTest, ProseBeforeFirstHeaderIgnored) {
  const auto r = parse_nl_output("好的，病历如下：\n\n年龄: 45岁", schema());
  EXPECT_EQ(r.record.value("age"), "45岁");
}

TEST(RoundTripTest, BothStylesOnNastyValues) {
  testing::Gen gen(31337);
  for (int i = 0; i < 500; ++i) {
    StructuredRecord gold;
    for (const auto& id : schema().ids()) gold.set(id, gen.coin(15) ? "" : gen.nasty(6));
    for (auto style : {PromptStyle::code, PromptStyle::natural_language}) {
      const auto text = serialize_record(style, gold, schema());
      const auto decoded = decode_output(style, text, schema());
      ASSERT_EQ(decoded.record, gold) << to_string(style) << "\n" << text;
      ASSERT_EQ(decoded.count(WarningKind::missing_field), 0u) << text;
    }
  }
}

TEST(FuzzTest, TotalOnRandomBytes) {
  testing::Gen gen(4242);
  for (int i = 0; i < 3000; ++i) {
    const auto text = gen.unicode(80);
    for (auto style : {PromptStyle::code, PromptStyle::natural_language}) {
      const auto r = decode_output(style, text, schema());
      ASSERT_TRUE(validate_record(schema(), r.record).valid());
    }
  }
}

TEST(FuzzTest, MutatedValidOutputsStayTotal) {
  testing::Gen gen(77);
  const auto pairs = synth_corpus(77, 20, schema());
  for (int i = 0; i < 2000; ++i) {
    const auto style = gen.coin() ? PromptStyle::code : PromptStyle::natural_language;
    auto text = serialize_record(style, pairs[gen.below(pairs.size())].gold, schema());
    for (int m = 0; m < 4; ++m) {
      const auto at = gen.below(text.size() + 1);
      switch (gen.below(3)) {
        case 0: text.erase(at, gen.below(8)); break;
        case 1: text.insert(at, gen.unicode(4)); break;
        default: text.resize(at); break;
      }
    }
    const auto r = decode_output(style, text, schema());
    ASSERT_TRUE(validate_record(schema(), r.record).valid());
  }
}

}  // namespace
}  // namespace emrgen
