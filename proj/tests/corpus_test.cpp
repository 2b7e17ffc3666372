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


#include "emrgen/corpus.hpp"

#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"

namespace emrgen {
namespace {

TEST(CleanTextTest, RemovesFillersAndCollapsesWhitespace) {
  const auto& fillers = default_filler_lexicon();
  EXPECT_EQ(clean_text("嗯，我  发热 三天啊", fillers), "，我 发热 三天");
  EXPECT_EQ(clean_text("  就是说那个头痛  \n\t ", fillers), "头痛");
  EXPECT_EQ(clean_text("嗯嗯啊", fillers), "");
  EXPECT_EQ(clean_text("", fillers), "");
}

TEST(CleanTextTest, LongestFillerWins) {
  // "那个" must go as a whole, not leave "个" behind after a shorter match.
  FillerLexicon fillers{"那", "那个"};
  EXPECT_EQ(clean_text("那个药", fillers), "药");
}

TEST(CleanTextTest, SplicedFillerIsRemovedToo) {
  // Deleting the inner "嗯" brings "那" and "个" together.
  FillerLexicon fillers{"嗯", "那个"};
  EXPECT_EQ(clean_text("那嗯个痛", fillers), "痛");
}

TEST(CleanTextTest, EmptyLexiconEntryIgnored) {
  FillerLexicon fillers{"", "嗯"};
  EXPECT_EQ(clean_text("嗯 好", fillers), "好");
}

TEST(CleanTextTest, MatchesRescanOracleAndIsIdempotent) {
  testing::Gen gen(2024);
  const std::vector<std::string> lexicon{"嗯", "啊", "呃", "那个", "就是说"};
  const FillerLexicon fillers(lexicon.begin(), lexicon.end());
  static const std::vector<std::string> kPieces{"嗯", "啊", "那", "个", "就是", "说", "是", " ", "  ", "\t",
                                                "\n", "\xE3\x80\x80", "痛", "发热", "a", "12"};
  for (int i = 0; i < 3000; ++i) {
    std::string raw;
    const auto n = gen.below(14);
    for (std::size_t k = 0; k < n; ++k) raw += kPieces[gen.below(kPieces.size())];
    const auto cleaned = clean_text(raw, fillers);
    ASSERT_EQ(cleaned, testing::clean_oracle(raw, lexicon)) << "raw=" << raw;
    ASSERT_EQ(clean_text(cleaned, fillers), cleaned);
  }
}

TEST(DeidTest, PhoneIdAndLongRuns) {
  const auto& rules = default_deid_rules();
  EXPECT_EQ(deidentify("电话13812345678", rules).text, "电话[PHONE]");
  EXPECT_EQ(deidentify("身份证11010519491231002X号", rules).text, "身份证[ID]号");
  EXPECT_EQ(deidentify("身份证110105194912310021", rules).text, "身份证[ID]");
  EXPECT_EQ(deidentify("病案号1234567", rules).text, "病案号[NUMBER]");
  // 11 digits not starting with 1 is just a long run.
  EXPECT_EQ(deidentify("23812345678", rules).text, "[NUMBER]");
  // A 12-digit run starting with 1 is not a phone number.
  EXPECT_EQ(deidentify("138123456789", rules).text, "[NUMBER]");
}

TEST(DeidTest, ShortNumbersSurvive) {
  const auto& rules = default_deid_rules();
  const auto r = deidentify("血压120/80，体温38.5，服药3天，123456", rules);
  EXPECT_EQ(r.text, "血压120/80，体温38.5，服药3天，123456");
  EXPECT_EQ(r.replacements, 0u);
}

TEST(DeidTest, CountsReplacements) {
  const auto r = deidentify("13812345678 和 13987654321 以及 99999999", default_deid_rules());
  EXPECT_EQ(r.text, "[PHONE] 和 [PHONE] 以及 [NUMBER]");
  EXPECT_EQ(r.replacements, 3u);
}

TEST(DeidTest, RejectsBadTokens) {
  EXPECT_THROW(DeidRuleSet({{PatternClass::phone, "PHONE"}}), std::invalid_argument);
  EXPECT_THROW(DeidRuleSet({{PatternClass::phone, "[phone]"}}), std::invalid_argument);
  EXPECT_THROW(DeidRuleSet({{PatternClass::phone, "[]"}}), std::invalid_argument);
  EXPECT_NO_THROW(DeidRuleSet({{PatternClass::phone, "[MY_TAG]"}}));
}

TEST(DeidTest, NoDigitRunOfSevenSurvivesRandomText) {
  testing::Gen gen(99);
  for (int i = 0; i < 2000; ++i) {
    std::string text;
    const auto n = gen.below(8);
    for (std::size_t k = 0; k < n; ++k) {
      text += gen.cjk(3);
      const auto digits = gen.below(22);
      for (std::size_t d = 0; d < digits; ++d) text += static_cast<char>('0' + gen.below(10));
      if (gen.coin(10)) text += 'X';
    }
    const auto out = deidentify(text, default_deid_rules()).text;
    ASSERT_LT(testing::longest_digit_run(out), 7u) << text;
  }
}

TEST(PreprocessTest, DropsTurnsThatBecomeEmpty) {
  DialogueRecord raw{"d1", {{Speaker::doctor, "嗯"}, {Speaker::patient, "我电话13812345678"}}, "内科", std::nullopt};
  std::size_t replaced = 0;
  const auto out = preprocess_dialogue(raw, default_filler_lexicon(), default_deid_rules(), &replaced);
  ASSERT_TRUE(out.has_value());
  ASSERT_EQ(out->turns.size(), 1u);
  EXPECT_EQ(out->turns[0].speaker, Speaker::patient);
  EXPECT_EQ(out->turns[0].text, "我电话[PHONE]");
  EXPECT_EQ(replaced, 1u);
  EXPECT_EQ(out->department, "内科");

  DialogueRecord all_filler{"d2", {{Speaker::doctor, "嗯 啊"}}, std::nullopt, std::nullopt};
  EXPECT_FALSE(preprocess_dialogue(all_filler, default_filler_lexicon(), default_deid_rules()).has_value());
}

TEST(QAPairTest, BuildChecksLengthsAndIds) {
  std::vector<DialogueRecord> d{{"a", {{Speaker::doctor, "x"}}, {}, {}}, {"b", {{Speaker::doctor, "y"}}, {}, {}}};
  EXPECT_EQ(build_qa_pairs(d, {StructuredRecord{}, StructuredRecord{}}).size(), 2u);
  try {
    build_qa_pairs(d, {StructuredRecord{}});
    FAIL() << "expected LengthMismatch";
  } catch (const LengthMismatch& e) {
    EXPECT_EQ(e.left(), 2u);
    EXPECT_EQ(e.right(), 1u);
  }
  d[1].id = "a";
  EXPECT_THROW(build_qa_pairs(d, {StructuredRecord{}, StructuredRecord{}}), CorpusError);
}

TEST(SynthTest, DeterministicPerSeed) {
  const auto schema = default_schema();
  const auto a = synth_corpus(42, 20, schema);
  const auto b = synth_corpus(42, 20, schema);
  const auto c = synth_corpus(43, 20, schema);
  EXPECT_EQ(a, b);
  EXPECT_NE(serialize_corpus(a, &schema), serialize_corpus(c, &schema));
  EXPECT_EQ(serialize_corpus(a, &schema), serialize_corpus(b, &schema));
}

TEST(SynthTest, GoldValuesAppearInDialogue) {
  const auto schema = default_schema();
  const auto pairs = synth_corpus(5, 100, schema);
  ASSERT_EQ(pairs.size(), 100u);
  std::set<std::string> ids;
  std::size_t empty_fields = 0;
  for (const auto& p : pairs) {
    EXPECT_TRUE(ids.insert(p.dialogue.id).second);
    EXPECT_TRUE(validate_record(schema, p.gold).valid()) << p.dialogue.id;
    std::string all;
    for (const auto& t : p.dialogue.turns) all += t.text + "\n";
    for (const auto& id : schema.ids()) {
      const auto& v = p.gold.value(id);
      if (v.empty()) {
        ++empty_fields;
        continue;
      }
      EXPECT_NE(all.find(v), std::string::npos) << p.dialogue.id << " " << id;
    }
  }
  // Optional history fields are sometimes left blank.
  EXPECT_GT(empty_fields, 0u);
}

TEST(CorpusIoTest, JsonlRoundTrip) {
  const auto schema = default_schema();
  auto pairs = synth_corpus(3, 10, schema);
  pairs[0].dialogue.turns.push_back({Speaker::other, "含\"引号\"和\\反斜杠\n换行"});
  pairs[1].dialogue.department.reset();
  const auto text = serialize_corpus(pairs, &schema);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 10);
  EXPECT_EQ(parse_corpus(text), pairs);

  testing::TempDir dir;
  write_corpus(pairs, dir / "c.jsonl", &schema);
  EXPECT_EQ(read_corpus(dir / "c.jsonl"), pairs);
  EXPECT_THROW(read_corpus(dir / "missing.jsonl"), IoError);
}

TEST(CorpusIoTest, GoldKeysFollowSchemaOrder) {
  const auto schema = default_schema();
  const auto pairs = synth_corpus(1, 1, schema);
  const auto json = pair_to_json(pairs[0], &schema);
  std::vector<std::string> keys;
  for (const auto& [k, v] : json["gold"].items()) keys.push_back(k);
  EXPECT_EQ(keys, schema.ids());
}

TEST(CorpusIoTest, BlankLinesSkippedAndErrorsCarryLineNumbers) {
  const auto schema = default_schema();
  const auto pairs = synth_corpus(9, 2, schema);
  const auto lines = serialize_corpus(pairs, &schema);
  const auto first = lines.substr(0, lines.find('\n') + 1);
  EXPECT_EQ(parse_corpus("\n" + first + "\n").size(), 1u);
  try {
    parse_corpus(first + "\n{broken\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse_corpus(R"({"id":"x","turns":[{"speaker":"alien","text":"t"}],"gold":{}})"), ParseError);
}

}  // namespace
}  // namespace emrgen
