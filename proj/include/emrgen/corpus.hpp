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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "emrgen/schema.hpp"

namespace emrgen {

enum class Speaker { doctor, patient, other };

std::string_view to_string(Speaker speaker);
std::optional<Speaker> parse_speaker(std::string_view text);

struct DialogueTurn {
  Speaker speaker = Speaker::other;
  std::string text;

  friend bool operator==(const DialogueTurn&, const DialogueTurn&) = default;
};

struct DialogueRecord {
  std::string id;
  std::vector<DialogueTurn> turns;
  std::optional<std::string> department;
  std::optional<std::string> source;

  friend bool operator==(const DialogueRecord&, const DialogueRecord&) = default;
};

/// One benchmark sample: a cleaned dialogue and its gold record.
struct QAPair {
  DialogueRecord dialogue;
  StructuredRecord gold;

  friend bool operator==(const QAPair&, const QAPair&) = default;
};

class LengthMismatch : public std::runtime_error {
 public:
  LengthMismatch(std::size_t left, std::size_t right);
  std::size_t left() const noexcept { return left_; }
  std::size_t right() const noexcept { return right_; }

 private:
  std::size_t left_;
  std::size_t right_;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed corpus line. Line numbers are 1-based.
class ParseError : public CorpusError {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public CorpusError {
 public:
  using CorpusError::CorpusError;
};

// ---------------------------------------------------------------------------
// Cleaning and de-identification
// ---------------------------------------------------------------------------

using FillerLexicon = std::set<std::string, std::less<>>;

/// {"嗯", "啊", "呃", "那个", "就是说"}
const FillerLexicon& default_filler_lexicon();

/// Deletes filler words (longest match first, left to right, no overlap),
/// collapses ASCII/Unicode whitespace runs to one space and trims. The two
/// passes repeat until the text stops changing, which makes the function
/// idempotent even when a deletion splices a new filler together.
/// Empty lexicon entries are ignored.
std::string clean_text(std::string_view raw, const FillerLexicon& fillers);

enum class PatternClass { phone, national_id, long_digit_run };

struct DeidRule {
  PatternClass pattern;
  std::string token;  // bracketed uppercase tag such as "[PHONE]"
};

class DeidRuleSet {
 public:
  /// Throws std::invalid_argument on a token that is not `[A-Z_]+` in
  /// brackets.
  explicit DeidRuleSet(std::vector<DeidRule> rules);

  const std::vector<DeidRule>& rules() const noexcept { return rules_; }

 private:
  std::vector<DeidRule> rules_;
};

/// phone -> [PHONE], national_id -> [ID], long_digit_run -> [NUMBER].
const DeidRuleSet& default_deid_rules();

struct DeidResult {
  std::string text;
  std::size_t replacements = 0;
};

/// Digit runs are maximal runs of ASCII digits. Rules apply in order:
///   phone           run of exactly 11 digits starting with '1'
///   national_id     run of 18 digits, or 17 digits followed by 'X'/'x'
///   long_digit_run  any run of 7 or more digits
DeidResult deidentify(std::string_view text, const DeidRuleSet& rules);

/// Cleans and de-identifies every turn, dropping turns that end up empty.
/// Returns nullopt when no turn survives.
std::optional<DialogueRecord> preprocess_dialogue(const DialogueRecord& raw,
                                                  const FillerLexicon& fillers,
                                                  const DeidRuleSet& rules,
                                                  std::size_t* replacements = nullptr);

// ---------------------------------------------------------------------------
// Corpus assembly and persistence
// ---------------------------------------------------------------------------

/// Pairs dialogues with golds element-wise. Throws LengthMismatch on
/// differing lengths and CorpusError on a repeated dialogue id.
std::vector<QAPair> build_qa_pairs(std::vector<DialogueRecord> dialogues,
                                   std::vector<StructuredRecord> golds);

/// Deterministic synthetic corpus. Every non-empty gold value occurs
/// verbatim in the dialogue, so a perfect extractor is well defined.
std::vector<QAPair> synth_corpus(std::uint64_t seed, std::size_t n, const RecordSchema& schema);

nlohmann::ordered_json pair_to_json(const QAPair& pair, const RecordSchema* schema = nullptr);
QAPair pair_from_json(const nlohmann::json& json);

/// One compact JSON object per line, LF terminated. Gold keys follow
/// schema order when a schema is given.
std::string serialize_corpus(const std::vector<QAPair>& pairs, const RecordSchema* schema = nullptr);
void write_corpus(const std::vector<QAPair>& pairs, const std::filesystem::path& path,
                  const RecordSchema* schema = nullptr);
/// Blank lines are skipped. Throws ParseError or IoError.
std::vector<QAPair> read_corpus(const std::filesystem::path& path);
std::vector<QAPair> parse_corpus(std::string_view text);

}  // namespace emrgen
