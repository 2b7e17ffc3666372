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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emrgen/corpus.hpp"
#include "emrgen/schema.hpp"

// Field-level extraction scoring.
//
// Each field is scored by token-multiset F1. A sample's overall score is
// the F1 of its fields weighted by the character count of the gold text:
//
//   overall = sum_f w_f * F1_f / sum_f w_f   if sum_f w_f > 0
//           = 0                              otherwise
//
// A field missing from a prediction is scored as empty text.
namespace emrgen {

/// Token -> multiplicity.
using TokenBag = std::map<std::string, std::size_t>;

/// Maximal runs of ASCII letters/digits (lowercased) plus every individual
/// non-ASCII code point that is neither whitespace nor punctuation.
TokenBag tokenize_field(std::string_view text);

struct FieldScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Both empty scores (1, 1, 1). An empty prediction has precision 1, an
/// empty gold with a non-empty prediction has recall 0.
FieldScore field_f1(std::string_view gold, std::string_view pred);

/// Unicode scalar values in the trimmed text.
std::size_t field_weight(std::string_view gold);

struct SampleScore {
  std::string id;
  std::map<std::string, FieldScore> per_field;
  std::map<std::string, std::size_t> weights;
  double overall = 0.0;
};

SampleScore sample_weighted_f1(const StructuredRecord& gold, const StructuredRecord& pred,
                               const RecordSchema& schema);

struct FieldSummary {
  double mean_f1 = 0.0;
  std::size_t support = 0;  // samples with non-empty gold
};

struct EvalReport {
  std::vector<SampleScore> samples;
  double mean_overall = 0.0;
  double std_overall = 0.0;  // n - 1 denominator, 0 for n <= 1
  std::map<std::string, FieldSummary> per_field_macro;
  std::optional<std::string> config_name;
  std::optional<double> temperature;
};

double mean(const std::vector<double>& values);
double sample_stddev(const std::vector<double>& values);

/// Throws LengthMismatch when the lists differ in size.
EvalReport corpus_report(const std::vector<QAPair>& pairs, const std::vector<StructuredRecord>& preds,
                         const RecordSchema& schema);

nlohmann::ordered_json report_to_json(const EvalReport& report, const RecordSchema& schema);

/// Plain-text columns: field, category, mean F1, support.
std::string render_field_table(const EvalReport& report, const RecordSchema& schema);

}  // namespace emrgen
