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

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "emrgen/corpus.hpp"
#include "emrgen/schema.hpp"

// Prompt encoder. Turns a (schema, dialogue) pair into either a code-style
// prompt, where the model completes a constructor call, or a plain
// natural-language prompt asking for one "name: value" line per field.
//
// Code prompt layout (user text):
//
//   class MedicalRecord:
//       age: str = ""  // 年龄：患者年龄，含单位
//       ...
//
//   // doctor: 您好，请坐。
//   // patient: 医生，我发热三天。
//   //| second line of a multi-line turn
//
//   record = MedicalRecord(
//
// The model answers with the completed constructor, one `key = "value",`
// entry per line, closed by `)`. See decoder.hpp for the accepted grammar.
namespace emrgen {

enum class PromptStyle { code, natural_language };

std::string_view to_string(PromptStyle style);
/// Accepts "code", "nl" and "natural_language".
std::optional<PromptStyle> parse_prompt_style(std::string_view text);

struct RenderedPrompt {
  PromptStyle style = PromptStyle::code;
  std::string system_text;
  std::string user_text;
};

struct FinetuneExample {
  std::string instruction;
  std::string input;
  std::string output;
};

/// Wording knobs. The defaults are used everywhere unless a harness config
/// overrides them.
struct PromptOptions {
  std::string class_name = "MedicalRecord";
  std::string code_instruction =
      "你是一名病历书写助手。阅读代码注释中的医患对话，补全最后一行的构造调用"
      "：每个字段写成 key = \"value\", 的形式，值直接取自对话原文，对话中未提及的字段填 "
      "\"\"。只输出补全后的代码。";
  std::string nl_instruction =
      "你是一名病历书写助手。阅读医患对话，按给定字段顺序逐行输出结构化病历，每行格式为"
      "“字段名: 内容”，内容直接取自对话原文，对话中未提及的字段内容留空。";
};

const PromptOptions& default_prompt_options();

class UnknownField : public std::runtime_error {
 public:
  explicit UnknownField(const std::string& key)
      : std::runtime_error("gold record has field '" + key + "' outside the schema"), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Backslash-escapes `"`, `\` and LF; everything else is copied verbatim.
std::string escape_value(std::string_view text);

RenderedPrompt render_code_prompt(const RecordSchema& schema, const DialogueRecord& dialogue,
                                  const PromptOptions& options = default_prompt_options());
RenderedPrompt render_nl_prompt(const RecordSchema& schema, const DialogueRecord& dialogue,
                                const PromptOptions& options = default_prompt_options());
RenderedPrompt render_prompt(PromptStyle style, const RecordSchema& schema,
                             const DialogueRecord& dialogue,
                             const PromptOptions& options = default_prompt_options());

/// The completed constructor block for `record`, every schema field present
/// in schema order. Keys outside the schema are not emitted.
std::string serialize_code(const StructuredRecord& record, const RecordSchema& schema,
                           std::string_view class_name = "MedicalRecord");

/// One "display_name: value" line per schema field. Continuation lines of a
/// multi-line value are indented by two spaces so they can never be read
/// back as a field header.
std::string serialize_nl(const StructuredRecord& record, const RecordSchema& schema);

std::string serialize_record(PromptStyle style, const StructuredRecord& record,
                             const RecordSchema& schema,
                             const PromptOptions& options = default_prompt_options());

/// Throws UnknownField when the gold record carries a key outside `schema`.
FinetuneExample render_finetune_example(const QAPair& pair, PromptStyle style,
                                        const RecordSchema& schema,
                                        const PromptOptions& options = default_prompt_options());

nlohmann::ordered_json finetune_to_json(const FinetuneExample& example);

}  // namespace emrgen
