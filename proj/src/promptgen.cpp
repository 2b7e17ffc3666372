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

#include "emrgen/promptgen.hpp"

namespace emrgen {

std::string_view to_string(PromptStyle style) {
  return style == PromptStyle::code ? "code" : "natural_language";
}

std::optional<PromptStyle> parse_prompt_style(std::string_view text) {
  if (text == "code") return PromptStyle::code;
  if (text == "nl" || text == "natural_language") return PromptStyle::natural_language;
  return std::nullopt;
}

const PromptOptions& default_prompt_options() {
  static const PromptOptions kOptions;
  return kOptions;
}

std::string escape_value(std::string_view text) {
  std::string out;
  out.reserve(text.size() + 8);
  for (char c : text) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

namespace {

// Comments are single-line; schema text is flattened before it goes there.
std::string single_line(std::string_view text) {
  std::string out(text);
  for (auto& c : out) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

// Prefixes every line after the first with `continuation`.
void append_multiline(std::string& out, std::string_view text, std::string_view continuation) {
  for (char c : text) {
    out.push_back(c);
    if (c == '\n') out.append(continuation);
  }
}

std::string_view nl_speaker_label(Speaker speaker) {
  switch (speaker) {
    case Speaker::doctor: return "医生";
    case Speaker::patient: return "患者";
    case Speaker::other: return "其他";
  }
  return "其他";
}

}  // namespace

RenderedPrompt render_code_prompt(const RecordSchema& schema, const DialogueRecord& dialogue,
                                  const PromptOptions& options) {
  std::string user;
  user += "class " + options.class_name + ":\n";
  for (const auto& f : schema.fields()) {
    user += "    " + f.id + ": str = \"\"  // " + single_line(f.display_name);
    if (!f.description.empty()) user += "：" + single_line(f.description);
    user += '\n';
  }
  user += '\n';
  for (const auto& turn : dialogue.turns) {
    user += "// ";
    user += to_string(turn.speaker);
    user += ": ";
    append_multiline(user, turn.text, "//| ");
    user += '\n';
  }
  user += '\n';
  user += "record = " + options.class_name + "(";
  return {PromptStyle::code, options.code_instruction, std::move(user)};
}

RenderedPrompt render_nl_prompt(const RecordSchema& schema, const DialogueRecord& dialogue,
                                const PromptOptions& options) {
  std::string user = "请按以下顺序输出字段，每行一个：\n";
  for (const auto& f : schema.fields()) {
    user += single_line(f.display_name);
    if (!f.description.empty()) user += "（" + single_line(f.description) + "）";
    user += '\n';
  }
  user += "\n对话：\n";
  for (const auto& turn : dialogue.turns) {
    user += nl_speaker_label(turn.speaker);
    user += ": ";
    append_multiline(user, turn.text, "  ");
    user += '\n';
  }
  return {PromptStyle::natural_language, options.nl_instruction, std::move(user)};
}

RenderedPrompt render_prompt(PromptStyle style, const RecordSchema& schema,
                             const DialogueRecord& dialogue, const PromptOptions& options) {
  return style == PromptStyle::code ? render_code_prompt(schema, dialogue, options)
                                    : render_nl_prompt(schema, dialogue, options);
}

std::string serialize_code(const StructuredRecord& record, const RecordSchema& schema,
                           std::string_view class_name) {
  std::string out = "record = ";
  out += class_name;
  out += "(\n";
  for (const auto& f : schema.fields()) {
    out += "    " + f.id + " = \"" + escape_value(record.value(f.id)) + "\",\n";
  }
  out += ")";
  return out;
}

std::string serialize_nl(const StructuredRecord& record, const RecordSchema& schema) {
  std::string out;
  for (const auto& f : schema.fields()) {
    if (!out.empty()) out += '\n';
    out += single_line(f.display_name);
    out += ": ";
    append_multiline(out, record.value(f.id), "  ");
  }
  return out;
}

std::string serialize_record(PromptStyle style, const StructuredRecord& record,
                             const RecordSchema& schema, const PromptOptions& options) {
  return style == PromptStyle::code ? serialize_code(record, schema, options.class_name)
                                    : serialize_nl(record, schema);
}

FinetuneExample render_finetune_example(const QAPair& pair, PromptStyle style,
                                        const RecordSchema& schema, const PromptOptions& options) {
  for (const auto& [key, value] : pair.gold.values()) {
    if (!schema.contains(key)) throw UnknownField(key);
  }
  auto prompt = render_prompt(style, schema, pair.dialogue, options);
  return {std::move(prompt.system_text), std::move(prompt.user_text),
          serialize_record(style, pair.gold, schema, options)};
}

nlohmann::ordered_json finetune_to_json(const FinetuneExample& example) {
  return {{"instruction", example.instruction}, {"input", example.input}, {"output", example.output}};
}

}  // namespace emrgen
