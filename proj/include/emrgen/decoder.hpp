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
#include <string>
#include <string_view>
#include <vector>

#include "emrgen/promptgen.hpp"
#include "emrgen/schema.hpp"

// Prompt decoder: recovers a StructuredRecord from raw model output.
//
// Code-style grammar:
//
//   block    := "record" WS? "=" WS? IDENT "(" entries ")"
//   entries  := (entry ("," | LF))*
//   entry    := WS? KEY WS? "=" WS? STRING WS?
//   KEY      := [a-z][a-z0-9_]*
//   STRING   := '"' (ESC | any char except '"' and '\')* '"'
//   ESC      := '\"' | '\\' | '\n'
//
// WS is spaces and tabs. A trailing comma is allowed and `//` comments are
// skipped inside a block. When the output holds several blocks (models
// like to echo the prompt) the last one wins. Blocks that start on a `//`
// comment line are ignored.
//
// Both parsers are total: any byte string yields a DecodeResult.
namespace emrgen {

enum class WarningKind { missing_field, unknown_field, unparsed_tail, repaired_quote };

std::string_view to_string(WarningKind kind);
std::optional<WarningKind> parse_warning_kind(std::string_view text);

struct DecodeWarning {
  WarningKind kind;
  std::string detail;

  friend bool operator==(const DecodeWarning&, const DecodeWarning&) = default;
};

struct DecodeResult {
  StructuredRecord record;  // every schema field present, keys within schema
  std::vector<DecodeWarning> warnings;

  std::size_t count(WarningKind kind) const;
};

struct UnescapeResult {
  std::string text;
  std::vector<DecodeWarning> warnings;
};

/// Inverse of escape_value(). An unknown escape `\x` yields `x` plus a
/// repaired_quote warning; a lone trailing backslash is kept as is.
UnescapeResult unescape_value(std::string_view text);

DecodeResult parse_code_output(std::string_view text, const RecordSchema& schema);

/// Lines of the form `<display name or id>: value` (ASCII or full-width
/// colon, optional bullet and parenthetical after the name). The first
/// header per field wins; following lines accrue to the current field until
/// the next recognised header, with a two-space indent stripped. Blank lines
/// only count when a later continuation line follows them.
DecodeResult parse_nl_output(std::string_view text, const RecordSchema& schema);

DecodeResult decode_output(PromptStyle style, std::string_view text, const RecordSchema& schema);

/// All-empty record with a missing_field warning per schema field.
DecodeResult empty_result(const RecordSchema& schema);

}  // namespace emrgen
