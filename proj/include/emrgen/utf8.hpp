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

#include <cstddef>
#include <string>
#include <string_view>

// Minimal UTF-8 helpers. Invalid byte sequences decode to U+FFFD one byte
// at a time, so every routine here is total over arbitrary bytes.
namespace emrgen::utf8 {

inline constexpr char32_t kReplacement = 0xFFFD;

struct Decoded {
  char32_t cp;
  std::size_t length;  // bytes consumed, always >= 1
};

/// Decodes the code point starting at `pos`. Requires pos < text.size().
Decoded decode(std::string_view text, std::size_t pos);

void append(std::string& out, char32_t cp);

/// Number of code points (invalid bytes count one each).
std::size_t length(std::string_view text);

/// ASCII whitespace plus the Unicode space separators and line breaks.
bool is_space(char32_t cp);

/// ASCII punctuation/symbols plus the common CJK, full-width and general
/// punctuation blocks.
bool is_punct(char32_t cp);

/// Strips is_space() code points from both ends.
std::string_view trim(std::string_view text);

}  // namespace emrgen::utf8
