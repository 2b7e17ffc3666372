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

#include <algorithm>
#include <set>

#include "emrgen/utf8.hpp"

namespace emrgen {

std::string_view to_string(WarningKind kind) {
  switch (kind) {
    case WarningKind::missing_field: return "missing_field";
    case WarningKind::unknown_field: return "unknown_field";
    case WarningKind::unparsed_tail: return "unparsed_tail";
    case WarningKind::repaired_quote: return "repaired_quote";
  }
  return "unparsed_tail";
}

std::optional<WarningKind> parse_warning_kind(std::string_view text) {
  if (text == "missing_field") return WarningKind::missing_field;
  if (text == "unknown_field") return WarningKind::unknown_field;
  if (text == "unparsed_tail") return WarningKind::unparsed_tail;
  if (text == "repaired_quote") return WarningKind::repaired_quote;
  return std::nullopt;
}

std::size_t DecodeResult::count(WarningKind kind) const {
  return static_cast<std::size_t>(std::count_if(warnings.begin(), warnings.end(),
                                                [kind](const auto& w) { return w.kind == kind; }));
}

namespace {

constexpr std::size_t kSnippetBytes = 40;

// Cuts at a code point boundary so the detail stays valid UTF-8.
std::string snippet(std::string_view text) {
  std::size_t end = 0;
  while (end < text.size()) {
    const auto n = utf8::decode(text, end).length;
    if (end + n > kSnippetBytes) break;
    end += n;
  }
  std::string out(text.substr(0, end));
  if (end < text.size()) out += "...";
  return out;
}

void fill_missing(DecodeResult& result, const RecordSchema& schema) {
  for (const auto& f : schema.fields()) {
    if (!result.record.has(f.id)) {
      result.record.set(f.id, "");
      result.warnings.push_back({WarningKind::missing_field, f.id});
    }
  }
}

bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
bool is_ws(char c) { return c == ' ' || c == '\t'; }

// ---------------------------------------------------------------------------
// Code-style blocks
// ---------------------------------------------------------------------------

// Matches `record WS? = WS? IDENT WS? (` at pos; returns the body offset.
std::optional<std::size_t> match_block_header(std::string_view text, std::size_t pos) {
  constexpr std::string_view kKeyword = "record";
  if (text.compare(pos, kKeyword.size(), kKeyword) != 0) return std::nullopt;
  if (pos > 0 && is_ident_char(text[pos - 1])) return std::nullopt;
  auto p = pos + kKeyword.size();
  while (p < text.size() && is_ws(text[p])) ++p;
  if (p >= text.size() || text[p] != '=') return std::nullopt;
  ++p;
  if (p < text.size() && text[p] == '=') return std::nullopt;
  while (p < text.size() && is_ws(text[p])) ++p;
  if (p >= text.size() || !is_ident_start(text[p])) return std::nullopt;
  while (p < text.size() && is_ident_char(text[p])) ++p;
  while (p < text.size() && is_ws(text[p])) ++p;
  if (p >= text.size() || text[p] != '(') return std::nullopt;
  // headers inside a `//` comment line are prompt echo, not answers
  const auto line_start = text.rfind('\n', pos);
  const auto prefix = text.substr(line_start == std::string_view::npos ? 0 : line_start + 1,
                                  pos - (line_start == std::string_view::npos ? 0 : line_start + 1));
  if (prefix.find("//") != std::string_view::npos) return std::nullopt;
  return p + 1;
}

struct ParsedBlock {
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<DecodeWarning> warnings;
  std::size_t end = 0;  // one past the closing paren, or text.size()
  bool closed = false;
};

class BlockParser {
 public:
  BlockParser(std::string_view text, std::size_t body) : text_(text), pos_(body) {}

  ParsedBlock parse() {
    for (;;) {
      skip_separators();
      if (pos_ >= text_.size()) {
        block_.warnings.push_back({WarningKind::unparsed_tail, "block not closed"});
        break;
      }
      if (text_[pos_] == ')') {
        ++pos_;
        block_.closed = true;
        break;
      }
      // a fresh header means this block was abandoned (typically an echoed stub)
      if (match_block_header(text_, pos_)) break;
      if (!parse_entry()) skip_junk();
    }
    block_.end = pos_;
    return std::move(block_);
  }

 private:
  bool at_comment() const { return text_.compare(pos_, 2, "//") == 0; }

  void skip_line() {
    while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
  }

  void skip_ws() {
    while (pos_ < text_.size() && is_ws(text_[pos_])) ++pos_;
  }

  void skip_separators() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (is_ws(c) || c == '\n' || c == '\r' || c == ',') {
        ++pos_;
      } else if (at_comment()) {
        skip_line();
      } else {
        break;
      }
    }
  }

  void skip_junk() {
    const auto start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != '\n' && text_[pos_] != ')') {
      ++pos_;
    }
    if (pos_ == start) ++pos_;
    block_.warnings.push_back(
        {WarningKind::unparsed_tail, "skipped: " + snippet(text_.substr(start, pos_ - start))});
  }

  // Consumes `KEY = value`; returns false without consuming a value when the
  // text at pos_ is not an entry.
  bool parse_entry() {
    const auto start = pos_;
    if (!is_ident_start(text_[pos_])) return false;
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
    std::string key(text_.substr(start, pos_ - start));
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != '=' ||
        (pos_ + 1 < text_.size() && text_[pos_ + 1] == '=')) {
      pos_ = start;
      return false;
    }
    ++pos_;
    skip_ws();
    std::string value = pos_ < text_.size() && text_[pos_] == '"' ? quoted(key) : unquoted(key);
    block_.entries.emplace_back(std::move(key), std::move(value));

    skip_ws();
    if (pos_ < text_.size() && at_comment()) skip_line();
    if (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != '\n' && text_[pos_] != '\r' &&
        text_[pos_] != ')') {
      skip_junk();
    }
    return true;
  }

  std::string quoted(const std::string& key) {
    const auto open = ++pos_;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      pos_ += text_[pos_] == '\\' ? 2 : 1;
    }
    std::string_view raw;
    if (pos_ >= text_.size()) {
      raw = text_.substr(open);
      pos_ = text_.size();
      block_.warnings.push_back({WarningKind::repaired_quote, "unterminated string for " + key});
    } else {
      raw = text_.substr(open, pos_ - open);
      ++pos_;
    }
    auto unescaped = unescape_value(raw);
    for (auto& w : unescaped.warnings) {
      w.detail = key + ": " + w.detail;
      block_.warnings.push_back(std::move(w));
    }
    return std::move(unescaped.text);
  }

  std::string unquoted(const std::string& key) {
    const auto start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != '\n' && text_[pos_] != ')') {
      if (at_comment()) break;
      ++pos_;
    }
    auto value = utf8::trim(text_.substr(start, pos_ - start));
    if (value.size() >= 2 && value.front() == '\'' && value.back() == '\'') {
      value = value.substr(1, value.size() - 2);
    }
    block_.warnings.push_back({WarningKind::repaired_quote, "unquoted value for " + key});
    return std::string(value);
  }

  std::string_view text_;
  std::size_t pos_;
  ParsedBlock block_;
};

// ---------------------------------------------------------------------------
// Natural-language lines
// ---------------------------------------------------------------------------

struct HeaderName {
  std::string name;
  std::size_t field;
};

std::string_view strip_prefix(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix ? s.substr(prefix.size()) : s;
}

// Returns the value part of `line` when it is a header for names[i].
std::optional<std::pair<std::size_t, std::string_view>> match_nl_header(
    std::string_view line, const std::vector<HeaderName>& names) {
  std::string_view s = line;
  for (std::string_view bullet : {"- ", "* ", "• "}) {
    if (s.substr(0, bullet.size()) == bullet) {
      s.remove_prefix(bullet.size());
      break;
    }
  }
  s = strip_prefix(s, "**");
  for (const auto& h : names) {
    if (s.substr(0, h.name.size()) != h.name) continue;
    auto r = strip_prefix(s.substr(h.name.size()), "**");
    while (!r.empty() && is_ws(r.front())) r.remove_prefix(1);
    for (const auto& [open, close] : {std::pair<std::string_view, std::string_view>{"（", "）"},
                                      std::pair<std::string_view, std::string_view>{"(", ")"}}) {
      if (r.substr(0, open.size()) == open) {
        const auto end = r.find(close);
        if (end != std::string_view::npos) r.remove_prefix(end + close.size());
        break;
      }
    }
    r = strip_prefix(r, "**");
    while (!r.empty() && is_ws(r.front())) r.remove_prefix(1);
    std::string_view colon;
    if (r.substr(0, 1) == ":") {
      colon = ":";
    } else if (r.substr(0, 3) == "：") {
      colon = "：";
    } else {
      continue;
    }
    r.remove_prefix(colon.size());
    if (!r.empty() && r.front() == ' ') r.remove_prefix(1);
    return std::pair{h.field, r};
  }
  return std::nullopt;
}

}  // namespace

UnescapeResult unescape_value(std::string_view text) {
  UnescapeResult result;
  result.text.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\') {
      result.text.push_back(text[i]);
      continue;
    }
    if (i + 1 >= text.size()) {
      result.text.push_back('\\');
      result.warnings.push_back({WarningKind::repaired_quote, "dangling backslash"});
      break;
    }
    const char next = text[i + 1];
    if (next == '"' || next == '\\') {
      result.text.push_back(next);
      ++i;
    } else if (next == 'n') {
      result.text.push_back('\n');
      ++i;
    } else {
      const auto n = utf8::decode(text, i + 1).length;
      const auto escaped = text.substr(i + 1, n);
      result.text.append(escaped);
      result.warnings.push_back({WarningKind::repaired_quote, "unknown escape \\" + std::string(escaped)});
      i += n;
    }
  }
  return result;
}

DecodeResult parse_code_output(std::string_view text, const RecordSchema& schema) {
  std::optional<ParsedBlock> chosen;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto hit = text.find("record", pos);
    if (hit == std::string_view::npos) break;
    const auto body = match_block_header(text, hit);
    if (!body) {
      pos = hit + 1;
      continue;
    }
    auto block = BlockParser(text, *body).parse();
    pos = std::max(block.end, hit + 1);
    // an empty trailing block (an echoed stub) does not displace real answers
    if (!chosen || !block.entries.empty() || chosen->entries.empty()) chosen = std::move(block);
  }

  DecodeResult result;
  if (chosen) {
    for (auto& [key, value] : chosen->entries) {
      if (schema.contains(key)) {
        result.record.set_if_absent(key, std::move(value));
      } else {
        result.warnings.push_back({WarningKind::unknown_field, key});
      }
    }
    for (auto& w : chosen->warnings) result.warnings.push_back(std::move(w));
    if (chosen->closed) {
      const auto tail = utf8::trim(text.substr(chosen->end));
      if (!tail.empty()) result.warnings.push_back({WarningKind::unparsed_tail, snippet(tail)});
    }
  }
  fill_missing(result, schema);
  return result;
}

DecodeResult parse_nl_output(std::string_view text, const RecordSchema& schema) {
  std::vector<HeaderName> names;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema.fields()[i];
    if (!f.display_name.empty()) names.push_back({f.display_name, i});
    if (f.id != f.display_name) names.push_back({f.id, i});
  }
  std::stable_sort(names.begin(), names.end(),
                   [](const auto& a, const auto& b) { return a.name.size() > b.name.size(); });

  std::vector<std::optional<std::string>> values(schema.size());
  std::optional<std::size_t> current;  // field receiving continuation lines
  std::size_t pending_blank = 0;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;

    if (const auto header = match_nl_header(line, names)) {
      pending_blank = 0;
      if (values[header->first]) {
        current.reset();
      } else {
        values[header->first] = std::string(header->second);
        current = header->first;
      }
      continue;
    }
    if (!current) continue;
    if (line.empty() || line == "\r") {
      ++pending_blank;
      continue;
    }
    auto& value = *values[*current];
    value.append(pending_blank + 1, '\n');
    pending_blank = 0;
    value += strip_prefix(line, "  ");
  }

  DecodeResult result;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (values[i]) result.record.set(schema.fields()[i].id, std::move(*values[i]));
  }
  fill_missing(result, schema);
  return result;
}

DecodeResult decode_output(PromptStyle style, std::string_view text, const RecordSchema& schema) {
  return style == PromptStyle::code ? parse_code_output(text, schema) : parse_nl_output(text, schema);
}

DecodeResult empty_result(const RecordSchema& schema) {
  DecodeResult result;
  fill_missing(result, schema);
  return result;
}

}  // namespace emrgen
