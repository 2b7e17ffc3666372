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

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace emrgen {

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FieldCategory { structured, semi_structured, unstructured };

std::string_view to_string(FieldCategory category);
std::optional<FieldCategory> parse_field_category(std::string_view text);

/// One target section of a medical record.
struct FieldSpec {
  std::string id;            // [a-z][a-z0-9_]*, doubles as code member name
  std::string display_name;  // clinical term shown in NL prompts
  FieldCategory category = FieldCategory::unstructured;
  std::string description;

  friend bool operator==(const FieldSpec&, const FieldSpec&) = default;
};

bool is_valid_field_id(std::string_view id);

/// Ordered, non-empty list of fields with pairwise distinct ids. Immutable
/// once constructed.
class RecordSchema {
 public:
  /// Throws SchemaError when the field list is empty, an id is malformed
  /// or two ids collide.
  RecordSchema(std::string name, std::vector<FieldSpec> fields);

  const std::string& name() const noexcept { return name_; }
  const std::vector<FieldSpec>& fields() const noexcept { return fields_; }
  std::size_t size() const noexcept { return fields_.size(); }

  const FieldSpec* find(std::string_view id) const noexcept;
  bool contains(std::string_view id) const noexcept { return find(id) != nullptr; }
  std::vector<std::string> ids() const;

  friend bool operator==(const RecordSchema&, const RecordSchema&) = default;

 private:
  std::string name_;
  std::vector<FieldSpec> fields_;
};

/// The ten-section outpatient record: five structured, three
/// semi-structured and two unstructured fields.
RecordSchema default_schema();

nlohmann::ordered_json schema_to_json(const RecordSchema& schema);
RecordSchema schema_from_json(const nlohmann::json& json);
RecordSchema load_schema(const std::filesystem::path& path);
void save_schema(const RecordSchema& schema, const std::filesystem::path& path);

/// Field id -> text. A field that is absent reads as empty text, and
/// equality treats absent and empty as the same thing.
class StructuredRecord {
 public:
  StructuredRecord() = default;
  StructuredRecord(std::initializer_list<std::pair<const std::string, std::string>> values)
      : values_(values) {}
  explicit StructuredRecord(std::map<std::string, std::string> values)
      : values_(std::move(values)) {}

  /// Empty string when absent.
  const std::string& value(std::string_view id) const;
  bool has(std::string_view id) const { return values_.find(std::string(id)) != values_.end(); }
  void set(std::string id, std::string value) { values_[std::move(id)] = std::move(value); }
  /// Sets only when the key is not present yet; returns whether it was set.
  bool set_if_absent(std::string id, std::string value) {
    return values_.emplace(std::move(id), std::move(value)).second;
  }
  void erase(std::string_view id) { values_.erase(std::string(id)); }

  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  bool empty() const noexcept { return values_.empty(); }

  friend bool operator==(const StructuredRecord& a, const StructuredRecord& b);

 private:
  std::map<std::string, std::string> values_;
};

struct ValidationReport {
  std::vector<std::string> unknown_keys;  // record order (sorted by id)
  std::vector<std::string> missing_keys;  // schema order

  bool valid() const noexcept { return unknown_keys.empty() && missing_keys.empty(); }
};

ValidationReport validate_record(const RecordSchema& schema, const StructuredRecord& record);

}  // namespace emrgen
