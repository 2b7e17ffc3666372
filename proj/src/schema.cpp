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

#include "emrgen/schema.hpp"

#include <fstream>
#include <set>

namespace emrgen {

std::string_view to_string(FieldCategory category) {
  switch (category) {
    case FieldCategory::structured: return "structured";
    case FieldCategory::semi_structured: return "semi_structured";
    case FieldCategory::unstructured: return "unstructured";
  }
  return "unstructured";
}

std::optional<FieldCategory> parse_field_category(std::string_view text) {
  if (text == "structured") return FieldCategory::structured;
  if (text == "semi_structured") return FieldCategory::semi_structured;
  if (text == "unstructured") return FieldCategory::unstructured;
  return std::nullopt;
}

bool is_valid_field_id(std::string_view id) {
  if (id.empty() || id[0] < 'a' || id[0] > 'z') return false;
  for (char c : id) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')) return false;
  }
  return true;
}

RecordSchema::RecordSchema(std::string name, std::vector<FieldSpec> fields)
    : name_(std::move(name)), fields_(std::move(fields)) {
  if (fields_.empty()) throw SchemaError("schema '" + name_ + "' has no fields");
  std::set<std::string_view> seen;
  for (const auto& f : fields_) {
    if (!is_valid_field_id(f.id)) throw SchemaError("invalid field id '" + f.id + "'");
    if (!seen.insert(f.id).second) throw SchemaError("duplicate field id '" + f.id + "'");
  }
}

const FieldSpec* RecordSchema::find(std::string_view id) const noexcept {
  for (const auto& f : fields_) {
    if (f.id == id) return &f;
  }
  return nullptr;
}

std::vector<std::string> RecordSchema::ids() const {
  std::vector<std::string> out;
  out.reserve(fields_.size());
  for (const auto& f : fields_) out.push_back(f.id);
  return out;
}

RecordSchema default_schema() {
  using C = FieldCategory;
  return RecordSchema(
      "outpatient_emr",
      {
          {"age", "年龄", C::structured, "患者年龄，含单位"},
          {"gender", "性别", C::structured, "患者性别"},
          {"family_history", "家族史", C::structured, "直系亲属相关疾病史"},
          {"marital_reproductive_history", "婚育史", C::structured, "婚姻及生育情况"},
          {"allergy_history", "过敏史", C::structured, "药物及食物过敏情况"},
          {"chief_complaint", "主诉", C::semi_structured, "主要症状及持续时间"},
          {"present_illness_history", "现病史", C::semi_structured, "本次发病经过、症状演变及诊治情况"},
          {"past_medical_history", "既往史", C::semi_structured, "既往疾病、手术及用药情况"},
          {"preliminary_diagnosis", "初步诊断", C::unstructured, "医生给出的初步诊断"},
          {"treatment_recommendations", "治疗建议", C::unstructured, "检查、用药及随访建议"},
      });
}

nlohmann::ordered_json schema_to_json(const RecordSchema& schema) {
  nlohmann::ordered_json fields = nlohmann::ordered_json::array();
  for (const auto& f : schema.fields()) {
    fields.push_back({{"id", f.id},
                      {"display_name", f.display_name},
                      {"category", to_string(f.category)},
                      {"description", f.description}});
  }
  return {{"name", schema.name()}, {"fields", std::move(fields)}};
}

RecordSchema schema_from_json(const nlohmann::json& json) {
  if (!json.is_object() || !json.contains("fields") || !json["fields"].is_array()) {
    throw SchemaError("schema JSON must be an object with a \"fields\" array");
  }
  std::vector<FieldSpec> fields;
  for (const auto& item : json["fields"]) {
    if (!item.is_object() || !item.contains("id") || !item["id"].is_string()) {
      throw SchemaError("schema field entry without string \"id\"");
    }
    FieldSpec f;
    f.id = item["id"].get<std::string>();
    f.display_name = item.value("display_name", f.id);
    const auto category = item.value("category", std::string("unstructured"));
    const auto parsed = parse_field_category(category);
    if (!parsed) throw SchemaError("field '" + f.id + "' has unknown category '" + category + "'");
    f.category = *parsed;
    f.description = item.value("description", std::string());
    fields.push_back(std::move(f));
  }
  return RecordSchema(json.value("name", std::string("schema")), std::move(fields));
}

RecordSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file " + path.string());
  nlohmann::json json;
  try {
    in >> json;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema file " + path.string() + ": " + e.what());
  }
  return schema_from_json(json);
}

void save_schema(const RecordSchema& schema, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write schema file " + path.string());
  out << schema_to_json(schema).dump(2) << '\n';
}

const std::string& StructuredRecord::value(std::string_view id) const {
  static const std::string kEmpty;
  const auto it = values_.find(std::string(id));
  return it == values_.end() ? kEmpty : it->second;
}

bool operator==(const StructuredRecord& a, const StructuredRecord& b) {
  for (const auto& [key, value] : a.values_) {
    if (value != b.value(key)) return false;
  }
  for (const auto& [key, value] : b.values_) {
    if (value != a.value(key)) return false;
  }
  return true;
}

ValidationReport validate_record(const RecordSchema& schema, const StructuredRecord& record) {
  ValidationReport report;
  for (const auto& [key, value] : record.values()) {
    if (!schema.contains(key)) report.unknown_keys.push_back(key);
  }
  for (const auto& f : schema.fields()) {
    if (!record.has(f.id)) report.missing_keys.push_back(f.id);
  }
  return report;
}

}  // namespace emrgen
