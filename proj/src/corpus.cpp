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

#include <array>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "emrgen/utf8.hpp"

namespace emrgen {

std::string_view to_string(Speaker speaker) {
  switch (speaker) {
    case Speaker::doctor: return "doctor";
    case Speaker::patient: return "patient";
    case Speaker::other: return "other";
  }
  return "other";
}

std::optional<Speaker> parse_speaker(std::string_view text) {
  if (text == "doctor") return Speaker::doctor;
  if (text == "patient") return Speaker::patient;
  if (text == "other") return Speaker::other;
  return std::nullopt;
}

LengthMismatch::LengthMismatch(std::size_t left, std::size_t right)
    : std::runtime_error("length mismatch: " + std::to_string(left) + " vs " + std::to_string(right)),
      left_(left),
      right_(right) {}

ParseError::ParseError(std::size_t line, const std::string& what)
    : CorpusError("line " + std::to_string(line) + ": " + what), line_(line) {}

// ---------------------------------------------------------------------------

const FillerLexicon& default_filler_lexicon() {
  static const FillerLexicon kLexicon{"嗯", "啊", "呃", "那个", "就是说"};
  return kLexicon;
}

namespace {

std::string delete_fillers(std::string_view text, const FillerLexicon& fillers) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t best = 0;
    for (const auto& f : fillers) {
      if (f.size() > best && text.substr(pos, f.size()) == f) best = f.size();
    }
    if (best > 0) {
      pos += best;
      continue;
    }
    const auto n = utf8::decode(text, pos).length;
    out.append(text.substr(pos, n));
    pos += n;
  }
  return out;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending = false;
  for (std::size_t pos = 0; pos < text.size();) {
    const auto d = utf8::decode(text, pos);
    if (utf8::is_space(d.cp)) {
      pending = true;
    } else {
      if (pending && !out.empty()) out.push_back(' ');
      pending = false;
      out.append(text.substr(pos, d.length));
    }
    pos += d.length;
  }
  return out;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string apply_rule(std::string_view text, const DeidRule& rule, std::size_t& count) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (!is_digit(text[pos])) {
      out.push_back(text[pos++]);
      continue;
    }
    std::size_t end = pos;
    while (end < text.size() && is_digit(text[end])) ++end;
    const std::size_t digits = end - pos;
    std::size_t span = 0;  // bytes replaced, 0 for no match
    switch (rule.pattern) {
      case PatternClass::phone:
        if (digits == 11 && text[pos] == '1') span = digits;
        break;
      case PatternClass::national_id:
        if (digits == 18) {
          span = digits;
        } else if (digits == 17 && end < text.size() && (text[end] == 'X' || text[end] == 'x')) {
          span = 18;
        }
        break;
      case PatternClass::long_digit_run:
        if (digits >= 7) span = digits;
        break;
    }
    if (span > 0) {
      out += rule.token;
      ++count;
      pos += span;
    } else {
      out.append(text.substr(pos, digits));
      pos = end;
    }
  }
  return out;
}

}  // namespace

std::string clean_text(std::string_view raw, const FillerLexicon& fillers) {
  FillerLexicon usable;
  for (const auto& f : fillers) {
    if (!f.empty()) usable.insert(f);
  }
  std::string current(raw);
  for (;;) {
    auto next = collapse_whitespace(delete_fillers(current, usable));
    if (next == current) return next;
    current = std::move(next);
  }
}

DeidRuleSet::DeidRuleSet(std::vector<DeidRule> rules) : rules_(std::move(rules)) {
  for (const auto& r : rules_) {
    bool ok = r.token.size() >= 3 && r.token.front() == '[' && r.token.back() == ']';
    for (std::size_t i = 1; ok && i + 1 < r.token.size(); ++i) {
      ok = (r.token[i] >= 'A' && r.token[i] <= 'Z') || r.token[i] == '_';
    }
    if (!ok) throw std::invalid_argument("de-identification token must look like [TAG]: " + r.token);
  }
}

const DeidRuleSet& default_deid_rules() {
  static const DeidRuleSet kRules({{PatternClass::phone, "[PHONE]"},
                                   {PatternClass::national_id, "[ID]"},
                                   {PatternClass::long_digit_run, "[NUMBER]"}});
  return kRules;
}

DeidResult deidentify(std::string_view text, const DeidRuleSet& rules) {
  DeidResult result{std::string(text), 0};
  for (const auto& rule : rules.rules()) {
    result.text = apply_rule(result.text, rule, result.replacements);
  }
  return result;
}

std::optional<DialogueRecord> preprocess_dialogue(const DialogueRecord& raw,
                                                  const FillerLexicon& fillers,
                                                  const DeidRuleSet& rules,
                                                  std::size_t* replacements) {
  DialogueRecord out = raw;
  out.turns.clear();
  for (const auto& turn : raw.turns) {
    auto deid = deidentify(clean_text(turn.text, fillers), rules);
    if (replacements) *replacements += deid.replacements;
    if (!deid.text.empty()) out.turns.push_back({turn.speaker, std::move(deid.text)});
  }
  if (out.turns.empty()) return std::nullopt;
  return out;
}

// ---------------------------------------------------------------------------

std::vector<QAPair> build_qa_pairs(std::vector<DialogueRecord> dialogues,
                                   std::vector<StructuredRecord> golds) {
  if (dialogues.size() != golds.size()) throw LengthMismatch(dialogues.size(), golds.size());
  std::unordered_set<std::string> ids;
  std::vector<QAPair> pairs;
  pairs.reserve(dialogues.size());
  for (std::size_t i = 0; i < dialogues.size(); ++i) {
    if (!ids.insert(dialogues[i].id).second) {
      throw CorpusError("duplicate dialogue id '" + dialogues[i].id + "'");
    }
    pairs.push_back({std::move(dialogues[i]), std::move(golds[i])});
  }
  return pairs;
}

namespace {

template <std::size_t N>
std::string_view pick(std::mt19937_64& rng, const std::array<std::string_view, N>& table) {
  return table[rng() % N];
}

bool chance(std::mt19937_64& rng, unsigned percent) { return rng() % 100 < percent; }

constexpr std::array<std::string_view, 8> kDepartments{
    "呼吸内科", "消化内科", "心血管内科", "神经内科", "老年医学科", "甲乳外科", "内分泌科", "全科"};
constexpr std::array<std::string_view, 10> kSymptoms{
    "发热", "咳嗽", "头痛", "腹痛", "胸闷", "乏力", "反酸", "头晕", "咽痛", "腹泻"};
constexpr std::array<std::string_view, 8> kDurations{
    "三天", "一周", "两天", "半个月", "一个月", "五天", "十天", "两周"};
constexpr std::array<std::string_view, 8> kCourseDetails{
    "伴有咽痛", "夜间加重", "自行服用布洛芬后稍缓解", "未曾就诊", "伴恶心，无呕吐",
    "活动后明显", "进食后加重", "休息后可缓解"};
constexpr std::array<std::string_view, 6> kFamily{
    "父亲有高血压病史", "母亲患2型糖尿病", "无特殊家族史", "兄长有冠心病", "祖父死于胃癌",
    "家族中无遗传病史"};
constexpr std::array<std::string_view, 5> kMarital{
    "已婚，育有一子", "已婚，育有一子一女", "未婚未育", "已婚，育有两女", "离异，育有一女"};
constexpr std::array<std::string_view, 5> kAllergy{
    "否认药物过敏史", "青霉素过敏", "头孢类药物过敏", "对海鲜过敏", "磺胺类药物过敏"};
constexpr std::array<std::string_view, 6> kPast{
    "高血压病史五年，规律服药", "否认慢性病史", "两年前行阑尾切除术", "2型糖尿病史三年",
    "慢性胃炎病史", "乙肝病毒携带十年"};
constexpr std::array<std::string_view, 8> kDiagnoses{
    "上呼吸道感染", "急性胃炎", "偏头痛", "社区获得性肺炎", "功能性消化不良",
    "急性支气管炎", "胃食管反流病", "后循环缺血"};
constexpr std::array<std::string_view, 6> kTreatments{
    "多饮水，注意休息，口服对乙酰氨基酚", "完善血常规及胸片检查，三天后复诊",
    "奥美拉唑口服两周，清淡饮食", "注意休息，如症状加重及时就诊",
    "头颅CT检查，口服布洛芬缓释胶囊", "阿莫西林口服一周，一周后复查"};

struct FieldDraw {
  std::string value;
  std::string question;  // doctor turn, empty when the answer is a doctor turn itself
  Speaker answerer = Speaker::patient;
  std::string answer_prefix;
  std::string answer_suffix = "。";
};

FieldDraw draw_field(const FieldSpec& field, std::mt19937_64& rng, std::string_view symptom,
                     std::string_view duration) {
  FieldDraw d;
  const auto& id = field.id;
  if (id == "age") {
    d.value = std::to_string(18 + rng() % 68) + "岁";
    d.question = "您今年多大年龄？";
    d.answer_prefix = "我今年";
  } else if (id == "gender") {
    d.value = chance(rng, 50) ? "男" : "女";
    d.question = "登记一下性别。";
    d.answer_prefix = "性别";
  } else if (id == "family_history") {
    if (!chance(rng, 15)) d.value = pick(rng, kFamily);
    d.question = "家里人有什么疾病吗？";
  } else if (id == "marital_reproductive_history") {
    if (!chance(rng, 15)) d.value = pick(rng, kMarital);
    d.question = "结婚了吗？有孩子吗？";
  } else if (id == "allergy_history") {
    if (!chance(rng, 15)) d.value = pick(rng, kAllergy);
    d.question = "有没有药物或者食物过敏？";
  } else if (id == "chief_complaint") {
    d.value = std::string(symptom) + std::string(duration);
    d.question = "您哪里不舒服？";
    d.answer_prefix = "医生，我";
  } else if (id == "present_illness_history") {
    d.value = std::string(duration) + "前无明显诱因出现" + std::string(symptom) + "，" +
              std::string(pick(rng, kCourseDetails));
    d.question = "具体说说情况。";
  } else if (id == "past_medical_history") {
    if (!chance(rng, 15)) d.value = pick(rng, kPast);
    d.question = "以前得过什么病吗？";
  } else if (id == "preliminary_diagnosis") {
    d.value = pick(rng, kDiagnoses);
    d.answerer = Speaker::doctor;
    d.answer_prefix = "初步考虑是";
  } else if (id == "treatment_recommendations") {
    d.value = pick(rng, kTreatments);
    d.answerer = Speaker::doctor;
    d.answer_prefix = "建议";
  } else {
    d.value = field.display_name + "记录" + std::to_string(rng() % 1000);
    d.question = "请说一下" + field.display_name + "。";
  }
  return d;
}

}  // namespace

std::vector<QAPair> synth_corpus(std::uint64_t seed, std::size_t n, const RecordSchema& schema) {
  std::mt19937_64 rng(seed);
  std::vector<QAPair> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    QAPair pair;
    char id[64];
    std::snprintf(id, sizeof id, "synth-%llu-%05zu", static_cast<unsigned long long>(seed), i);
    pair.dialogue.id = id;
    pair.dialogue.department = std::string(pick(rng, kDepartments));
    pair.dialogue.source = "synthetic";
    pair.dialogue.turns.push_back({Speaker::doctor, "您好，请坐。"});

    const auto symptom = pick(rng, kSymptoms);
    const auto duration = pick(rng, kDurations);
    for (const auto& field : schema.fields()) {
      auto d = draw_field(field, rng, symptom, duration);
      if (!d.value.empty()) {
        if (!d.question.empty()) pair.dialogue.turns.push_back({Speaker::doctor, d.question});
        pair.dialogue.turns.push_back({d.answerer, d.answer_prefix + d.value + d.answer_suffix});
      }
      pair.gold.set(field.id, std::move(d.value));
    }
    pair.dialogue.turns.push_back({Speaker::patient, "好的，谢谢医生。"});
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json pair_to_json(const QAPair& pair, const RecordSchema* schema) {
  nlohmann::ordered_json turns = nlohmann::ordered_json::array();
  for (const auto& t : pair.dialogue.turns) {
    turns.push_back({{"speaker", to_string(t.speaker)}, {"text", t.text}});
  }
  nlohmann::ordered_json gold = nlohmann::ordered_json::object();
  if (schema) {
    for (const auto& f : schema->fields()) {
      if (pair.gold.has(f.id)) gold[f.id] = pair.gold.value(f.id);
    }
  }
  for (const auto& [key, value] : pair.gold.values()) {
    if (!gold.contains(key)) gold[key] = value;
  }
  nlohmann::ordered_json out;
  out["id"] = pair.dialogue.id;
  out["department"] = pair.dialogue.department ? nlohmann::ordered_json(*pair.dialogue.department)
                                               : nlohmann::ordered_json(nullptr);
  if (pair.dialogue.source) out["source"] = *pair.dialogue.source;
  out["turns"] = std::move(turns);
  out["gold"] = std::move(gold);
  return out;
}

QAPair pair_from_json(const nlohmann::json& json) {
  if (!json.is_object()) throw CorpusError("expected a JSON object");
  QAPair pair;
  if (!json.contains("id") || !json["id"].is_string()) throw CorpusError("missing string \"id\"");
  pair.dialogue.id = json["id"].get<std::string>();
  if (json.contains("department") && !json["department"].is_null()) {
    if (!json["department"].is_string()) throw CorpusError("\"department\" must be text or null");
    pair.dialogue.department = json["department"].get<std::string>();
  }
  if (json.contains("source") && !json["source"].is_null()) {
    if (!json["source"].is_string()) throw CorpusError("\"source\" must be text or null");
    pair.dialogue.source = json["source"].get<std::string>();
  }
  if (!json.contains("turns") || !json["turns"].is_array()) throw CorpusError("missing \"turns\" array");
  for (const auto& t : json["turns"]) {
    if (!t.is_object() || !t.contains("speaker") || !t.contains("text") || !t["speaker"].is_string() ||
        !t["text"].is_string()) {
      throw CorpusError("turn needs string \"speaker\" and \"text\"");
    }
    const auto speaker = parse_speaker(t["speaker"].get<std::string>());
    if (!speaker) throw CorpusError("unknown speaker '" + t["speaker"].get<std::string>() + "'");
    pair.dialogue.turns.push_back({*speaker, t["text"].get<std::string>()});
  }
  if (json.contains("gold")) {
    if (!json["gold"].is_object()) throw CorpusError("\"gold\" must be an object");
    for (const auto& [key, value] : json["gold"].items()) {
      if (!value.is_string()) throw CorpusError("gold field '" + key + "' must be text");
      pair.gold.set(key, value.get<std::string>());
    }
  }
  return pair;
}

std::string serialize_corpus(const std::vector<QAPair>& pairs, const RecordSchema* schema) {
  std::string out;
  for (const auto& p : pairs) {
    out += pair_to_json(p, schema).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

void write_corpus(const std::vector<QAPair>& pairs, const std::filesystem::path& path,
                  const RecordSchema* schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << serialize_corpus(pairs, schema);
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<QAPair> parse_corpus(std::string_view text) {
  std::vector<QAPair> pairs;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (utf8::trim(line).empty()) continue;
    try {
      pairs.push_back(pair_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    } catch (const ParseError&) {
      throw;
    } catch (const CorpusError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return pairs;
}

std::vector<QAPair> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_corpus(buffer.str());
}

}  // namespace emrgen
