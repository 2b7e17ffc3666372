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

#include "emrgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "emrgen/utf8.hpp"

namespace emrgen {

namespace {

bool is_ascii_alnum(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

std::size_t bag_size(const TokenBag& bag) {
  std::size_t n = 0;
  for (const auto& [token, count] : bag) n += count;
  return n;
}

}  // namespace

TokenBag tokenize_field(std::string_view text) {
  TokenBag bag;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char c = text[pos];
    if (is_ascii_alnum(c)) {
      std::string word;
      while (pos < text.size() && is_ascii_alnum(text[pos])) {
        char w = text[pos++];
        if (w >= 'A' && w <= 'Z') w = static_cast<char>(w - 'A' + 'a');
        word.push_back(w);
      }
      ++bag[word];
      continue;
    }
    const auto d = utf8::decode(text, pos);
    if (d.cp >= 0x80 && !utf8::is_space(d.cp) && !utf8::is_punct(d.cp)) {
      ++bag[std::string(text.substr(pos, d.length))];
    }
    pos += d.length;
  }
  return bag;
}

FieldScore field_f1(std::string_view gold, std::string_view pred) {
  const auto g = tokenize_field(gold);
  const auto p = tokenize_field(pred);
  const auto g_size = bag_size(g);
  const auto p_size = bag_size(p);

  std::size_t overlap = 0;
  for (const auto& [token, count] : g) {
    const auto it = p.find(token);
    if (it != p.end()) overlap += std::min(count, it->second);
  }

  FieldScore s;
  s.precision = p_size == 0 ? 1.0 : static_cast<double>(overlap) / static_cast<double>(p_size);
  if (g_size == 0) {
    s.recall = p_size == 0 ? 1.0 : 0.0;
  } else {
    s.recall = static_cast<double>(overlap) / static_cast<double>(g_size);
  }
  const double denom = s.precision + s.recall;
  s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  return s;
}

std::size_t field_weight(std::string_view gold) { return utf8::length(utf8::trim(gold)); }

SampleScore sample_weighted_f1(const StructuredRecord& gold, const StructuredRecord& pred,
                               const RecordSchema& schema) {
  SampleScore score;
  double weighted = 0.0;
  std::size_t total = 0;
  for (const auto& f : schema.fields()) {
    const auto fs = field_f1(gold.value(f.id), pred.value(f.id));
    const auto w = field_weight(gold.value(f.id));
    score.per_field[f.id] = fs;
    score.weights[f.id] = w;
    weighted += static_cast<double>(w) * fs.f1;
    total += w;
  }
  score.overall = total > 0 ? weighted / static_cast<double>(total) : 0.0;
  return score;
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double sample_stddev(const std::vector<double>& values) {
  if (values.size() <= 1) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

EvalReport corpus_report(const std::vector<QAPair>& pairs, const std::vector<StructuredRecord>& preds,
                         const RecordSchema& schema) {
  if (pairs.size() != preds.size()) throw LengthMismatch(pairs.size(), preds.size());
  EvalReport report;
  std::vector<double> overalls;
  std::map<std::string, double> f1_sums;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto score = sample_weighted_f1(pairs[i].gold, preds[i], schema);
    score.id = pairs[i].dialogue.id;
    overalls.push_back(score.overall);
    for (const auto& f : schema.fields()) {
      if (score.weights[f.id] == 0) continue;
      f1_sums[f.id] += score.per_field[f.id].f1;
      ++report.per_field_macro[f.id].support;
    }
    report.samples.push_back(std::move(score));
  }
  for (const auto& f : schema.fields()) {
    auto& summary = report.per_field_macro[f.id];
    summary.mean_f1 = summary.support > 0 ? f1_sums[f.id] / static_cast<double>(summary.support) : 0.0;
  }
  if (pairs.empty()) report.per_field_macro.clear();
  report.mean_overall = mean(overalls);
  report.std_overall = sample_stddev(overalls);
  return report;
}

nlohmann::ordered_json report_to_json(const EvalReport& report, const RecordSchema& schema) {
  nlohmann::ordered_json out;
  out["mean_f1"] = report.mean_overall;
  out["std_f1"] = report.std_overall;
  out["n"] = report.samples.size();
  nlohmann::ordered_json per_field = nlohmann::ordered_json::object();
  for (const auto& f : schema.fields()) {
    const auto it = report.per_field_macro.find(f.id);
    if (it == report.per_field_macro.end()) continue;
    per_field[f.id] = {{"f1", it->second.mean_f1}, {"support", it->second.support}};
  }
  out["per_field"] = std::move(per_field);
  nlohmann::ordered_json samples = nlohmann::ordered_json::array();
  for (const auto& s : report.samples) samples.push_back({{"id", s.id}, {"overall", s.overall}});
  out["samples"] = std::move(samples);
  if (report.config_name) out["config"] = *report.config_name;
  if (report.temperature) out["temperature"] = *report.temperature;
  return out;
}

std::string render_field_table(const EvalReport& report, const RecordSchema& schema) {
  std::size_t width = std::string_view("field").size();
  for (const auto& f : schema.fields()) width = std::max(width, f.id.size());

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width + 2)) << "field" << std::setw(17) << "category"
      << std::right << std::setw(8) << "mean F1" << std::setw(9) << "support" << '\n';
  for (const auto& f : schema.fields()) {
    const auto it = report.per_field_macro.find(f.id);
    const FieldSummary summary = it == report.per_field_macro.end() ? FieldSummary{} : it->second;
    out << std::left << std::setw(static_cast<int>(width + 2)) << f.id << std::setw(17)
        << to_string(f.category) << std::right << std::setw(8);
    if (summary.support == 0) {
      out << "-";
    } else {
      out << std::fixed << std::setprecision(4) << summary.mean_f1;
    }
    out << std::setw(9) << summary.support << '\n';
  }
  out << std::fixed << std::setprecision(4) << "overall mean F1 " << report.mean_overall << " (sd "
      << report.std_overall << ", n=" << report.samples.size() << ")\n";
  return out.str();
}

}  // namespace emrgen
