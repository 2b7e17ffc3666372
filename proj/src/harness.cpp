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

#include "emrgen/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "httplib.h"

namespace emrgen {

std::string dump_json(const nlohmann::ordered_json& json, int indent) {
  return json.dump(indent, ' ', false, nlohmann::json::error_handler_t::replace);
}

// ---------------------------------------------------------------------------
// Endpoint
// ---------------------------------------------------------------------------

void EndpointConfig::validate() const {
  if (base_url.empty()) throw ConfigError("endpoint base_url is empty");
  if (base_url.find("://") == std::string::npos) {
    throw ConfigError("endpoint base_url needs a scheme: " + base_url);
  }
  if (parallelism < 1) throw ConfigError("endpoint parallelism must be at least 1");
  if (!(temperature >= 0.0)) throw ConfigError("endpoint temperature must be >= 0");
  if (!(timeout_s > 0.0)) throw ConfigError("endpoint timeout must be positive");
}

std::optional<std::string> EndpointConfig::resolve_api_key() const {
  if (api_key) return api_key;
  if (api_key_env) {
    if (const char* value = std::getenv(api_key_env->c_str()); value && *value) return std::string(value);
  }
  return std::nullopt;
}

std::string build_chat_request(const EndpointConfig& cfg, const std::string& system, const std::string& user) {
  nlohmann::ordered_json body;
  body["model"] = cfg.model_name;
  body["messages"] = nlohmann::ordered_json::array(
      {{{"role", "system"}, {"content", system}}, {{"role", "user"}, {"content", user}}});
  body["temperature"] = cfg.temperature;
  body["max_tokens"] = cfg.max_output_tokens;
  return dump_json(body);
}

std::string parse_chat_response(std::string_view body) {
  nlohmann::json json;
  try {
    json = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("response is not JSON: ") + e.what());
  }
  try {
    const auto& content = json.at("choices").at(0).at("message").at("content");
    if (content.is_null()) return {};
    if (!content.is_string()) throw ProtocolError("message content is not text");
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("response lacks choices[0].message.content: ") + e.what());
  }
}

HttpChatEndpoint::HttpChatEndpoint(EndpointConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto scheme_end = cfg_.base_url.find("://");
  const auto path_start = cfg_.base_url.find('/', scheme_end + 3);
  scheme_host_port_ = cfg_.base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : cfg_.base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  constexpr std::string_view kSuffix = "/chat/completions";
  path_ = prefix.size() >= kSuffix.size() && prefix.ends_with(kSuffix) ? prefix : prefix + std::string(kSuffix);
}

ChatCompletion HttpChatEndpoint::complete(const std::string& system, const std::string& user) {
  const auto body = build_chat_request(cfg_, system, user);
  httplib::Headers headers;
  if (const auto key = cfg_.resolve_api_key()) headers.emplace("Authorization", "Bearer " + *key);

  const auto timeout = std::chrono::duration<double>(cfg_.timeout_s);
  const unsigned max_attempts = cfg_.max_retries + 1;
  std::string last_failure;
  for (unsigned attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt > 1) {
      const auto shift = std::min(attempt - 2, 10u);
      std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<std::int64_t>(cfg_.backoff_ms) << shift));
    }
    // one client per call keeps the endpoint usable from several threads
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto result = client.Post(path_, headers, body, "application/json");
    if (!result) {
      last_failure = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    const int status = result->status;
    if (status == 401 || status == 403) {
      throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(status) + ")");
    }
    if (status == 429 || status >= 500) {
      last_failure = "HTTP " + std::to_string(status);
      continue;
    }
    if (status < 200 || status >= 300) {
      throw ProtocolError("unexpected HTTP " + std::to_string(status));
    }
    return {parse_chat_response(result->body), attempt};
  }
  throw TransportError(last_failure + " after " + std::to_string(max_attempts) + " attempt(s)", max_attempts);
}

ChatCompletion chat_complete(const EndpointConfig& cfg, const std::string& system, const std::string& user) {
  return HttpChatEndpoint(cfg).complete(system, user);
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

RecordSchema ExperimentConfig::load_schema() const {
  return schema_path ? emrgen::load_schema(*schema_path) : default_schema();
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

template <typename T>
T get_or(const nlohmann::json& json, const char* key, T fallback) {
  if (!json.contains(key) || json[key].is_null()) return fallback;
  try {
    return json[key].get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key \"") + key + "\": " + e.what());
  }
}

EndpointConfig endpoint_from_json(const nlohmann::json& json) {
  if (!json.is_object()) throw ConfigError("\"endpoint\" must be an object");
  EndpointConfig cfg;
  cfg.base_url = get_or<std::string>(json, "base_url", "");
  cfg.model_name = get_or<std::string>(json, "model", get_or<std::string>(json, "model_name", ""));
  if (json.contains("api_key") && json["api_key"].is_string()) cfg.api_key = json["api_key"].get<std::string>();
  if (json.contains("api_key_env") && json["api_key_env"].is_string()) {
    cfg.api_key_env = json["api_key_env"].get<std::string>();
  }
  cfg.timeout_s = get_or<double>(json, "timeout_s", cfg.timeout_s);
  cfg.max_retries = get_or<unsigned>(json, "max_retries", cfg.max_retries);
  cfg.parallelism = get_or<unsigned>(json, "parallelism", cfg.parallelism);
  cfg.temperature = get_or<double>(json, "temperature", cfg.temperature);
  cfg.max_output_tokens = get_or<unsigned>(json, "max_output_tokens", cfg.max_output_tokens);
  cfg.backoff_ms = get_or<unsigned>(json, "backoff_ms", cfg.backoff_ms);
  cfg.validate();
  return cfg;
}

}  // namespace

ExperimentConfig experiment_from_json(const nlohmann::json& json, const std::filesystem::path& base_dir) {
  if (!json.is_object()) throw ConfigError("experiment config must be a JSON object");
  ExperimentConfig cfg;
  cfg.name = get_or<std::string>(json, "name", "");
  if (cfg.name.empty()) throw ConfigError("experiment config needs a \"name\"");
  if (!json.contains("endpoint")) throw ConfigError("experiment '" + cfg.name + "' has no \"endpoint\"");
  cfg.endpoint = endpoint_from_json(json["endpoint"]);
  const auto style = get_or<std::string>(json, "style", "code");
  const auto parsed = parse_prompt_style(style);
  if (!parsed) throw ConfigError("unknown prompt style '" + style + "'");
  cfg.style = *parsed;
  if (const auto schema = get_or<std::string>(json, "schema", ""); !schema.empty()) {
    cfg.schema_path = resolve(base_dir, schema);
  }
  if (const auto corpus = get_or<std::string>(json, "corpus", ""); !corpus.empty()) {
    cfg.corpus_path = resolve(base_dir, corpus);
  }
  cfg.output_dir = resolve(base_dir, get_or<std::string>(json, "output_dir", "runs"));
  cfg.record_latency = get_or<bool>(json, "record_latency", true);
  cfg.max_prompt_bytes = get_or<std::size_t>(json, "max_prompt_bytes", 0);
  if (json.contains("prompt") && json["prompt"].is_object()) {
    const auto& p = json["prompt"];
    cfg.prompt.class_name = get_or<std::string>(p, "class_name", cfg.prompt.class_name);
    cfg.prompt.code_instruction = get_or<std::string>(p, "code_instruction", cfg.prompt.code_instruction);
    cfg.prompt.nl_instruction = get_or<std::string>(p, "nl_instruction", cfg.prompt.nl_instruction);
  }
  return cfg;
}

namespace {

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

}  // namespace

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  return experiment_from_json(read_json_file(path), path.parent_path());
}

std::vector<ExperimentConfig> load_run_matrix(const std::filesystem::path& path) {
  const auto json = read_json_file(path);
  const auto base = path.parent_path();
  const nlohmann::json* list = &json;
  if (json.is_object() && json.contains("experiments")) list = &json["experiments"];
  std::vector<ExperimentConfig> out;
  if (list->is_array()) {
    for (const auto& item : *list) out.push_back(experiment_from_json(item, base));
  } else {
    out.push_back(experiment_from_json(*list, base));
  }
  std::set<std::string> names;
  for (const auto& cfg : out) {
    if (!names.insert(cfg.name).second) throw ConfigError("duplicate experiment name '" + cfg.name + "'");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

namespace {

PredictionRecord extract_one(const ExperimentConfig& cfg, ChatEndpoint& endpoint, const RecordSchema& schema,
                             const QAPair& pair) {
  PredictionRecord out;
  out.id = pair.dialogue.id;
  const auto started = std::chrono::steady_clock::now();
  try {
    const auto prompt = render_prompt(cfg.style, schema, pair.dialogue, cfg.prompt);
    const auto size = prompt.system_text.size() + prompt.user_text.size();
    if (cfg.max_prompt_bytes > 0 && size > cfg.max_prompt_bytes) {
      throw HarnessError("prompt is " + std::to_string(size) + " bytes, limit " +
                         std::to_string(cfg.max_prompt_bytes));
    }
    auto reply = endpoint.complete(prompt.system_text, prompt.user_text);
    out.attempts = reply.attempts;
    out.raw = std::move(reply.content);
    out.decoded = decode_output(cfg.style, out.raw, schema);
  } catch (const TransportError& e) {
    out.attempts = e.attempts();
    out.error = std::string("transport: ") + e.what();
  } catch (const AuthError& e) {
    out.attempts = 1;
    out.error = std::string("auth: ") + e.what();
  } catch (const ProtocolError& e) {
    out.attempts = std::max(out.attempts, 1u);
    out.error = std::string("protocol: ") + e.what();
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  if (out.error) out.decoded = empty_result(schema);
  if (cfg.record_latency) {
    out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                           started)
                         .count();
  }
  return out;
}

}  // namespace

std::vector<PredictionRecord> run_extraction(const ExperimentConfig& cfg, ChatEndpoint& endpoint,
                                             const RecordSchema& schema, const std::vector<QAPair>& pairs) {
  std::vector<PredictionRecord> predictions(pairs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < pairs.size(); i = next++) {
      predictions[i] = extract_one(cfg, endpoint, schema, pairs[i]);
    }
  };
  const auto threads = std::min<std::size_t>(std::max(1u, cfg.endpoint.parallelism), pairs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return predictions;
}

std::vector<PredictionRecord> run_extraction(const ExperimentConfig& cfg, const RecordSchema& schema,
                                             const std::vector<QAPair>& pairs) {
  HttpChatEndpoint endpoint(cfg.endpoint);
  return run_extraction(cfg, endpoint, schema, pairs);
}

// ---------------------------------------------------------------------------
// Prediction files
// ---------------------------------------------------------------------------

nlohmann::ordered_json prediction_to_json(const PredictionRecord& prediction, const RecordSchema& schema) {
  nlohmann::ordered_json fields = nlohmann::ordered_json::object();
  for (const auto& f : schema.fields()) fields[f.id] = prediction.decoded.record.value(f.id);
  for (const auto& [key, value] : prediction.decoded.record.values()) {
    if (!fields.contains(key)) fields[key] = value;
  }
  nlohmann::ordered_json warnings = nlohmann::ordered_json::array();
  for (const auto& w : prediction.decoded.warnings) {
    warnings.push_back({{"kind", to_string(w.kind)}, {"detail", w.detail}});
  }
  nlohmann::ordered_json out;
  out["id"] = prediction.id;
  out["raw"] = prediction.raw;
  out["fields"] = std::move(fields);
  out["warnings"] = std::move(warnings);
  out["latency_ms"] = prediction.latency_ms;
  out["attempts"] = prediction.attempts;
  if (prediction.error) out["error"] = *prediction.error;
  return out;
}

PredictionRecord prediction_from_json(const nlohmann::json& json) {
  if (!json.is_object() || !json.contains("id") || !json["id"].is_string()) {
    throw CorpusError("prediction needs a string \"id\"");
  }
  PredictionRecord p;
  p.id = json["id"].get<std::string>();
  if (json.contains("raw") && json["raw"].is_string()) p.raw = json["raw"].get<std::string>();
  if (json.contains("fields")) {
    if (!json["fields"].is_object()) throw CorpusError("\"fields\" must be an object");
    for (const auto& [key, value] : json["fields"].items()) {
      if (!value.is_string()) throw CorpusError("field '" + key + "' must be text");
      p.decoded.record.set(key, value.get<std::string>());
    }
  }
  if (json.contains("warnings") && json["warnings"].is_array()) {
    for (const auto& w : json["warnings"]) {
      const auto kind = parse_warning_kind(w.value("kind", std::string()));
      if (!kind) throw CorpusError("unknown warning kind");
      p.decoded.warnings.push_back({*kind, w.value("detail", std::string())});
    }
  }
  p.latency_ms = json.value("latency_ms", std::int64_t{0});
  p.attempts = json.value("attempts", 0u);
  if (json.contains("error") && json["error"].is_string()) p.error = json["error"].get<std::string>();
  return p;
}

std::string serialize_predictions(const std::vector<PredictionRecord>& predictions, const RecordSchema& schema) {
  std::string out;
  for (const auto& p : predictions) {
    out += dump_json(prediction_to_json(p, schema));
    out += '\n';
  }
  return out;
}

void write_predictions(const std::vector<PredictionRecord>& predictions, const RecordSchema& schema,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << serialize_predictions(predictions, schema);
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(prediction_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    } catch (const CorpusError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation and export
// ---------------------------------------------------------------------------

EvalReport run_eval(const std::vector<PredictionRecord>& predictions, const std::vector<QAPair>& pairs,
                    const RecordSchema& schema, const EvalOptions& options) {
  if (predictions.size() != pairs.size()) throw LengthMismatch(pairs.size(), predictions.size());
  std::vector<StructuredRecord> decoded;
  decoded.reserve(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].id != pairs[i].dialogue.id) {
      throw AlignmentError("prediction " + std::to_string(i + 1) + " has id '" + predictions[i].id +
                           "' but the sample is '" + pairs[i].dialogue.id + "'");
    }
    decoded.push_back(predictions[i].decoded.record);
  }
  auto report = corpus_report(pairs, decoded, schema);
  report.config_name = options.config_name;
  report.temperature = options.temperature;
  if (options.report_path) {
    std::ofstream out(*options.report_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + options.report_path->string());
    out << dump_json(report_to_json(report, schema), 2) << '\n';
  }
  if (options.table_path) {
    std::ofstream out(*options.table_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + options.table_path->string());
    out << render_field_table(report, schema);
  }
  return report;
}

std::size_t export_finetune(const std::vector<QAPair>& pairs, PromptStyle style, const RecordSchema& schema,
                            const std::filesystem::path& path, const PromptOptions& options) {
  std::string buffer;
  for (const auto& pair : pairs) {
    buffer += dump_json(finetune_to_json(render_finetune_example(pair, style, schema, options)));
    buffer += '\n';
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << buffer;
  if (!out) throw IoError("write failed for " + path.string());
  return pairs.size();
}

}  // namespace emrgen
