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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "emrgen/corpus.hpp"
#include "emrgen/decoder.hpp"
#include "emrgen/metrics.hpp"
#include "emrgen/promptgen.hpp"
#include "emrgen/schema.hpp"

namespace emrgen {

class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public HarnessError {
 public:
  using HarnessError::HarnessError;
};

/// Transport failure or retryable status after all attempts were used.
class TransportError : public HarnessError {
 public:
  TransportError(const std::string& what, unsigned attempts) : HarnessError(what), attempts_(attempts) {}
  unsigned attempts() const noexcept { return attempts_; }

 private:
  unsigned attempts_;
};

/// Response that is not a chat completion, or a non-retryable status.
class ProtocolError : public HarnessError {
 public:
  using HarnessError::HarnessError;
};

/// 401/403. Never retried.
class AuthError : public HarnessError {
 public:
  using HarnessError::HarnessError;
};

/// Predictions and samples do not line up (different ids at one position).
class AlignmentError : public HarnessError {
 public:
  using HarnessError::HarnessError;
};

struct EndpointConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8000/v1
  std::string model_name;
  std::optional<std::string> api_key;
  std::optional<std::string> api_key_env;  // consulted when api_key is unset
  double timeout_s = 60.0;
  unsigned max_retries = 3;  // extra attempts after the first
  unsigned parallelism = 1;
  double temperature = 0.0;
  unsigned max_output_tokens = 1024;
  unsigned backoff_ms = 500;  // doubled after every failed attempt

  /// Throws ConfigError.
  void validate() const;
  /// api_key, else the named environment variable, else nullopt.
  std::optional<std::string> resolve_api_key() const;
};

struct ChatCompletion {
  std::string content;
  unsigned attempts = 1;
};

/// Anything that answers a (system, user) message pair.
class ChatEndpoint {
 public:
  virtual ~ChatEndpoint() = default;
  /// Must be safe to call from several threads at once.
  virtual ChatCompletion complete(const std::string& system, const std::string& user) = 0;
};

/// Request body for the chat-completions protocol. Keys are emitted in a
/// fixed order so identical inputs give identical bytes.
std::string build_chat_request(const EndpointConfig& cfg, const std::string& system,
                               const std::string& user);
/// choices[0].message.content; throws ProtocolError.
std::string parse_chat_response(std::string_view body);

/// Speaks HTTP(S) to an OpenAI-compatible `<base_url>/chat/completions`.
/// Retries transport errors, 429 and 5xx with exponential backoff.
class HttpChatEndpoint : public ChatEndpoint {
 public:
  explicit HttpChatEndpoint(EndpointConfig cfg);
  ChatCompletion complete(const std::string& system, const std::string& user) override;
  const EndpointConfig& config() const noexcept { return cfg_; }

 private:
  EndpointConfig cfg_;
  std::string scheme_host_port_;
  std::string path_;
};

ChatCompletion chat_complete(const EndpointConfig& cfg, const std::string& system, const std::string& user);

struct ExperimentConfig {
  std::string name;
  EndpointConfig endpoint;
  PromptStyle style = PromptStyle::code;
  std::optional<std::filesystem::path> schema_path;  // default schema when unset
  std::filesystem::path corpus_path;
  std::filesystem::path output_dir;
  PromptOptions prompt;
  /// Zero disables latency capture so prediction files are reproducible.
  bool record_latency = true;
  /// Prompts longer than this many bytes fail per sample; 0 = no limit.
  std::size_t max_prompt_bytes = 0;

  RecordSchema load_schema() const;
};

/// Relative paths are resolved against `base_dir`.
ExperimentConfig experiment_from_json(const nlohmann::json& json, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment(const std::filesystem::path& path);
/// A single config object, an array of them, or {"experiments": [...]}.
/// Throws ConfigError on duplicate names.
std::vector<ExperimentConfig> load_run_matrix(const std::filesystem::path& path);

struct PredictionRecord {
  std::string id;
  std::string raw;
  DecodeResult decoded;
  std::int64_t latency_ms = 0;
  unsigned attempts = 0;
  std::optional<std::string> error;
};

/// One prediction per pair, in corpus order. A failing sample gets an
/// all-empty record and an error note; the batch always completes.
std::vector<PredictionRecord> run_extraction(const ExperimentConfig& cfg, ChatEndpoint& endpoint,
                                             const RecordSchema& schema, const std::vector<QAPair>& pairs);
/// Uses an HttpChatEndpoint built from cfg.endpoint.
std::vector<PredictionRecord> run_extraction(const ExperimentConfig& cfg, const RecordSchema& schema,
                                             const std::vector<QAPair>& pairs);

nlohmann::ordered_json prediction_to_json(const PredictionRecord& prediction, const RecordSchema& schema);
PredictionRecord prediction_from_json(const nlohmann::json& json);
std::string serialize_predictions(const std::vector<PredictionRecord>& predictions, const RecordSchema& schema);
void write_predictions(const std::vector<PredictionRecord>& predictions, const RecordSchema& schema,
                       const std::filesystem::path& path);
/// Throws ParseError (with line number) or IoError.
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

struct EvalOptions {
  std::optional<std::string> config_name;
  std::optional<double> temperature;
  std::optional<std::filesystem::path> report_path;  // JSON
  std::optional<std::filesystem::path> table_path;   // plain-text per-field table
};

/// Scores decoded predictions against the golds. Throws LengthMismatch on
/// differing sizes and AlignmentError when ids disagree position by position.
EvalReport run_eval(const std::vector<PredictionRecord>& predictions, const std::vector<QAPair>& pairs,
                    const RecordSchema& schema, const EvalOptions& options = {});

/// One JSONL fine-tuning example per pair; returns the line count.
std::size_t export_finetune(const std::vector<QAPair>& pairs, PromptStyle style, const RecordSchema& schema,
                            const std::filesystem::path& path,
                            const PromptOptions& options = default_prompt_options());

/// Stable JSON text (keys in insertion order, invalid UTF-8 replaced).
std::string dump_json(const nlohmann::ordered_json& json, int indent = -1);

}  // namespace emrgen
