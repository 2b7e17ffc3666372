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

#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "emrgen/corpus.hpp"
#include "emrgen/promptgen.hpp"
#include "emrgen/schema.hpp"

namespace httplib {
class Server;
}

// Scriptable chat-completions server for offline runs and tests. It binds
// 127.0.0.1 on an ephemeral port and answers POST /v1/chat/completions.
namespace emrgen::mock {

struct MockRequest {
  std::string model;
  std::string system;
  std::string user;
  std::string body;    // raw request bytes
  unsigned attempt;    // 1-based count of requests seen with this user text
};

struct MockReply {
  int status = 200;
  std::string content;       // assistant message for 2xx replies
  unsigned delay_ms = 0;     // wait before answering
  bool raw_body = false;     // send `content` verbatim instead of wrapping it
};

using Script = std::function<MockReply(const MockRequest&)>;

class MockChatServer {
 public:
  /// Port 0 picks a free ephemeral port.
  explicit MockChatServer(Script script, int port = 0);
  ~MockChatServer();
  MockChatServer(const MockChatServer&) = delete;
  MockChatServer& operator=(const MockChatServer&) = delete;

  int port() const noexcept { return port_; }
  /// http://127.0.0.1:<port>/v1
  std::string base_url() const;
  /// Every request body received, in arrival order.
  std::vector<std::string> request_log() const;
  std::size_t request_count() const;

  /// Blocks until the listener thread has exited; wakes delayed handlers.
  void stop();

 private:
  MockReply dispatch(const std::string& body);

  Script script_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;

  mutable std::mutex mutex_;
  std::condition_variable wake_;
  bool stopping_ = false;
  std::unordered_map<std::string, unsigned> attempts_;
  std::vector<std::string> log_;
};

/// Wraps `content` as a minimal chat-completions response body.
std::string completion_body(const std::string& content);

enum class Behavior {
  echo_gold,           // reply with the gold record in the prompt's style
  fixed_text,          // reply with MockPlan::fixed_text
  error_then_succeed,  // MockPlan::failures x HTTP failure_status, then echo_gold
  timeout,             // sleep MockPlan::timeout_delay_ms every time
  prose_only,          // free text with no record structure
  drop_field,          // echo_gold with MockPlan::dropped_field left out
  unauthorized,        // HTTP 401
  malformed,           // 200 with a body that is not JSON
};

std::optional<Behavior> parse_behavior(std::string_view text);

/// Recognises which corpus sample a prompt belongs to and applies a
/// per-sample behaviour.
struct MockPlan {
  std::vector<QAPair> corpus;
  RecordSchema schema = default_schema();
  PromptStyle style = PromptStyle::code;
  PromptOptions prompt;
  Behavior fallback = Behavior::echo_gold;
  std::map<std::size_t, Behavior> overrides;  // corpus index -> behaviour
  std::string fixed_text;
  unsigned failures = 2;
  int failure_status = 500;
  unsigned timeout_delay_ms = 2000;
  std::string dropped_field;
};

/// Unknown prompts get HTTP 400.
Script make_script(MockPlan plan);

}  // namespace emrgen::mock
