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

#include "emrgen/mock_endpoint.hpp"

#include <chrono>

#include "emrgen/harness.hpp"
#include "httplib.h"

namespace emrgen::mock {

namespace {
constexpr std::size_t kWorkerThreads = 64;
}  // namespace

std::string completion_body(const std::string& content) {
  nlohmann::ordered_json body;
  body["id"] = "mock-completion";
  body["object"] = "chat.completion";
  body["choices"] = nlohmann::ordered_json::array(
      {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}, {"finish_reason", "stop"}}});
  return dump_json(body);
}

MockChatServer::MockChatServer(Script script, int port)
    : script_(std::move(script)), server_(std::make_unique<httplib::Server>()) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    const auto reply = dispatch(req.body);
    if (reply.delay_ms > 0) {
      std::unique_lock lock(mutex_);
      wake_.wait_for(lock, std::chrono::milliseconds(reply.delay_ms), [this] { return stopping_; });
    }
    res.status = reply.status;
    if (reply.raw_body) {
      res.set_content(reply.content, "application/json");
    } else if (reply.status >= 200 && reply.status < 300) {
      res.set_content(completion_body(reply.content), "application/json");
    } else {
      res.set_content(R"({"error":{"message":")" + std::to_string(reply.status) + R"("}})", "application/json");
    }
  };
  // delayed replies park a worker each; keep plenty so queued requests are
  // not starved into client-side timeouts
  server_->new_task_queue = [] { return new httplib::ThreadPool(kWorkerThreads); };
  server_->Post("/v1/chat/completions", handler);
  server_->Post("/chat/completions", handler);
  if (port == 0) {
    port_ = server_->bind_to_any_port("127.0.0.1");
  } else if (server_->bind_to_port("127.0.0.1", port)) {
    port_ = port;
  }
  if (port_ <= 0) throw std::runtime_error("mock server could not bind a port");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

MockChatServer::~MockChatServer() { stop(); }

void MockChatServer::stop() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockChatServer::base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

std::vector<std::string> MockChatServer::request_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::size_t MockChatServer::request_count() const {
  std::lock_guard lock(mutex_);
  return log_.size();
}

MockReply MockChatServer::dispatch(const std::string& body) {
  MockRequest request{};
  request.body = body;
  try {
    const auto json = nlohmann::json::parse(body);
    request.model = json.value("model", std::string());
    for (const auto& m : json.at("messages")) {
      const auto role = m.value("role", std::string());
      if (role == "system") request.system = m.value("content", std::string());
      if (role == "user") request.user = m.value("content", std::string());
    }
  } catch (const nlohmann::json::exception&) {
    return {400, "bad request", 0, true};
  }
  {
    std::lock_guard lock(mutex_);
    log_.push_back(body);
    request.attempt = ++attempts_[request.user];
  }
  return script_(request);
}

std::optional<Behavior> parse_behavior(std::string_view text) {
  static const std::map<std::string_view, Behavior> kNames{
      {"echo-gold", Behavior::echo_gold},     {"fixed-text", Behavior::fixed_text},
      {"error-then-succeed", Behavior::error_then_succeed}, {"timeout", Behavior::timeout},
      {"prose-only", Behavior::prose_only},   {"drop-field", Behavior::drop_field},
      {"unauthorized", Behavior::unauthorized}, {"malformed", Behavior::malformed}};
  const auto it = kNames.find(text);
  if (it == kNames.end()) return std::nullopt;
  return it->second;
}

Script make_script(MockPlan plan) {
  auto shared = std::make_shared<MockPlan>(std::move(plan));
  auto index = std::make_shared<std::unordered_map<std::string, std::size_t>>();
  for (std::size_t i = 0; i < shared->corpus.size(); ++i) {
    const auto prompt = render_prompt(shared->style, shared->schema, shared->corpus[i].dialogue, shared->prompt);
    index->emplace(prompt.user_text, i);
  }

  std::optional<RecordSchema> reduced;
  if (!shared->dropped_field.empty()) {
    std::vector<FieldSpec> kept;
    for (const auto& f : shared->schema.fields()) {
      if (f.id != shared->dropped_field) kept.push_back(f);
    }
    if (!kept.empty()) reduced.emplace(shared->schema.name(), std::move(kept));
  }

  return [shared, index, reduced](const MockRequest& request) -> MockReply {
    const auto it = index->find(request.user);
    if (it == index->end()) return {400, "unknown prompt"};
    const auto& plan = *shared;
    const auto& gold = plan.corpus[it->second].gold;
    const auto override_it = plan.overrides.find(it->second);
    const auto behavior = override_it == plan.overrides.end() ? plan.fallback : override_it->second;
    switch (behavior) {
      case Behavior::echo_gold:
        return {200, serialize_record(plan.style, gold, plan.schema, plan.prompt)};
      case Behavior::fixed_text:
        return {200, plan.fixed_text};
      case Behavior::error_then_succeed:
        if (request.attempt <= plan.failures) return {plan.failure_status, ""};
        return {200, serialize_record(plan.style, gold, plan.schema, plan.prompt)};
      case Behavior::timeout:
        return {200, serialize_record(plan.style, gold, plan.schema, plan.prompt), plan.timeout_delay_ms};
      case Behavior::prose_only:
        return {200, "抱歉，我无法从这段对话中整理出病历，请提供更多信息。"};
      case Behavior::drop_field:
        return {200, serialize_record(plan.style, gold, reduced ? *reduced : plan.schema, plan.prompt)};
      case Behavior::unauthorized:
        return {401, ""};
      case Behavior::malformed:
        return {200, "<html>gateway error</html>", 0, true};
    }
    return {500, ""};
  };
}

}  // namespace emrgen::mock
