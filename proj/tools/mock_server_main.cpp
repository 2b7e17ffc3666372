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

// Offline chat endpoint that answers prompts built from a corpus file.
//
//   emrgen-mock-server --corpus data.jsonl --style code --behavior echo-gold --port 8089
//
// Point an experiment config at http://127.0.0.1:8089/v1 to run the whole
// pipeline without a model.

#include <csignal>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "emrgen/mock_endpoint.hpp"

namespace {
volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scriptable chat-completions mock", "emrgen-mock-server"};
  std::string corpus, schema, style = "code", behavior = "echo-gold", fixed, dropped;
  int port = 8089;
  app.add_option("--corpus", corpus, "Corpus JSONL the prompts are built from")->required();
  app.add_option("--schema", schema, "Schema JSON (default: built-in)");
  app.add_option("--style", style, "code | nl");
  app.add_option("--behavior", behavior,
                 "echo-gold | fixed-text | error-then-succeed | timeout | prose-only | drop-field | "
                 "unauthorized | malformed");
  app.add_option("--fixed-text", fixed, "Reply for fixed-text");
  app.add_option("--drop-field", dropped, "Field left out by drop-field");
  app.add_option("--port", port, "Port on 127.0.0.1 (0 = any)");
  CLI11_PARSE(app, argc, argv);

  try {
    emrgen::mock::MockPlan plan;
    plan.corpus = emrgen::read_corpus(corpus);
    if (!schema.empty()) plan.schema = emrgen::load_schema(schema);
    const auto parsed_style = emrgen::parse_prompt_style(style);
    const auto parsed_behavior = emrgen::mock::parse_behavior(behavior);
    if (!parsed_style || !parsed_behavior) {
      std::cerr << "error: unknown style or behavior\n";
      return 1;
    }
    plan.style = *parsed_style;
    plan.fallback = *parsed_behavior;
    plan.fixed_text = fixed;
    plan.dropped_field = dropped;
    emrgen::mock::MockChatServer server(emrgen::mock::make_script(std::move(plan)), port);
    std::cout << "listening on " << server.base_url() << std::endl;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
