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

#include "emrgen/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "emrgen/corpus.hpp"
#include "emrgen/decoder.hpp"
#include "emrgen/harness.hpp"
#include "emrgen/metrics.hpp"
#include "emrgen/promptgen.hpp"
#include "emrgen/schema.hpp"

namespace emrgen::cli {

namespace {

namespace fs = std::filesystem;

RecordSchema schema_or_default(const std::string& path) {
  return path.empty() ? default_schema() : load_schema(path);
}

PromptStyle style_from(const std::string& text) {
  const auto style = parse_prompt_style(text);
  if (!style) throw ConfigError("unknown style '" + text + "' (expected code or nl)");
  return *style;
}

FillerLexicon read_fillers(const std::string& path) {
  if (path.empty()) return default_filler_lexicon();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open filler list " + path);
  FillerLexicon fillers;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) fillers.insert(line);
  }
  return fillers;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

// Raw model outputs for `decode`: one {"id", "raw"} object per line.
std::vector<std::pair<std::string, std::string>> read_raw_outputs(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto json = nlohmann::json::parse(line);
      out.emplace_back(json.at("id").get<std::string>(), json.at("raw").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

struct Options {
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::string in, out, schema, fillers, style = "code", config, gold, pred, report, table;
};

int cmd_synth(const Options& o, std::ostream& out) {
  const auto schema = schema_or_default(o.schema);
  const auto pairs = synth_corpus(o.seed, o.count, schema);
  write_corpus(pairs, o.out, &schema);
  out << "wrote " << pairs.size() << " samples to " << o.out << '\n';
  return kExitOk;
}

int cmd_clean(const Options& o, std::ostream& out) {
  const auto fillers = read_fillers(o.fillers);
  const auto pairs = read_corpus(o.in);
  std::vector<QAPair> kept;
  std::size_t replacements = 0;
  for (const auto& p : pairs) {
    if (auto cleaned = preprocess_dialogue(p.dialogue, fillers, default_deid_rules(), &replacements)) {
      kept.push_back({std::move(*cleaned), p.gold});
    }
  }
  write_corpus(kept, o.out);
  out << "cleaned " << kept.size() << " of " << pairs.size() << " dialogues, " << replacements
      << " identifier(s) masked\n";
  return kExitOk;
}

int cmd_encode(const Options& o, std::ostream& out) {
  const auto schema = schema_or_default(o.schema);
  const auto style = style_from(o.style);
  std::string buffer;
  const auto pairs = read_corpus(o.in);
  for (const auto& p : pairs) {
    const auto prompt = render_prompt(style, schema, p.dialogue);
    nlohmann::ordered_json line;
    line["id"] = p.dialogue.id;
    line["style"] = to_string(style);
    line["system"] = prompt.system_text;
    line["user"] = prompt.user_text;
    buffer += dump_json(line) + '\n';
  }
  write_text(o.out, buffer);
  out << "encoded " << pairs.size() << " prompts\n";
  return kExitOk;
}

int cmd_extract(const Options& o, std::ostream& out) {
  auto cfg = load_experiment(o.config);
  if (!o.in.empty()) cfg.corpus_path = o.in;
  const auto schema = cfg.load_schema();
  const auto pairs = read_corpus(cfg.corpus_path);
  const auto predictions = run_extraction(cfg, schema, pairs);
  write_predictions(predictions, schema, o.out);
  std::size_t failed = 0;
  for (const auto& p : predictions) failed += p.error ? 1 : 0;
  out << "extracted " << predictions.size() << " samples (" << failed << " failed)\n";
  return kExitOk;
}

int cmd_decode(const Options& o, std::ostream& out) {
  const auto schema = schema_or_default(o.schema);
  const auto style = style_from(o.style);
  std::vector<PredictionRecord> predictions;
  for (auto& [id, raw] : read_raw_outputs(o.in)) {
    PredictionRecord p;
    p.id = std::move(id);
    p.decoded = decode_output(style, raw, schema);
    p.raw = std::move(raw);
    predictions.push_back(std::move(p));
  }
  write_predictions(predictions, schema, o.out);
  out << "decoded " << predictions.size() << " outputs\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const auto schema = schema_or_default(o.schema);
  const auto pairs = read_corpus(o.gold);
  const auto predictions = read_predictions(o.pred);
  EvalOptions options;
  options.report_path = o.report;
  if (!o.table.empty()) options.table_path = o.table;
  const auto report = run_eval(predictions, pairs, schema, options);
  out << render_field_table(report, schema);
  return kExitOk;
}

int cmd_export(const Options& o, std::ostream& out) {
  const auto schema = schema_or_default(o.schema);
  const auto n = export_finetune(read_corpus(o.in), style_from(o.style), schema, o.out);
  out << "wrote " << n << " fine-tuning examples\n";
  return kExitOk;
}

int cmd_matrix(const Options& o, std::ostream& out) {
  const auto experiments = load_run_matrix(o.config);
  std::ostringstream summary;
  summary << std::left << std::setw(32) << "experiment" << std::setw(18) << "style" << std::setw(24) << "model"
          << std::right << std::setw(9) << "mean F1" << std::setw(9) << "sd" << std::setw(7) << "n" << '\n';
  fs::path summary_dir;
  for (auto cfg : experiments) {
    if (!o.in.empty()) cfg.corpus_path = o.in;
    const auto schema = cfg.load_schema();
    const auto pairs = read_corpus(cfg.corpus_path);
    const auto dir = cfg.output_dir / cfg.name;
    fs::create_directories(dir);
    const auto predictions = run_extraction(cfg, schema, pairs);
    write_predictions(predictions, schema, dir / "predictions.jsonl");
    EvalOptions options{cfg.name, cfg.endpoint.temperature, dir / "report.json", dir / "fields.txt"};
    const auto report = run_eval(predictions, pairs, schema, options);
    summary << std::left << std::setw(32) << cfg.name << std::setw(18) << to_string(cfg.style) << std::setw(24)
            << cfg.endpoint.model_name << std::right << std::fixed << std::setprecision(4) << std::setw(9)
            << report.mean_overall << std::setw(9) << report.std_overall << std::setw(7) << report.samples.size()
            << '\n';
    summary_dir = cfg.output_dir;
  }
  if (!summary_dir.empty()) write_text(summary_dir / "summary.txt", summary.str());
  out << summary.str();
  return kExitOk;
}

int cmd_schema(const Options& o, std::ostream& out) {
  const auto schema = schema_or_default(o.schema);
  if (o.out.empty()) {
    out << dump_json(schema_to_json(schema), 2) << '\n';
  } else {
    save_schema(schema, o.out);
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dialogue-to-EMR extraction toolkit", "emrgen"};
  app.require_subcommand(1);
  Options o;

  auto* synth = app.add_subcommand("synth", "Generate a deterministic synthetic corpus");
  synth->add_option("--seed", o.seed, "RNG seed")->required();
  synth->add_option("--count", o.count, "Number of samples")->required();
  synth->add_option("--out", o.out, "Corpus JSONL to write")->required();
  synth->add_option("--schema", o.schema, "Schema JSON (default: built-in)");

  auto* clean = app.add_subcommand("clean", "Remove fillers, normalise whitespace and mask identifiers");
  clean->add_option("--in", o.in, "Corpus JSONL")->required();
  clean->add_option("--out", o.out, "Cleaned corpus JSONL")->required();
  clean->add_option("--fillers", o.fillers, "Filler words, one per line");

  auto* encode = app.add_subcommand("encode", "Render prompts for every dialogue");
  encode->add_option("--style", o.style, "code | nl")->required();
  encode->add_option("--schema", o.schema, "Schema JSON (default: built-in)");
  encode->add_option("--in", o.in, "Corpus JSONL")->required();
  encode->add_option("--out", o.out, "Prompt JSONL")->required();

  auto* extract = app.add_subcommand("extract", "Query a chat endpoint for every dialogue");
  extract->add_option("--config", o.config, "Experiment config JSON")->required();
  extract->add_option("--in", o.in, "Corpus JSONL (overrides the config)");
  extract->add_option("--out", o.out, "Prediction JSONL")->required();

  auto* decode = app.add_subcommand("decode", "Parse raw model outputs into records");
  decode->add_option("--style", o.style, "code | nl")->required();
  decode->add_option("--schema", o.schema, "Schema JSON (default: built-in)");
  decode->add_option("--in", o.in, "Raw output JSONL with id/raw")->required();
  decode->add_option("--out", o.out, "Prediction JSONL")->required();

  auto* eval = app.add_subcommand("eval", "Score predictions with character-weighted field F1");
  eval->add_option("--schema", o.schema, "Schema JSON (default: built-in)");
  eval->add_option("--gold", o.gold, "Gold corpus JSONL")->required();
  eval->add_option("--pred", o.pred, "Prediction JSONL")->required();
  eval->add_option("--report", o.report, "Report JSON to write")->required();
  eval->add_option("--table", o.table, "Per-field text table to write");

  auto* export_ft = app.add_subcommand("export-ft", "Write fine-tuning JSONL");
  export_ft->add_option("--style", o.style, "code | nl")->required();
  export_ft->add_option("--schema", o.schema, "Schema JSON (default: built-in)");
  export_ft->add_option("--in", o.in, "Corpus JSONL")->required();
  export_ft->add_option("--out", o.out, "Fine-tuning JSONL")->required();

  auto* matrix = app.add_subcommand("run-matrix", "Run and score every experiment in a config matrix");
  matrix->add_option("--config", o.config, "Config with an \"experiments\" array")->required();
  matrix->add_option("--in", o.in, "Corpus JSONL (overrides every config)");

  auto* schema = app.add_subcommand("schema", "Print or write a schema (default: built-in)");
  schema->add_option("--schema", o.schema, "Schema JSON to load instead of the default");
  schema->add_option("--out", o.out, "Write to this file instead of stdout");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitFatal;
  }

  try {
    if (*synth) return cmd_synth(o, out);
    if (*clean) return cmd_clean(o, out);
    if (*encode) return cmd_encode(o, out);
    if (*extract) return cmd_extract(o, out);
    if (*decode) return cmd_decode(o, out);
    if (*eval) return cmd_eval(o, out);
    if (*export_ft) return cmd_export(o, out);
    if (*matrix) return cmd_matrix(o, out);
    if (*schema) return cmd_schema(o, out);
  } catch (const LengthMismatch& e) {
    err << "error: " << e.what() << '\n';
    return kExitLengthMismatch;
  } catch (const AlignmentError& e) {
    err << "error: " << e.what() << '\n';
    return kExitLengthMismatch;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFatal;
  }
  return kExitFatal;
}

}  // namespace emrgen::cli
