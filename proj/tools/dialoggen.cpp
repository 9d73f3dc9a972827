// Command-line front end: generation, evaluation, split, scoring, and
// inspection subcommands over the dialoggen pipeline.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dialoggen/pipeline.hpp"

namespace {

using dialoggen::json;

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitConfig = 2;

double round2(double v) { return std::round(v * 100.0) / 100.0; }

// Scores bounded to [0,1] are presented as percentages; perplexity and
// Flesch use their natural scales.
json report_to_json(const dialoggen::MetricReport& r) {
  return json{{"flow_precision", round2(r.flow.precision * 100)},
              {"flow_recall", round2(r.flow.recall * 100)},
              {"flow_f1", round2(r.flow.f1 * 100)},
              {"self_bleu", round2(r.self_bleu * 100)},
              {"perplexity", round2(r.perplexity)},
              {"rouge1", round2(r.rouge1 * 100)},
              {"rouge2", round2(r.rouge2 * 100)},
              {"rougeL", round2(r.rougeL * 100)},
              {"semantic_similarity", round2(r.semantic_similarity * 100)},
              {"entity_overlap", round2(r.entity_overlap * 100)},
              {"flesch", round2(r.flesch)}};
}

// Mock script file: {"tag": [entry, ...]} where an entry is a plain string,
// {"text": str, "repeat": n}, or {"fail": true, "repeat": n}.
void register_mock_file(dialoggen::LlmGateway& gateway, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw dialoggen::IOFailure("cannot open mock script: " + path.string());
  json script = json::parse(in, nullptr, false);
  if (script.is_discarded() || !script.is_object())
    throw dialoggen::IOFailure("mock script must be a JSON object of tag -> entries");

  for (const auto& [tag, entries] : script.items()) {
    if (!entries.is_array())
      throw dialoggen::IOFailure("mock script entries for '" + tag + "' must be an array");
    std::vector<dialoggen::MockEntry> queue;
    for (const auto& entry : entries) {
      int repeat = 1;
      dialoggen::MockEntry e;
      if (entry.is_string()) {
        e = dialoggen::MockEntry::ok(entry.get<std::string>());
      } else if (entry.is_object()) {
        repeat = entry.value("repeat", 1);
        if (entry.value("fail", false))
          e = dialoggen::MockEntry::failure();
        else
          e = dialoggen::MockEntry::ok(entry.value("text", ""));
      } else {
        throw dialoggen::IOFailure("mock script entry must be a string or object");
      }
      for (int i = 0; i < repeat; ++i) queue.push_back(e);
    }
    gateway.register_mock_script(tag, std::move(queue));
  }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw dialoggen::IOFailure("cannot open file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

int cmd_generate(const std::string& config_path, const std::string& mock_path) {
  dialoggen::PipelineConfig cfg = dialoggen::load_config(config_path);
  dialoggen::PromptLibrary prompts = dialoggen::PromptLibrary::from_directory(cfg.prompts_dir);
  dialoggen::LlmGateway gateway(cfg.backend, std::move(prompts));
  if (!mock_path.empty()) register_mock_file(gateway, mock_path);

  dialoggen::RunManifest manifest = dialoggen::run_pipeline(cfg, gateway);
  std::cout << manifest.to_json().dump(2) << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& input, const std::string& embedder_kind,
             const std::string& config_path, const std::string& report_path,
             const std::string& per_conversation_path) {
  auto records = dialoggen::load_records(input);

  std::unique_ptr<dialoggen::EmbeddingProvider> embedder;
  if (embedder_kind == "test") {
    embedder = std::make_unique<dialoggen::HashEmbedder>();
  } else if (embedder_kind == "remote") {
    if (config_path.empty())
      throw dialoggen::ConfigInvalid("embedder", "remote embedder requires --config");
    dialoggen::PipelineConfig cfg = dialoggen::load_config(config_path);
    embedder = std::make_unique<dialoggen::RemoteEmbedder>(
        cfg.backend.endpoint, cfg.backend.model_id, cfg.backend.api_key_env_var, 1536);
  } else {
    throw dialoggen::ConfigInvalid("embedder", "must be 'test' or 'remote'");
  }

  dialoggen::EvaluationResult result = dialoggen::evaluate_records(records, *embedder);
  json report = report_to_json(result.report);
  std::cout << report.dump(2) << "\n";

  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::trunc);
    out << report.dump(2) << "\n";
  }
  std::string per_conv = per_conversation_path.empty() ? input + ".per_conversation.jsonl"
                                                       : per_conversation_path;
  std::ofstream out(per_conv, std::ios::trunc);
  for (const auto& cm : result.per_conversation) {
    out << json{{"pair_id", cm.pair_id},
                {"topic", cm.topic},
                {"has_pair_metrics", cm.has_pair_metrics},
                {"flow_precision", cm.values.flow.precision},
                {"flow_recall", cm.values.flow.recall},
                {"flow_f1", cm.values.flow.f1},
                {"self_bleu", cm.values.self_bleu},
                {"perplexity", cm.values.perplexity},
                {"rouge1", cm.values.rouge1},
                {"rouge2", cm.values.rouge2},
                {"rougeL", cm.values.rougeL},
                {"semantic_similarity", cm.values.semantic_similarity},
                {"entity_overlap", cm.values.entity_overlap},
                {"flesch", cm.values.flesch}}
               .dump()
        << "\n";
  }
  return kExitOk;
}

int cmd_qa_split(const std::string& input, std::uint64_t seed, const std::string& output_dir) {
  auto records = dialoggen::load_records(input);
  std::vector<std::string> pair_ids;
  std::set<std::string> seen;
  for (const auto& r : records)
    if (seen.insert(r.pair_id).second) pair_ids.push_back(r.pair_id);

  dialoggen::SplitAssignment split =
      dialoggen::split_pairs(pair_ids, dialoggen::SplitRatios{}, seed);

  std::filesystem::create_directories(output_dir);
  auto write_list = [&](const std::string& name, const std::vector<std::string>& ids) {
    std::ofstream out(std::filesystem::path(output_dir) / name, std::ios::trunc);
    if (!out) throw dialoggen::IOFailure("cannot write split file: " + name);
    for (const auto& id : ids) out << id << "\n";
  };
  write_list("train.txt", split.train);
  write_list("validation.txt", split.validation);
  write_list("test.txt", split.test);
  std::cout << "train=" << split.train.size() << " validation=" << split.validation.size()
            << " test=" << split.test.size() << "\n";
  return kExitOk;
}

// Builder mode for the QA evaluation harness: emits one JSON line per QA
// pair with the chosen memory context (speaker knowledge graphs vs the raw
// conversation), the question, and the gold answer.
int cmd_qa_emit_inputs(const std::string& records_path, const std::string& context_kind,
                       const std::string& emit_path) {
  auto records = dialoggen::load_records(records_path);
  std::ofstream out(emit_path, std::ios::trunc);
  if (!out) throw dialoggen::IOFailure("cannot write inputs file: " + emit_path);

  for (const auto& r : records) {
    std::string context;
    if (context_kind == "kg") {
      for (const auto& [speaker, ts] : r.speaker_triples)
        for (const auto& t : ts.triples)
          context += t.subject + " | " + t.relation + " | " + t.object + "\n";
    } else {
      for (const auto& t : r.conversation.turns)
        context += dialoggen::to_string(t.speaker) + ": " + t.text + "\n";
    }
    for (const auto& p : r.qa.pairs) {
      out << json{{"pair_id", r.pair_id},
                  {"topic", r.topic_name},
                  {"context", context},
                  {"question", p.question},
                  {"gold", p.answer}}
                 .dump()
          << "\n";
    }
  }
  return kExitOk;
}

int cmd_qa_score(const std::string& pred_path, const std::string& gold_path,
                 const std::string& context_kind, const std::string& report_path) {
  auto preds = read_lines(pred_path);
  auto golds = read_lines(gold_path);
  dialoggen::QAScore score = dialoggen::score_qa(preds, golds);

  json report = {{"precision", round2(score.precision * 100)},
                 {"recall", round2(score.recall * 100)},
                 {"f1", round2(score.f1 * 100)},
                 {"exact_match", round2(score.exact_match * 100)}};
  if (!context_kind.empty()) report["context"] = context_kind;
  std::cout << report.dump(2) << "\n";
  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::trunc);
    out << report.dump(2) << "\n";
  }
  return kExitOk;
}

int cmd_inspect(const std::string& input) {
  auto records = dialoggen::load_records(input);
  std::set<std::string> pairs;
  std::size_t turns = 0, qa = 0, accepted = 0, fallback = 0;
  for (const auto& r : records) {
    pairs.insert(r.pair_id);
    turns += r.conversation.turns.size();
    qa += r.qa.pairs.size();
    if (r.accepted) ++accepted;
    if (r.used_fallback) ++fallback;
  }
  std::cout << "pairs=" << pairs.size() << "\n"
            << "records=" << records.size() << "\n"
            << "topics=" << records.size() << "\n"
            << "turns=" << turns << "\n"
            << "qa=" << qa << "\n"
            << "accepted=" << accepted << "\n"
            << "fallback=" << fallback << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topic-guided conversation dataset generator"};
  app.require_subcommand(1);

  std::string config_path, mock_path;
  auto* generate = app.add_subcommand("generate", "Run the generation pipeline");
  generate->add_option("--config", config_path, "Pipeline config file")->required();
  generate->add_option("--mock", mock_path, "Scripted mock responses (JSON), for offline runs");

  std::string eval_input, embedder_kind = "test", eval_config, eval_report, per_conv;
  auto* eval = app.add_subcommand("eval", "Compute the automatic evaluation metrics");
  eval->add_option("--input", eval_input, "Records file (ndjson)")->required();
  eval->add_option("--embedder", embedder_kind, "Embedding provider: test|remote");
  eval->add_option("--config", eval_config, "Config file (required for remote embedder)");
  eval->add_option("--output", eval_report, "Write the report JSON here as well");
  eval->add_option("--per-conversation", per_conv, "Per-conversation values file");

  std::string split_input, split_dir = ".";
  std::uint64_t split_seed = 0;
  auto* qa_split = app.add_subcommand("qa-split", "Persona-pair-level train/val/test split");
  qa_split->add_option("--input", split_input, "Records file (ndjson)")->required();
  qa_split->add_option("--seed", split_seed, "Shuffle seed")->required();
  qa_split->add_option("--output-dir", split_dir, "Directory for the three split files");

  std::string pred_path, gold_path, context_kind, score_report;
  std::string score_records, emit_inputs;
  auto* qa_score = app.add_subcommand("qa-score", "Score predictions against gold answers");
  qa_score->add_option("--pred", pred_path, "Predictions, one answer per line");
  qa_score->add_option("--gold", gold_path, "Gold answers, one answer per line");
  qa_score->add_option("--context", context_kind, "Context condition: kg|raw");
  qa_score->add_option("--output", score_report, "Write the score JSON here as well");
  qa_score->add_option("--records", score_records, "Records file (input-builder mode)");
  qa_score->add_option("--emit-inputs", emit_inputs, "Emit model inputs to this file and exit");

  std::string inspect_input;
  auto* inspect = app.add_subcommand("inspect", "Summarize a records file");
  inspect->add_option("--input", inspect_input, "Records file (ndjson)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(config_path, mock_path);
    if (eval->parsed())
      return cmd_eval(eval_input, embedder_kind, eval_config, eval_report, per_conv);
    if (qa_split->parsed()) return cmd_qa_split(split_input, split_seed, split_dir);
    if (qa_score->parsed()) {
      if (!emit_inputs.empty()) {
        if (score_records.empty() || context_kind.empty())
          throw dialoggen::ConfigInvalid("qa-score",
                                         "--emit-inputs requires --records and --context");
        if (context_kind != "kg" && context_kind != "raw")
          throw dialoggen::ConfigInvalid("context", "must be 'kg' or 'raw'");
        return cmd_qa_emit_inputs(score_records, context_kind, emit_inputs);
      }
      if (pred_path.empty() || gold_path.empty())
        throw dialoggen::ConfigInvalid("qa-score", "scoring requires --pred and --gold");
      return cmd_qa_score(pred_path, gold_path, context_kind, score_report);
    }
    if (inspect->parsed()) return cmd_inspect(inspect_input);
  } catch (const dialoggen::ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  }
  return kExitFatal;
}
