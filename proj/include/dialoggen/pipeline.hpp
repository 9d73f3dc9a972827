#ifndef DIALOGGEN_PIPELINE_HPP
#define DIALOGGEN_PIPELINE_HPP

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "dialoggen/metrics.hpp"
#include "dialoggen/record.hpp"

// Pipeline orchestration: central configuration, the per-pair stage chain
// (ingest -> triples -> topics -> graphs -> personas -> simulate ->
// validate/refine -> QA -> record), streaming newline-delimited export with
// resume, and the run manifest.

namespace dialoggen {

struct PipelineConfig {
  int n_topics = 3;            // N, topics per persona pair
  int turns_per_topic = 30;    // T
  int qa_per_topic = 20;       // N_j
  double adherence_threshold = 0.85;
  double quality_threshold = 0.85;
  double min_triple_confidence = 0.5;
  BackendConfig backend;
  std::uint64_t seed = 0;
  int worker_count = 1;
  std::string prompts_dir = "prompts";
  std::string input_path;
  std::string output_path;
  DecodingParams decoding;

  void validate() const {
    if (n_topics < 1) throw ConfigInvalid("n_topics", "must be >= 1");
    if (turns_per_topic < 2) throw ConfigInvalid("turns_per_topic", "must be >= 2");
    if (qa_per_topic < 1) throw ConfigInvalid("qa_per_topic", "must be >= 1");
    if (adherence_threshold < 0 || adherence_threshold > 1)
      throw ConfigInvalid("adherence_threshold", "must be in [0, 1]");
    if (quality_threshold < 0 || quality_threshold > 1)
      throw ConfigInvalid("quality_threshold", "must be in [0, 1]");
    if (min_triple_confidence < 0 || min_triple_confidence > 1)
      throw ConfigInvalid("min_triple_confidence", "must be in [0, 1]");
    if (worker_count < 1) throw ConfigInvalid("worker_count", "must be >= 1");
    if (!(decoding.temperature >= 0) || !std::isfinite(decoding.temperature))
      throw ConfigInvalid("temperature", "must be finite and >= 0");
    if (decoding.max_output_tokens < 1)
      throw ConfigInvalid("max_output_tokens", "must be >= 1");
    backend.validate();
  }

  json to_json() const {
    return json{{"n_topics", n_topics},
                {"turns_per_topic", turns_per_topic},
                {"qa_per_topic", qa_per_topic},
                {"adherence_threshold", adherence_threshold},
                {"quality_threshold", quality_threshold},
                {"min_triple_confidence", min_triple_confidence},
                {"seed", seed},
                {"worker_count", worker_count},
                {"prompts_dir", prompts_dir},
                {"input_path", input_path},
                {"output_path", output_path},
                {"temperature", decoding.temperature},
                {"max_output_tokens", decoding.max_output_tokens},
                {"backend",
                 json{{"endpoint", backend.endpoint},
                      {"model_id", backend.model_id},
                      {"api_key_env_var", backend.api_key_env_var},
                      {"max_retries", backend.max_retries},
                      {"rate_limit", backend.rate_limit},
                      {"timeout", backend.timeout_seconds}}}};
  }
};

namespace detail {

inline long parse_integer(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigInvalid(key, "not an integer: " + value);
  }
}

inline double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigInvalid(key, "not a number: " + value);
  }
}

}  // namespace detail

// Flat `key = value` file, one entry per line, `#` starts a comment.
// Absent keys keep their defaults; unknown keys are rejected.
inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("config", "cannot open file: " + path.string());

  PipelineConfig cfg;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::string trimmed = strings::trim(line);
    if (trimmed.empty()) continue;
    auto eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw ConfigInvalid(trimmed, "expected key = value");
    std::string key = strings::trim(trimmed.substr(0, eq));
    std::string value = strings::trim(trimmed.substr(eq + 1));

    if (key == "n_topics") cfg.n_topics = static_cast<int>(detail::parse_integer(key, value));
    else if (key == "turns_per_topic") cfg.turns_per_topic = static_cast<int>(detail::parse_integer(key, value));
    else if (key == "qa_per_topic") cfg.qa_per_topic = static_cast<int>(detail::parse_integer(key, value));
    else if (key == "adherence_threshold") cfg.adherence_threshold = detail::parse_real(key, value);
    else if (key == "quality_threshold") cfg.quality_threshold = detail::parse_real(key, value);
    else if (key == "min_triple_confidence") cfg.min_triple_confidence = detail::parse_real(key, value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(detail::parse_integer(key, value));
    else if (key == "worker_count") cfg.worker_count = static_cast<int>(detail::parse_integer(key, value));
    else if (key == "prompts_dir") cfg.prompts_dir = value;
    else if (key == "input_path") cfg.input_path = value;
    else if (key == "output_path") cfg.output_path = value;
    else if (key == "temperature") cfg.decoding.temperature = detail::parse_real(key, value);
    else if (key == "max_output_tokens") cfg.decoding.max_output_tokens = static_cast<int>(detail::parse_integer(key, value));
    else if (key == "backend.endpoint") cfg.backend.endpoint = value;
    else if (key == "backend.model_id") cfg.backend.model_id = value;
    else if (key == "backend.api_key_env_var") cfg.backend.api_key_env_var = value;
    else if (key == "backend.max_retries") cfg.backend.max_retries = static_cast<int>(detail::parse_integer(key, value));
    else if (key == "backend.rate_limit") cfg.backend.rate_limit = static_cast<int>(detail::parse_integer(key, value));
    else if (key == "backend.timeout") cfg.backend.timeout_seconds = detail::parse_real(key, value);
    else throw ConfigInvalid(key, "unknown key");
  }
  cfg.validate();
  return cfg;
}

struct RunManifest {
  json config_snapshot;
  std::size_t pairs_in = 0;
  std::size_t pairs_completed = 0;
  std::size_t pairs_failed = 0;
  std::size_t topics_emitted = 0;
  std::size_t records = 0;
  std::size_t qa_pairs = 0;
  std::map<std::string, int> stage_errors;
  double wall_time_seconds = 0.0;

  json to_json() const {
    return json{{"config", config_snapshot},
                {"counts", json{{"pairs_in", pairs_in},
                                {"pairs_completed", pairs_completed},
                                {"pairs_failed", pairs_failed},
                                {"topics_emitted", topics_emitted},
                                {"records", records},
                                {"qa_pairs", qa_pairs}}},
                {"stage_errors", stage_errors},
                {"wall_time_seconds", wall_time_seconds}};
  }
};

namespace detail {

// Scans an existing output file for completed (pair_id, topic) keys. A
// partial trailing line (crash artifact) is dropped and the file rewritten
// with only the complete records, so appends stay idempotent.
inline std::set<std::string> scan_existing_output(const std::filesystem::path& path) {
  std::set<std::string> keys;
  if (!std::filesystem::exists(path)) return keys;

  std::ifstream in(path, std::ios::binary);
  std::vector<std::string> valid_lines;
  bool needs_rewrite = false;
  std::string line;
  while (std::getline(in, line)) {
    json parsed = json::parse(line, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("pair_id") || !parsed.contains("topic")) {
      needs_rewrite = true;  // drop the damaged tail
      break;
    }
    keys.insert(record_key(parsed["pair_id"].get<std::string>(),
                           parsed["topic"]["name"].get<std::string>()));
    valid_lines.push_back(line);
  }
  in.close();

  if (needs_rewrite) {
    log::warn("output file " + path.string() + " has an incomplete trailing record; truncating it");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    for (const auto& l : valid_lines) out << l << "\n";
  }
  return keys;
}

}  // namespace detail

// Serializes records as newline-delimited JSON with stable key order.
inline void export_records(const std::vector<DatasetRecord>& records,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOFailure("cannot open output file: " + path.string());
  for (const auto& r : records) out << record_to_json(r).dump() << "\n";
  if (!out) throw IOFailure("failed writing records to " + path.string());
}

inline std::vector<DatasetRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IOFailure("cannot open records file: " + path.string());
  std::vector<DatasetRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (strings::trim(line).empty()) continue;
    json parsed = json::parse(line, nullptr, false);
    if (parsed.is_discarded())
      throw IOFailure("invalid record JSON at line " + std::to_string(line_no));
    records.push_back(record_from_json(parsed));
  }
  return records;
}

// Runs the full generation pipeline for every persona pair in the input.
// Pair- and topic-level failures are isolated: the error tally for the
// failing stage is incremented and the run continues. Completed records
// stream to the output file as they finish; re-running with an existing
// output resumes after the last complete record.
inline RunManifest run_pipeline(const PipelineConfig& cfg, LlmGateway& gateway) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();

  RunManifest manifest;
  manifest.config_snapshot = cfg.to_json();

  std::set<std::string> completed_keys = detail::scan_existing_output(cfg.output_path);
  if (!completed_keys.empty())
    log::info("resuming: " + std::to_string(completed_keys.size()) + " records already present");

  std::vector<SourceConversation> pairs = load_source(cfg.input_path);
  manifest.pairs_in = pairs.size();

  std::ofstream out(cfg.output_path, std::ios::binary | std::ios::app);
  if (!out) throw IOFailure("cannot open output file: " + cfg.output_path);

  std::mutex out_mutex;
  std::mutex manifest_mutex;

  auto tally_error = [&](const std::string& stage, const std::string& what) {
    std::lock_guard<std::mutex> lock(manifest_mutex);
    ++manifest.stage_errors[stage];
    log::warn("stage '" + stage + "' failed: " + what);
  };

  auto process_pair = [&](const SourceConversation& src) {
    std::string stage = "ingest";
    try {
      auto canonical = resolve_speakers(src);
      canonical = rewrite_pronouns(canonical, gateway, cfg.decoding);
      auto cleaned = clean_turns(canonical);
      const int t_source = static_cast<int>(cleaned.size());

      stage = "triples";
      TripleSet extracted = extract_triples(cleaned, gateway, cfg.decoding);
      TripleSet filtered = filter_triples(extracted, cfg.min_triple_confidence);
      if (filtered.empty()) {
        log::info("pair " + src.pair_id + ": no triples above confidence threshold; skipping");
        std::lock_guard<std::mutex> lock(manifest_mutex);
        ++manifest.pairs_completed;
        return;
      }

      stage = "topics";
      TopicSet topics = extract_topics(filtered, gateway, cfg.decoding);
      TopicSet ranked = retain_and_rank(topics, cfg.n_topics);
      if (ranked.topics.empty())
        log::info("pair " + src.pair_id + ": no topic involves both speakers; skipping");

      for (const TopicGroup& topic : ranked.topics) {
        if (completed_keys.count(record_key(src.pair_id, topic.name))) continue;
        try {
          stage = "graphs";
          const TripleSet& k1 = topic.speaker_triples.at(Speaker::speaker1);
          const TripleSet& k2 = topic.speaker_triples.at(Speaker::speaker2);
          std::map<Speaker, KnowledgeGraph> kgs;
          kgs[Speaker::speaker1] = build_graph(k1);
          kgs[Speaker::speaker2] = build_graph(k2);

          stage = "persona";
          std::map<Speaker, PersonaProfile> personas;
          personas[Speaker::speaker1] =
              generate_persona(Speaker::speaker1, k1, topic, gateway, cfg.decoding);
          personas[Speaker::speaker2] =
              generate_persona(Speaker::speaker2, k2, topic, gateway, cfg.decoding);

          stage = "simulate";
          Conversation conv = simulate(personas[Speaker::speaker1], personas[Speaker::speaker2],
                                       topic, cfg.turns_per_topic, gateway, cfg.decoding);

          stage = "validate";
          RefinementOutcome outcome;
          ValidationReport report;
          bool available = true;
          try {
            report = validate(conv, topic, k1, k2, gateway, cfg.decoding);
          } catch (const ValidationUnavailable&) {
            available = false;
            report.issues = {"validation unavailable"};
            tally_error("validate", "validation unavailable; treating as rejection");
          }
          const bool is_accepted =
              available && accept(report, cfg.adherence_threshold, cfg.quality_threshold);
          if (is_accepted) {
            outcome.final = conv;
            outcome.used_fallback = false;
            outcome.accepted = true;
            outcome.report = report;
          } else {
            stage = "refine";
            outcome = refine(conv, report, cfg.turns_per_topic, gateway, cfg.decoding);
          }

          stage = "qa";
          QASet qa = generate_qa(k1, k2, outcome.final, cfg.qa_per_topic, gateway, cfg.decoding);

          stage = "assemble";
          DatasetRecord record =
              assemble_record(src.pair_id, topic, outcome, kgs, personas, qa, t_source);

          {
            std::lock_guard<std::mutex> lock(out_mutex);
            out << record_to_json(record).dump() << "\n";
            out.flush();
          }
          {
            std::lock_guard<std::mutex> lock(manifest_mutex);
            ++manifest.topics_emitted;
          }
        } catch (const Error& e) {
          tally_error(stage, "pair " + src.pair_id + ", topic '" + topic.name + "': " + e.what());
        }
      }

      std::lock_guard<std::mutex> lock(manifest_mutex);
      ++manifest.pairs_completed;
    } catch (const Error& e) {
      tally_error(stage, "pair " + src.pair_id + ": " + e.what());
      std::lock_guard<std::mutex> lock(manifest_mutex);
      ++manifest.pairs_failed;
    }
  };

  const int workers = std::min<int>(cfg.worker_count, static_cast<int>(pairs.size()));
  if (workers <= 1) {
    for (const auto& pair : pairs) process_pair(pair);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w)
      threads.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= pairs.size()) return;
          process_pair(pairs[i]);
        }
      });
    for (auto& t : threads) t.join();
  }

  manifest.records = manifest.topics_emitted;
  manifest.qa_pairs = manifest.records * static_cast<std::size_t>(cfg.qa_per_topic);
  manifest.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  std::ofstream mf(cfg.output_path + ".manifest.json", std::ios::trunc);
  if (mf) mf << manifest.to_json().dump(2) << "\n";
  return manifest;
}

// Adapter from dataset records to the metric module's conversation view.
inline EvaluationResult evaluate_records(const std::vector<DatasetRecord>& records,
                                         const EmbeddingProvider& embedder) {
  std::vector<EvalConversation> conversations;
  conversations.reserve(records.size());
  for (const auto& r : records) {
    EvalConversation c;
    c.pair_id = r.pair_id;
    c.topic = r.topic_name;
    for (const auto& t : r.conversation.turns) c.turn_texts.push_back(t.text);
    conversations.push_back(std::move(c));
  }
  return evaluate_dataset(conversations, embedder);
}

}  // namespace dialoggen

#endif  // DIALOGGEN_PIPELINE_HPP
