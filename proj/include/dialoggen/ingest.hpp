#ifndef DIALOGGEN_INGEST_HPP
#define DIALOGGEN_INGEST_HPP

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialoggen/errors.hpp"
#include "dialoggen/gateway.hpp"
#include "dialoggen/log.hpp"
#include "dialoggen/strings.hpp"

// Source-dataset loading and preprocessing: canonical speaker assignment,
// LLM pronoun rewriting, and turn cleaning.

namespace dialoggen {

enum class Speaker { speaker1, speaker2 };

inline std::string to_string(Speaker s) {
  return s == Speaker::speaker1 ? "speaker1" : "speaker2";
}

inline Speaker speaker_from_string(const std::string& s) {
  if (s == "speaker1") return Speaker::speaker1;
  if (s == "speaker2") return Speaker::speaker2;
  throw Error("not a canonical speaker label: " + s);
}

inline Speaker other_speaker(Speaker s) {
  return s == Speaker::speaker1 ? Speaker::speaker2 : Speaker::speaker1;
}

struct RawTurn {
  std::string speaker_label;
  std::string text;
};

// A source-side turn after speaker canonicalization, before cleaning.
struct CanonicalTurn {
  Speaker speaker;
  std::string text;
};

// A cleaned turn ready for the knowledge stages. Indices run 1..T gap-free.
struct Turn {
  Speaker speaker;
  std::string text;
  int index = 0;
};

struct SourceConversation {
  std::string pair_id;
  std::vector<std::vector<RawTurn>> sessions;
  int total_turns = 0;  // raw turn count across all sessions
};

namespace detail {

inline SourceConversation parse_pair_record(const json& record, std::size_t line_no) {
  if (!record.is_object()) throw SchemaViolation(line_no, "record is not an object");
  if (!record.contains("pair_id") || !record["pair_id"].is_string())
    throw SchemaViolation(line_no, "missing string field 'pair_id'");
  if (!record.contains("sessions") || !record["sessions"].is_array())
    throw SchemaViolation(line_no, "missing array field 'sessions'");

  SourceConversation src;
  src.pair_id = record["pair_id"].get<std::string>();
  std::set<std::string> labels;
  for (const json& session : record["sessions"]) {
    if (!session.is_array()) throw SchemaViolation(line_no, "session is not an array");
    std::vector<RawTurn> turns;
    for (const json& turn : session) {
      if (!turn.is_object() || !turn.contains("speaker") || !turn["speaker"].is_string() ||
          !turn.contains("text") || !turn["text"].is_string())
        throw SchemaViolation(line_no, "turn must be {\"speaker\": str, \"text\": str}");
      RawTurn rt{turn["speaker"].get<std::string>(), turn["text"].get<std::string>()};
      if (rt.speaker_label.empty())
        throw SchemaViolation(line_no, "empty speaker label");
      labels.insert(rt.speaker_label);
      turns.push_back(std::move(rt));
      ++src.total_turns;
    }
    src.sessions.push_back(std::move(turns));
  }
  if (labels.size() != 2)
    throw SchemaViolation(line_no, "expected exactly two distinct speaker labels, got " +
                                       std::to_string(labels.size()));
  return src;
}

}  // namespace detail

// Reads newline-delimited pair records:
//   {"pair_id": str, "sessions": [[{"speaker": str, "text": str}, ...], ...]}
inline std::vector<SourceConversation> load_source(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IOFailure("cannot open input file: " + path.string());

  std::vector<SourceConversation> out;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (strings::trim(line).empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded()) throw SchemaViolation(line_no, "invalid JSON");
    SourceConversation src = detail::parse_pair_record(record, line_no);
    if (!seen_ids.insert(src.pair_id).second) throw DuplicatePairId(src.pair_id);
    out.push_back(std::move(src));
  }
  return out;
}

// Flattens sessions in original order and maps the label of the
// chronologically first turn to speaker1, the other label to speaker2.
// The mapping is stable across all sessions of the pair.
inline std::vector<CanonicalTurn> resolve_speakers(const SourceConversation& src) {
  std::vector<CanonicalTurn> out;
  std::string first_label;
  for (const auto& session : src.sessions) {
    for (const auto& turn : session) {
      if (first_label.empty()) first_label = turn.speaker_label;
      out.push_back({turn.speaker_label == first_label ? Speaker::speaker1
                                                       : Speaker::speaker2,
                     turn.text});
    }
  }
  return out;
}

// Identity overload so that re-resolving an already-canonical sequence is
// well defined (and idempotent: the first turn is already speaker1).
inline std::vector<CanonicalTurn> resolve_speakers(const std::vector<CanonicalTurn>& turns) {
  std::vector<CanonicalTurn> out;
  bool swap = !turns.empty() && turns.front().speaker == Speaker::speaker2;
  for (const auto& t : turns)
    out.push_back({swap ? other_speaker(t.speaker) : t.speaker, t.text});
  return out;
}

// One batched LLM call rewrites first/second-person pronouns to the canonical
// speaker identifiers across the whole conversation. A failed batch keeps the
// original texts and logs a warning; count, order and speakers never change.
inline std::vector<CanonicalTurn> rewrite_pronouns(const std::vector<CanonicalTurn>& turns,
                                                   LlmGateway& gateway,
                                                   const DecodingParams& decoding = {}) {
  if (turns.empty()) return turns;

  json payload = json::array();
  for (const auto& t : turns)
    payload.push_back({{"speaker", to_string(t.speaker)}, {"text", t.text}});

  ChatRequest request;
  request.template_name = "pronoun_rewrite";
  request.bindings = {{"turns", payload.dump(2)},
                      {"turn_count", std::to_string(turns.size())}};
  request.decoding = decoding;
  request.expects_structured = true;

  try {
    ChatResponse response = gateway.complete(request);
    const json& body = *response.structured_payload;
    if (!body.is_object() || !body.contains("turns") || !body["turns"].is_array() ||
        body["turns"].size() != turns.size())
      throw StructuredParseFailure(response.raw_text);
    std::vector<CanonicalTurn> out;
    out.reserve(turns.size());
    for (std::size_t i = 0; i < turns.size(); ++i) {
      const json& t = body["turns"][i];
      if (!t.is_string()) throw StructuredParseFailure(response.raw_text);
      out.push_back({turns[i].speaker, t.get<std::string>()});
    }
    return out;
  } catch (const Error& e) {
    log::warn(std::string("pronoun rewrite failed, keeping original texts: ") + e.what());
    return turns;
  }
}

// Whitespace-normalizes every turn, drops turns that end up empty, and
// re-indexes the survivors 1..K gap-free. The post-clean count is what the
// pipeline reports as T_source.
inline std::vector<Turn> clean_turns(const std::vector<CanonicalTurn>& turns) {
  std::vector<Turn> out;
  for (const auto& t : turns) {
    std::string text = strings::collapse_whitespace(t.text);
    if (text.empty()) continue;
    out.push_back({t.speaker, std::move(text), static_cast<int>(out.size()) + 1});
  }
  if (out.empty()) throw EmptyConversation();
  return out;
}

}  // namespace dialoggen

#endif  // DIALOGGEN_INGEST_HPP
