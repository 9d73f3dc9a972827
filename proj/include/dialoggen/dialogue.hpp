#ifndef DIALOGGEN_DIALOGUE_HPP
#define DIALOGGEN_DIALOGUE_HPP

#include <algorithm>
#include <string>
#include <vector>

#include "dialoggen/persona.hpp"

// Topic-guided conversation simulation between two persona agents with
// strict turn alternation, followed by validation and refine-or-fallback.

namespace dialoggen {

struct SimTurn {
  Speaker speaker = Speaker::speaker1;
  std::string text;
  int index = 0;  // 1..T
};

// Strictly alternating conversation: turn 1 is speaker1, odd turns speaker1,
// even turns speaker2, indices gap-free.
struct Conversation {
  std::string topic_name;
  std::vector<SimTurn> turns;
  int turn_count = 0;
};

struct ValidationReport {
  bool is_on_topic = false;
  double adherence_score = 0.0;
  double quality_score = 0.0;
  std::vector<std::string> issues;
  std::vector<std::string> suggestions;
};

struct RefinementOutcome {
  Conversation final;
  bool used_fallback = false;
  bool accepted = false;  // result of the acceptance gate on `report`
  ValidationReport report;
};

inline Speaker speaker_for_turn(int index) {
  return index % 2 == 1 ? Speaker::speaker1 : Speaker::speaker2;
}

namespace detail {

inline std::string history_as_prompt(const std::vector<SimTurn>& turns) {
  if (turns.empty()) return "(no turns yet)";
  std::string out;
  for (const auto& t : turns) out += to_string(t.speaker) + ": " + t.text + "\n";
  out.pop_back();
  return out;
}

inline std::string conversation_as_prompt(const Conversation& c) {
  return history_as_prompt(c.turns);
}

inline std::string lines_joined(const std::vector<std::string>& items) {
  return items.empty() ? "(none)" : strings::join(items, "\n");
}

}  // namespace detail

// True iff the conversation has exactly `expected_turns` turns, alternation
// holds starting with speaker1, every text is nonempty, and indices run
// 1..T gap-free.
inline bool check_structure(const Conversation& c, int expected_turns) {
  if (static_cast<int>(c.turns.size()) != expected_turns) return false;
  if (c.turn_count != expected_turns) return false;
  for (int i = 0; i < expected_turns; ++i) {
    const SimTurn& t = c.turns[i];
    if (t.index != i + 1) return false;
    if (t.speaker != speaker_for_turn(t.index)) return false;
    if (strings::trim(t.text).empty()) return false;
  }
  return true;
}

// Generates exactly T turns sequentially. Turn t is produced by the persona
// agent owning that parity, conditioned on the topic, its persona, and the
// full history buffer of turns 1..t-1. An empty model output is retried
// once, then once more through the minimal continuation prompt; a third
// empty reply aborts the topic.
inline Conversation simulate(const PersonaProfile& p1, const PersonaProfile& p2,
                             const TopicGroup& topic, int total_turns,
                             LlmGateway& gateway, const DecodingParams& decoding = {}) {
  if (p1.speaker != Speaker::speaker1 || p2.speaker != Speaker::speaker2)
    throw Error("simulate requires personas for speaker1 and speaker2 in order");
  if (total_turns < 2) throw Error("simulate requires T >= 2");

  Conversation c;
  c.topic_name = topic.name;
  c.turn_count = total_turns;

  for (int t = 1; t <= total_turns; ++t) {
    const PersonaProfile& active = (speaker_for_turn(t) == Speaker::speaker1) ? p1 : p2;
    std::map<std::string, std::string> bindings = {
        {"topic_name", topic.name},
        {"keywords", strings::join(topic.keywords, ", ")},
        {"speaker", to_string(active.speaker)},
        {"traits", strings::join(active.traits, ", ")},
        {"interests", strings::join(active.interests, ", ")},
        {"history", detail::history_as_prompt(c.turns)},
        {"turn_index", std::to_string(t)},
        {"total_turns", std::to_string(total_turns)},
    };

    std::string text;
    try {
      for (int attempt = 0; attempt < 3 && text.empty(); ++attempt) {
        ChatRequest request;
        // Third try switches to the minimal on-topic continuation prompt.
        request.template_name = attempt < 2 ? "dialogue_turn" : "dialogue_continue";
        request.bindings = bindings;
        request.decoding = decoding;
        text = strings::trim(gateway.complete(request).raw_text);
      }
    } catch (const Error& e) {
      throw SimulationAborted(topic.name, t, e.what());
    }
    if (text.empty()) throw SimulationAborted(topic.name, t, "model returned empty text");

    c.turns.push_back({speaker_for_turn(t), std::move(text), t});
  }
  return c;
}

// Asks the validator for the structured report. Scores outside [0,1] are
// clamped with a warning; absent issue/suggestion lists default to empty.
// Unusable output (transport or schema) raises ValidationUnavailable, which
// callers treat as a rejection that triggers refinement.
inline ValidationReport validate(const Conversation& c, const TopicGroup& topic,
                                 const TripleSet& k1, const TripleSet& k2,
                                 LlmGateway& gateway, const DecodingParams& decoding = {}) {
  ChatRequest request;
  request.template_name = "validation";
  request.bindings = {
      {"topic_name", topic.name},
      {"keywords", strings::join(topic.keywords, ", ")},
      {"conversation", detail::conversation_as_prompt(c)},
      {"speaker1_triples", detail::triples_as_prompt_lines(k1.triples)},
      {"speaker2_triples", detail::triples_as_prompt_lines(k2.triples)},
  };
  request.decoding = decoding;
  request.expects_structured = true;

  json body;
  try {
    body = *gateway.complete(request).structured_payload;
  } catch (const Error&) {
    throw ValidationUnavailable();
  }

  if (!body.is_object() || !body.contains("is_on_topic") || !body["is_on_topic"].is_boolean() ||
      !body.contains("adherence_score") || !body["adherence_score"].is_number() ||
      !body.contains("quality_score") || !body["quality_score"].is_number())
    throw ValidationUnavailable();

  ValidationReport report;
  report.is_on_topic = body["is_on_topic"].get<bool>();
  report.adherence_score = body["adherence_score"].get<double>();
  report.quality_score = body["quality_score"].get<double>();
  for (double* score : {&report.adherence_score, &report.quality_score}) {
    if (*score < 0.0 || *score > 1.0) {
      log::warn("validation score " + std::to_string(*score) + " outside [0,1]; clamping");
      *score = std::clamp(*score, 0.0, 1.0);
    }
  }
  auto read_list = [&](const char* key, std::vector<std::string>& into) {
    if (!body.contains(key) || !body[key].is_array()) return;
    for (const json& v : body[key])
      if (v.is_string()) into.push_back(v.get<std::string>());
  };
  read_list("issues", report.issues);
  read_list("suggestions", report.suggestions);
  return report;
}

// Acceptance gate: on-topic and both scores at or above their thresholds.
inline bool accept(const ValidationReport& r, double adherence_threshold,
                   double quality_threshold) {
  if (adherence_threshold < 0.0 || adherence_threshold > 1.0 ||
      quality_threshold < 0.0 || quality_threshold > 1.0)
    throw Error("acceptance thresholds must be in [0, 1]");
  return r.is_on_topic && r.adherence_score >= adherence_threshold &&
         r.quality_score >= quality_threshold;
}

// Exactly one refinement attempt conditioned on the validator's issues and
// suggestions. A structurally valid candidate replaces the conversation;
// anything else (wrong shape, unparseable, transport failure) falls back to
// the original. Refined conversations are not re-validated.
inline RefinementOutcome refine(const Conversation& c, const ValidationReport& r,
                                int expected_turns, LlmGateway& gateway,
                                const DecodingParams& decoding = {}) {
  ChatRequest request;
  request.template_name = "refinement";
  request.bindings = {
      {"topic_name", c.topic_name},
      {"turn_count", std::to_string(expected_turns)},
      {"conversation", detail::conversation_as_prompt(c)},
      {"issues", detail::lines_joined(r.issues)},
      {"suggestions", detail::lines_joined(r.suggestions)},
  };
  request.decoding = decoding;
  request.expects_structured = true;

  RefinementOutcome outcome;
  outcome.report = r;
  outcome.accepted = false;

  Conversation candidate;
  candidate.topic_name = c.topic_name;
  candidate.turn_count = expected_turns;
  bool parsed = false;
  try {
    const json body = *gateway.complete(request).structured_payload;
    if (body.is_object() && body.contains("turns") && body["turns"].is_array()) {
      parsed = true;
      int index = 0;
      for (const json& t : body["turns"]) {
        SimTurn turn;
        turn.index = ++index;
        if (t.is_object() && t.contains("speaker") && t["speaker"].is_string() &&
            t.contains("text") && t["text"].is_string()) {
          const std::string label = t["speaker"].get<std::string>();
          if (label != "speaker1" && label != "speaker2") {
            parsed = false;
            break;
          }
          turn.speaker = speaker_from_string(label);
          turn.text = strings::trim(t["text"].get<std::string>());
        } else {
          parsed = false;
          break;
        }
        candidate.turns.push_back(std::move(turn));
      }
    }
  } catch (const Error& e) {
    log::warn(std::string("refinement call failed, falling back: ") + e.what());
    parsed = false;
  }

  if (parsed && check_structure(candidate, expected_turns)) {
    outcome.final = std::move(candidate);
    outcome.used_fallback = false;
  } else {
    outcome.final = c;
    outcome.used_fallback = true;
  }
  return outcome;
}

}  // namespace dialoggen

#endif  // DIALOGGEN_DIALOGUE_HPP
