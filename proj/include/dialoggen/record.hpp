#ifndef DIALOGGEN_RECORD_HPP
#define DIALOGGEN_RECORD_HPP

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialoggen/dialogue.hpp"
#include "dialoggen/qa.hpp"

// Dataset record assembly and the newline-delimited JSON schema it exports.
// Serialization uses alphabetically ordered keys throughout, so identical
// records always produce identical bytes.

namespace dialoggen {

// One exported instance: a topic of a persona pair with the finalized
// conversation, per-speaker knowledge graphs, personas, and QA set.
struct DatasetRecord {
  std::string pair_id;
  std::string topic_name;
  std::vector<std::string> topic_keywords;
  double topic_importance = 0.0;
  Conversation conversation;
  ValidationReport validation;
  std::map<Speaker, KnowledgeGraph> speaker_kgs;
  std::map<Speaker, TripleSet> speaker_triples;
  std::map<Speaker, PersonaProfile> personas;
  QASet qa;
  int source_turn_count = 0;
  bool accepted = false;
  bool used_fallback = false;
};

namespace serde {

inline json triple_to_json(const KnowledgeTriple& t) {
  return json{{"subject", t.subject},   {"relation", t.relation},
              {"object", t.object},     {"confidence", t.confidence},
              {"source_turn", t.source_turn}, {"speaker", to_string(t.speaker)}};
}

inline KnowledgeTriple triple_from_json(const json& j) {
  KnowledgeTriple t;
  t.subject = j.at("subject").get<std::string>();
  t.relation = j.at("relation").get<std::string>();
  t.object = j.at("object").get<std::string>();
  t.confidence = j.at("confidence").get<double>();
  t.source_turn = j.at("source_turn").get<int>();
  t.speaker = speaker_from_string(j.at("speaker").get<std::string>());
  return t;
}

inline json triples_to_json(const TripleSet& ts) {
  json arr = json::array();
  for (const auto& t : ts.triples) arr.push_back(triple_to_json(t));
  return arr;
}

inline TripleSet triples_from_json(const json& j) {
  TripleSet ts;
  for (const auto& item : j) ts.triples.push_back(triple_from_json(item));
  return ts;
}

inline json graph_to_json(const KnowledgeGraph& g) {
  json edges = json::array();
  for (const auto& e : g.edges)
    edges.push_back(json{{"src", e.src},
                         {"dst", e.dst},
                         {"rel", e.relation},
                         {"speaker", to_string(e.speaker)},
                         {"confidence", e.confidence}});
  return json{{"nodes", g.nodes}, {"edges", edges}};
}

inline KnowledgeGraph graph_from_json(const json& j) {
  KnowledgeGraph g;
  for (const auto& n : j.at("nodes")) g.nodes.push_back(n.get<std::string>());
  for (const auto& e : j.at("edges"))
    g.edges.push_back({e.at("src").get<std::string>(), e.at("dst").get<std::string>(),
                       e.at("rel").get<std::string>(),
                       speaker_from_string(e.at("speaker").get<std::string>()),
                       e.at("confidence").get<double>()});
  return g;
}

inline json validation_to_json(const ValidationReport& r) {
  return json{{"is_on_topic", r.is_on_topic},
              {"adherence_score", r.adherence_score},
              {"quality_score", r.quality_score},
              {"issues", r.issues},
              {"suggestions", r.suggestions}};
}

inline ValidationReport validation_from_json(const json& j) {
  ValidationReport r;
  r.is_on_topic = j.at("is_on_topic").get<bool>();
  r.adherence_score = j.at("adherence_score").get<double>();
  r.quality_score = j.at("quality_score").get<double>();
  for (const auto& s : j.at("issues")) r.issues.push_back(s.get<std::string>());
  for (const auto& s : j.at("suggestions")) r.suggestions.push_back(s.get<std::string>());
  return r;
}

inline json persona_to_json(const PersonaProfile& p) {
  return json{{"speaker", to_string(p.speaker)},
              {"traits", p.traits},
              {"interests", p.interests},
              {"triples", triples_to_json(p.triples)}};
}

inline PersonaProfile persona_from_json(const json& j) {
  PersonaProfile p;
  p.speaker = speaker_from_string(j.at("speaker").get<std::string>());
  for (const auto& s : j.at("traits")) p.traits.push_back(s.get<std::string>());
  for (const auto& s : j.at("interests")) p.interests.push_back(s.get<std::string>());
  p.triples = triples_from_json(j.at("triples"));
  return p;
}

}  // namespace serde

inline json record_to_json(const DatasetRecord& r) {
  json turns = json::array();
  for (const auto& t : r.conversation.turns)
    turns.push_back(json{{"speaker", to_string(t.speaker)}, {"text", t.text}, {"index", t.index}});

  json qa = json::array();
  for (const auto& p : r.qa.pairs)
    qa.push_back(json{{"question", p.question},
                      {"answer", p.answer},
                      {"source", to_string(p.source)},
                      {"topic", p.topic_name}});

  json kgs = json::object();
  for (const auto& [speaker, graph] : r.speaker_kgs) {
    json entry = serde::graph_to_json(graph);
    auto it = r.speaker_triples.find(speaker);
    entry["triples"] = it != r.speaker_triples.end() ? serde::triples_to_json(it->second)
                                                     : json::array();
    kgs[to_string(speaker)] = std::move(entry);
  }

  json personas = json::object();
  for (const auto& [speaker, profile] : r.personas)
    personas[to_string(speaker)] = serde::persona_to_json(profile);

  return json{
      {"pair_id", r.pair_id},
      {"topic", json{{"name", r.topic_name},
                     {"keywords", r.topic_keywords},
                     {"importance", r.topic_importance}}},
      {"conversation", json{{"topic", r.conversation.topic_name},
                            {"turns", turns},
                            {"accepted", r.accepted},
                            {"used_fallback", r.used_fallback},
                            {"validation", serde::validation_to_json(r.validation)}}},
      {"speaker_kgs", kgs},
      {"personas", personas},
      {"qa", qa},
      {"source_turn_count", r.source_turn_count},
      {"accepted", r.accepted},
      {"used_fallback", r.used_fallback},
  };
}

inline DatasetRecord record_from_json(const json& j) {
  DatasetRecord r;
  r.pair_id = j.at("pair_id").get<std::string>();
  const json& topic = j.at("topic");
  r.topic_name = topic.at("name").get<std::string>();
  for (const auto& k : topic.at("keywords")) r.topic_keywords.push_back(k.get<std::string>());
  r.topic_importance = topic.at("importance").get<double>();

  const json& conv = j.at("conversation");
  r.conversation.topic_name = conv.at("topic").get<std::string>();
  for (const auto& t : conv.at("turns"))
    r.conversation.turns.push_back({speaker_from_string(t.at("speaker").get<std::string>()),
                                    t.at("text").get<std::string>(),
                                    t.at("index").get<int>()});
  r.conversation.turn_count = static_cast<int>(r.conversation.turns.size());
  r.validation = serde::validation_from_json(conv.at("validation"));

  for (const auto& [key, entry] : j.at("speaker_kgs").items()) {
    const Speaker speaker = speaker_from_string(key);
    r.speaker_kgs[speaker] = serde::graph_from_json(entry);
    r.speaker_triples[speaker] = serde::triples_from_json(entry.at("triples"));
  }
  for (const auto& [key, entry] : j.at("personas").items())
    r.personas[speaker_from_string(key)] = serde::persona_from_json(entry);

  for (const auto& p : j.at("qa")) {
    QAPair pair;
    pair.question = p.at("question").get<std::string>();
    pair.answer = p.at("answer").get<std::string>();
    pair.source = p.at("source").get<std::string>() == "long_term_kg"
                      ? QASource::long_term_kg
                      : QASource::short_term_conv;
    pair.topic_name = p.at("topic").get<std::string>();
    r.qa.pairs.push_back(std::move(pair));
  }
  r.qa.n_target = static_cast<int>(r.qa.pairs.size());

  r.source_turn_count = j.at("source_turn_count").get<int>();
  r.accepted = j.at("accepted").get<bool>();
  r.used_fallback = j.at("used_fallback").get<bool>();
  return r;
}

// Builds the exportable record and enforces its invariants. Raises
// ComponentMissing when a speaker graph, persona, or the QA set is absent
// or inconsistent with the configured sizes.
inline DatasetRecord assemble_record(const std::string& pair_id, const TopicGroup& topic,
                                     const RefinementOutcome& outcome,
                                     const std::map<Speaker, KnowledgeGraph>& kgs,
                                     const std::map<Speaker, PersonaProfile>& personas,
                                     const QASet& qa, int source_turn_count) {
  for (Speaker s : {Speaker::speaker1, Speaker::speaker2}) {
    if (!kgs.count(s)) throw ComponentMissing(to_string(s) + " knowledge graph");
    if (!personas.count(s)) throw ComponentMissing(to_string(s) + " persona");
  }
  if (outcome.final.turns.empty()) throw ComponentMissing("conversation");
  if (!check_structure(outcome.final, outcome.final.turn_count))
    throw ComponentMissing("structurally valid conversation");
  if (qa.pairs.empty() || static_cast<int>(qa.pairs.size()) != qa.n_target)
    throw ComponentMissing("qa set");

  DatasetRecord r;
  r.pair_id = pair_id;
  r.topic_name = topic.name;
  r.topic_keywords = topic.keywords;
  r.topic_importance = topic.importance;
  r.conversation = outcome.final;
  r.validation = outcome.report;
  r.speaker_kgs = kgs;
  for (const auto& [speaker, profile] : personas) {
    r.personas[speaker] = profile;
    r.speaker_triples[speaker] = profile.triples;
  }
  r.qa = qa;
  r.source_turn_count = source_turn_count;
  r.accepted = outcome.accepted;
  r.used_fallback = outcome.used_fallback;
  return r;
}

inline std::string record_key(const std::string& pair_id, const std::string& topic_name) {
  return pair_id + "\x1f" + topic_name;
}

}  // namespace dialoggen

#endif  // DIALOGGEN_RECORD_HPP
