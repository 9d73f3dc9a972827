#ifndef DIALOGGEN_KNOWLEDGE_HPP
#define DIALOGGEN_KNOWLEDGE_HPP

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "dialoggen/gateway.hpp"
#include "dialoggen/ingest.hpp"

// Knowledge extraction over the full conversation: subject-relation-object
// triples with confidence and source-turn provenance, topic grouping with
// importance ranking, and directed multigraph construction.

namespace dialoggen {

struct KnowledgeTriple {
  std::string subject;
  std::string relation;
  std::string object;
  double confidence = 0.0;   // in [0, 1]
  int source_turn = 0;       // 1-based index into the cleaned turns
  Speaker speaker = Speaker::speaker1;

  // Normalized identity used for de-duplication and membership lookups.
  std::string normalized_key() const {
    return strings::normalized(subject) + "\x1f" + strings::normalized(relation) +
           "\x1f" + strings::normalized(object);
  }
  std::string normalized_key_with_speaker() const {
    return normalized_key() + "\x1f" + to_string(speaker);
  }
};

struct TripleSet {
  std::vector<KnowledgeTriple> triples;

  bool empty() const { return triples.empty(); }
  std::size_t size() const { return triples.size(); }
};

struct TopicGroup {
  std::string name;
  std::vector<std::string> keywords;
  double importance = 0.0;  // alpha, in [0, 1]
  std::vector<KnowledgeTriple> triples;  // assignment across both speakers
  std::map<Speaker, TripleSet> speaker_triples;
  std::set<Speaker> involved_speakers;
};

struct TopicSet {
  std::vector<TopicGroup> topics;
};

// Directed multigraph over triple subjects/objects; parallel edges with
// distinct relation labels between the same node pair are kept.
struct KnowledgeGraph {
  struct Edge {
    std::string src;
    std::string dst;
    std::string relation;
    Speaker speaker;
    double confidence;
  };
  std::vector<std::string> nodes;  // first-occurrence order
  std::vector<Edge> edges;
};

namespace detail {

inline std::string turns_as_prompt_lines(const std::vector<Turn>& turns) {
  std::string out;
  for (const auto& t : turns) {
    out += std::to_string(t.index) + ". " + to_string(t.speaker) + ": " + t.text + "\n";
  }
  if (!out.empty()) out.pop_back();
  return out;
}

inline std::string triples_as_prompt_lines(const std::vector<KnowledgeTriple>& triples) {
  std::string out;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const auto& t = triples[i];
    out += std::to_string(i + 1) + ". (" + t.subject + ", " + t.relation + ", " +
           t.object + ") [" + to_string(t.speaker) + "]\n";
  }
  if (!out.empty()) out.pop_back();
  return out;
}

}  // namespace detail

// One conversation-level LLM call; each returned entry must carry subject,
// relation, object, a confidence in [0,1] and an in-range source turn.
// Malformed entries are discarded. Speaker attribution is inherited from the
// source turn. An empty extraction is a valid empty TripleSet.
inline TripleSet extract_triples(const std::vector<Turn>& turns, LlmGateway& gateway,
                                 const DecodingParams& decoding = {}) {
  if (turns.empty()) throw Error("extract_triples requires a nonempty turn list");

  ChatRequest request;
  request.template_name = "triple_extraction";
  request.bindings = {{"conversation", detail::turns_as_prompt_lines(turns)}};
  request.decoding = decoding;
  request.expects_structured = true;

  ChatResponse response = gateway.complete(request);
  const json& body = *response.structured_payload;

  TripleSet out;
  if (!body.is_object() || !body.contains("triples") || !body["triples"].is_array()) {
    log::warn("triple extraction payload missing 'triples' array; treating as empty");
    return out;
  }
  for (const json& entry : body["triples"]) {
    if (!entry.is_object()) continue;
    auto field = [&](const char* key) -> std::string {
      return entry.contains(key) && entry[key].is_string()
                 ? strings::trim(entry[key].get<std::string>())
                 : std::string();
    };
    KnowledgeTriple t;
    t.subject = field("subject");
    t.relation = field("relation");
    t.object = field("object");
    if (t.subject.empty() || t.relation.empty() || t.object.empty()) continue;
    if (!entry.contains("confidence") || !entry["confidence"].is_number()) continue;
    t.confidence = entry["confidence"].get<double>();
    if (t.confidence < 0.0 || t.confidence > 1.0) continue;
    if (!entry.contains("source_turn") || !entry["source_turn"].is_number_integer()) continue;
    t.source_turn = entry["source_turn"].get<int>();
    if (t.source_turn < 1 || t.source_turn > static_cast<int>(turns.size())) continue;
    t.speaker = turns[t.source_turn - 1].speaker;
    out.triples.push_back(std::move(t));
  }
  return out;
}

// Confidence filter plus de-duplication under normalized (s, r, o, speaker).
// Each surviving key sits at its first-occurrence position and carries the
// highest-confidence instance seen for that key.
inline TripleSet filter_triples(const TripleSet& ts, double min_confidence) {
  if (min_confidence < 0.0 || min_confidence > 1.0)
    throw Error("min_confidence must be in [0, 1]");

  TripleSet out;
  std::unordered_map<std::string, std::size_t> position;
  for (const auto& t : ts.triples) {
    if (t.confidence < min_confidence) continue;
    std::string key = t.normalized_key_with_speaker();
    auto it = position.find(key);
    if (it == position.end()) {
      position.emplace(std::move(key), out.triples.size());
      out.triples.push_back(t);
    } else if (t.confidence > out.triples[it->second].confidence) {
      out.triples[it->second] = t;
    }
  }
  return out;
}

inline std::map<Speaker, TripleSet> partition_speaker_triples(const TopicGroup& topic);

// Groups triples into named topics with keywords and an importance score.
// Assignments are validated against the input set by normalized-triple
// lookup; hallucinated triples are dropped and out-of-range importance
// scores are clamped with a warning. A triple may appear in several topics.
inline TopicSet extract_topics(const TripleSet& ts, LlmGateway& gateway,
                               const DecodingParams& decoding = {}) {
  if (ts.empty()) throw Error("extract_topics requires a nonempty triple set");

  ChatRequest request;
  request.template_name = "topic_extraction";
  request.bindings = {{"triples", detail::triples_as_prompt_lines(ts.triples)}};
  request.decoding = decoding;
  request.expects_structured = true;

  ChatResponse response = gateway.complete(request);
  const json& body = *response.structured_payload;

  std::unordered_map<std::string, std::vector<std::size_t>> lookup;
  for (std::size_t i = 0; i < ts.triples.size(); ++i)
    lookup[ts.triples[i].normalized_key()].push_back(i);

  TopicSet out;
  if (!body.is_object() || !body.contains("topics") || !body["topics"].is_array())
    throw NoTopicsFound();

  for (const json& entry : body["topics"]) {
    if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string())
      continue;
    TopicGroup group;
    group.name = strings::trim(entry["name"].get<std::string>());
    if (group.name.empty()) continue;
    if (entry.contains("keywords") && entry["keywords"].is_array())
      for (const json& k : entry["keywords"])
        if (k.is_string()) group.keywords.push_back(k.get<std::string>());
    if (!entry.contains("importance") || !entry["importance"].is_number()) continue;
    group.importance = entry["importance"].get<double>();
    if (group.importance < 0.0 || group.importance > 1.0) {
      log::warn("topic '" + group.name + "' importance " +
                std::to_string(group.importance) + " outside [0,1]; clamping");
      group.importance = std::clamp(group.importance, 0.0, 1.0);
    }
    if (!entry.contains("triples") || !entry["triples"].is_array()) continue;

    std::set<std::size_t> assigned;
    for (const json& t : entry["triples"]) {
      if (!t.is_object()) continue;
      auto field = [&](const char* key) -> std::string {
        return t.contains(key) && t[key].is_string() ? t[key].get<std::string>()
                                                     : std::string();
      };
      KnowledgeTriple probe;
      probe.subject = field("subject");
      probe.relation = field("relation");
      probe.object = field("object");
      auto it = lookup.find(probe.normalized_key());
      if (it == lookup.end()) {
        log::warn("topic '" + group.name + "' references a triple not in the input; dropped");
        continue;
      }
      for (std::size_t idx : it->second) assigned.insert(idx);
    }
    for (std::size_t idx : assigned) group.triples.push_back(ts.triples[idx]);

    for (auto& [speaker, subset] : partition_speaker_triples(group))
      group.speaker_triples[speaker] = std::move(subset);
    for (const auto& [speaker, subset] : group.speaker_triples)
      if (!subset.empty()) group.involved_speakers.insert(speaker);

    out.topics.push_back(std::move(group));
  }
  if (out.topics.empty()) throw NoTopicsFound();
  return out;
}

// Exact partition of a topic's triples by the triple's speaker field.
inline std::map<Speaker, TripleSet> partition_speaker_triples(const TopicGroup& topic) {
  std::map<Speaker, TripleSet> out;
  out[Speaker::speaker1];
  out[Speaker::speaker2];
  for (const auto& t : topic.triples) out[t.speaker].triples.push_back(t);
  return out;
}

// Drops topics that do not involve both speakers, sorts by importance
// descending with ties broken by name ascending, and keeps the first N.
inline TopicSet retain_and_rank(const TopicSet& topics, int top_n) {
  if (top_n < 1) throw Error("retain_and_rank requires N >= 1");

  TopicSet out;
  for (const auto& t : topics.topics)
    if (t.involved_speakers.count(Speaker::speaker1) &&
        t.involved_speakers.count(Speaker::speaker2))
      out.topics.push_back(t);

  std::stable_sort(out.topics.begin(), out.topics.end(),
                   [](const TopicGroup& a, const TopicGroup& b) {
                     if (a.importance != b.importance) return a.importance > b.importance;
                     return a.name < b.name;
                   });
  if (static_cast<int>(out.topics.size()) > top_n) out.topics.resize(top_n);
  return out;
}

// Directed multigraph over one triple collection: a node per distinct
// subject/object, one labeled edge per triple, parallel edges kept.
inline KnowledgeGraph build_graph(const std::vector<KnowledgeTriple>& triples) {
  KnowledgeGraph g;
  std::set<std::string> seen;
  auto add_node = [&](const std::string& name) {
    if (seen.insert(name).second) g.nodes.push_back(name);
  };
  for (const auto& t : triples) {
    add_node(t.subject);
    add_node(t.object);
    g.edges.push_back({t.subject, t.object, t.relation, t.speaker, t.confidence});
  }
  return g;
}

inline KnowledgeGraph build_graph(const TripleSet& ts) { return build_graph(ts.triples); }

// Combined topic graph over both speakers' triples.
inline KnowledgeGraph build_graph(const TopicGroup& topic) {
  return build_graph(topic.triples);
}

}  // namespace dialoggen

#endif  // DIALOGGEN_KNOWLEDGE_HPP
