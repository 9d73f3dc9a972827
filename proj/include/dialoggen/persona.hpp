#ifndef DIALOGGEN_PERSONA_HPP
#define DIALOGGEN_PERSONA_HPP

#include <set>
#include <string>
#include <vector>

#include "dialoggen/knowledge.hpp"

// Persona inference: one structured profile per speaker per topic, derived
// from the speaker-specific triples.

namespace dialoggen {

struct PersonaProfile {
  Speaker speaker = Speaker::speaker1;
  TripleSet triples;  // carried verbatim from the topic's speaker subset
  std::vector<std::string> traits;
  std::vector<std::string> interests;
};

namespace detail {

// Trim, drop empties, case-insensitive dedup keeping first, cap at limit.
inline std::vector<std::string> tidy_string_list(const json& values, std::size_t limit) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  if (!values.is_array()) return out;
  for (const json& v : values) {
    if (!v.is_string()) continue;
    std::string s = strings::trim(v.get<std::string>());
    if (s.empty()) continue;
    if (!seen.insert(strings::to_lower(s)).second) continue;
    out.push_back(std::move(s));
    if (out.size() >= limit) break;
  }
  return out;
}

}  // namespace detail

// Infers personality traits and topic interests from the speaker's triples.
// An empty result earns one corrective re-ask; a profile without both a
// trait and an interest after that raises EmptyPersona (the caller skips the
// topic and continues).
inline PersonaProfile generate_persona(Speaker speaker, const TripleSet& triples,
                                       const TopicGroup& topic, LlmGateway& gateway,
                                       const DecodingParams& decoding = {}) {
  if (triples.empty()) throw Error("generate_persona requires nonempty speaker triples");

  constexpr std::size_t kMaxItems = 10;

  ChatRequest request;
  request.template_name = "persona_generation";
  request.bindings = {{"speaker", to_string(speaker)},
                      {"topic_name", topic.name},
                      {"keywords", strings::join(topic.keywords, ", ")},
                      {"triples", detail::triples_as_prompt_lines(triples.triples)},
                      {"note", ""}};
  request.decoding = decoding;
  request.expects_structured = true;

  PersonaProfile profile;
  profile.speaker = speaker;
  profile.triples = triples;

  for (int attempt = 0; attempt < 2; ++attempt) {
    ChatResponse response = gateway.complete(request);
    const json& body = *response.structured_payload;
    if (body.is_object()) {
      profile.traits = detail::tidy_string_list(body.value("traits", json::array()), kMaxItems);
      profile.interests =
          detail::tidy_string_list(body.value("interests", json::array()), kMaxItems);
    }
    if (!profile.traits.empty() && !profile.interests.empty()) return profile;
    request.bindings["note"] =
        "The previous reply was unusable. Provide at least one personality "
        "trait and one topical interest.";
  }
  throw EmptyPersona();
}

}  // namespace dialoggen

#endif  // DIALOGGEN_PERSONA_HPP
