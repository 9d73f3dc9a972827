#ifndef DIALOGGEN_QA_HPP
#define DIALOGGEN_QA_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dialoggen/dialogue.hpp"
#include "dialoggen/stopwords.hpp"

// Memory-grounded QA: pair generation from knowledge graphs (long-term) and
// the simulated conversation (short-term), persona-pair-level splits, and
// token-overlap scoring of predictions.

namespace dialoggen {

enum class QASource { long_term_kg, short_term_conv };

inline std::string to_string(QASource s) {
  return s == QASource::long_term_kg ? "long_term_kg" : "short_term_conv";
}

struct QAPair {
  std::string question;  // asked by speaker1
  std::string answer;    // answered by speaker2
  QASource source = QASource::long_term_kg;
  std::string topic_name;
};

struct QASet {
  std::vector<QAPair> pairs;
  int n_target = 0;
};

struct SplitRatios {
  double train = 0.85;
  double validation = 0.05;
  double test = 0.10;
};

struct SplitAssignment {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

struct QAScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double exact_match = 0.0;
};

// Lowercase, strip punctuation characters, drop the articles a/an/the,
// collapse whitespace. Shared by answer scoring and question dedup.
inline std::string normalize_answer(const std::string& text) {
  std::string lowered;
  lowered.reserve(text.size());
  for (char c : strings::to_lower(text))
    if (!strings::is_punct(c)) lowered.push_back(c);

  std::vector<std::string> kept;
  for (auto& token : strings::split_whitespace(lowered))
    if (token != "a" && token != "an" && token != "the") kept.push_back(std::move(token));
  return strings::join(kept, " ");
}

namespace detail {

inline std::vector<std::string> content_tokens(const std::string& text) {
  std::vector<std::string> out;
  for (auto& token : strings::split_whitespace(strings::to_lower(text))) {
    // strip edge punctuation so "Colorado." grounds against "colorado"
    std::size_t b = 0, e = token.size();
    while (b < e && strings::is_punct(token[b])) ++b;
    while (e > b && strings::is_punct(token[e - 1])) --e;
    std::string t = token.substr(b, e - b);
    if (!t.empty() && !is_stopword(t)) out.push_back(std::move(t));
  }
  return out;
}

inline bool shares_content_token(const std::string& answer, const std::string& source_text) {
  std::set<std::string> source_set;
  for (auto& t : content_tokens(source_text)) source_set.insert(std::move(t));
  for (const auto& t : content_tokens(answer))
    if (source_set.count(t)) return true;
  return false;
}

// Uniform draw in [0, n) from the raw engine; avoids distribution classes so
// the permutation is identical on every platform.
inline std::uint64_t bounded_draw(std::mt19937_64& engine, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine();
  } while (x >= limit);
  return x % n;
}

}  // namespace detail

// Requests candidate pairs one at a time until n_target pass the checks:
// formatting (both fields present and nonempty, known source tag),
// duplication (normalized question unseen), and grounding (the answer shares
// at least one content token with its cited source). At most 3 x n_target
// candidates are drawn before QATargetUnreachable.
inline QASet generate_qa(const TripleSet& k1, const TripleSet& k2, const Conversation& conv,
                         int n_target, LlmGateway& gateway,
                         const DecodingParams& decoding = {}) {
  if (n_target < 1) throw Error("generate_qa requires n_target >= 1");

  std::string kg_text;
  for (const auto* ts : {&k1, &k2})
    for (const auto& t : ts->triples)
      kg_text += t.subject + " " + t.relation + " " + t.object + "\n";
  std::string conv_text;
  for (const auto& t : conv.turns) conv_text += t.text + "\n";

  QASet out;
  out.n_target = n_target;
  std::set<std::string> seen_questions;

  const int max_attempts = 3 * n_target;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::string accepted;
    for (const auto& p : out.pairs) accepted += "- " + p.question + "\n";

    ChatRequest request;
    request.template_name = "qa_generation";
    request.bindings = {
        {"topic_name", conv.topic_name},
        {"long_term", kg_text.empty() ? "(none)" : kg_text},
        {"short_term", conv_text},
        {"accepted_questions", accepted.empty() ? "(none yet)" : accepted},
    };
    request.decoding = decoding;
    request.expects_structured = true;

    json body;
    try {
      body = *gateway.complete(request).structured_payload;
    } catch (const StructuredParseFailure&) {
      continue;  // an unusable candidate, not a fatal failure
    }

    if (!body.is_object()) continue;
    auto field = [&](const char* key) -> std::string {
      return body.contains(key) && body[key].is_string()
                 ? strings::trim(body[key].get<std::string>())
                 : std::string();
    };
    QAPair pair;
    pair.question = field("question");
    pair.answer = field("answer");
    pair.topic_name = conv.topic_name;
    const std::string source = field("source");
    if (pair.question.empty() || pair.answer.empty()) continue;  // formatting
    if (source == "long_term_kg")
      pair.source = QASource::long_term_kg;
    else if (source == "short_term_conv")
      pair.source = QASource::short_term_conv;
    else
      continue;  // unknown provenance tag

    if (!seen_questions.insert(normalize_answer(pair.question)).second) continue;
    const std::string& cited = pair.source == QASource::long_term_kg ? kg_text : conv_text;
    if (!detail::shares_content_token(pair.answer, cited)) {
      seen_questions.erase(normalize_answer(pair.question));
      continue;  // fails the lexical grounding floor
    }

    out.pairs.push_back(std::move(pair));
    if (static_cast<int>(out.pairs.size()) == n_target) return out;
  }
  throw QATargetUnreachable(static_cast<int>(out.pairs.size()));
}

// Seeded Fisher-Yates permutation, then floor-remainder slicing:
// validation = floor(r_val * n), test = floor(r_test * n), train = rest.
inline SplitAssignment split_pairs(const std::vector<std::string>& pair_ids,
                                   const SplitRatios& ratios, std::uint64_t seed) {
  if (pair_ids.size() < 3) throw Error("split_pairs requires at least 3 pair ids");
  const double sum = ratios.train + ratios.validation + ratios.test;
  if (sum < 1.0 - 1e-9 || sum > 1.0 + 1e-9) throw Error("split ratios must sum to 1");

  std::vector<std::string> shuffled = pair_ids;
  std::mt19937_64 engine(seed);
  for (std::size_t i = shuffled.size() - 1; i > 0; --i)
    std::swap(shuffled[i], shuffled[detail::bounded_draw(engine, i + 1)]);

  const auto n = shuffled.size();
  const auto n_val = static_cast<std::size_t>(std::floor(ratios.validation * static_cast<double>(n)));
  const auto n_test = static_cast<std::size_t>(std::floor(ratios.test * static_cast<double>(n)));
  const auto n_train = n - n_val - n_test;

  SplitAssignment out;
  out.train.assign(shuffled.begin(), shuffled.begin() + n_train);
  out.validation.assign(shuffled.begin() + n_train, shuffled.begin() + n_train + n_val);
  out.test.assign(shuffled.begin() + n_train + n_val, shuffled.end());
  return out;
}

// Token-bag precision/recall/F1 plus exact match over normalized strings,
// averaged over items. Empty-vs-empty scores ones; empty-vs-nonempty zeros.
inline QAScore score_qa(const std::vector<std::string>& predictions,
                        const std::vector<std::string>& golds) {
  if (predictions.size() != golds.size() || predictions.empty()) throw LengthMismatch();

  QAScore total;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const std::string pred = normalize_answer(predictions[i]);
    const std::string gold = normalize_answer(golds[i]);
    const auto pred_tokens = strings::split_whitespace(pred);
    const auto gold_tokens = strings::split_whitespace(gold);

    double p = 0, r = 0, f1 = 0, em = 0;
    if (pred_tokens.empty() && gold_tokens.empty()) {
      p = r = f1 = em = 1.0;
    } else if (!pred_tokens.empty() && !gold_tokens.empty()) {
      std::map<std::string, int> gold_counts;
      for (const auto& t : gold_tokens) ++gold_counts[t];
      int overlap = 0;
      for (const auto& t : pred_tokens) {
        auto it = gold_counts.find(t);
        if (it != gold_counts.end() && it->second > 0) {
          --it->second;
          ++overlap;
        }
      }
      p = static_cast<double>(overlap) / static_cast<double>(pred_tokens.size());
      r = static_cast<double>(overlap) / static_cast<double>(gold_tokens.size());
      f1 = (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
      em = pred == gold ? 1.0 : 0.0;
    }
    // empty-vs-nonempty stays all zeros
    total.precision += p;
    total.recall += r;
    total.f1 += f1;
    total.exact_match += em;
  }
  const auto n = static_cast<double>(predictions.size());
  return {total.precision / n, total.recall / n, total.f1 / n, total.exact_match / n};
}

}  // namespace dialoggen

#endif  // DIALOGGEN_QA_HPP
