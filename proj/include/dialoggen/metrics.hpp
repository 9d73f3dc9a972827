#ifndef DIALOGGEN_METRICS_HPP
#define DIALOGGEN_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "dialoggen/embedding.hpp"
#include "dialoggen/errors.hpp"
#include "dialoggen/log.hpp"
#include "dialoggen/stopwords.hpp"
#include "dialoggen/strings.hpp"

// Automatic evaluation suite: conversational flow (embedding-based
// precision/recall/F1 between consecutive turns), topic consistency
// (Self-BLEU, n-gram perplexity), content similarity (ROUGE-1/2/L),
// semantic understanding (semantic similarity, entity overlap), and
// readability (Flesch Reading Ease).

namespace dialoggen {

// Lowercased whitespace tokens with edge punctuation stripped.
using TokenSequence = std::vector<std::string>;

inline TokenSequence tokenize(const std::string& text) {
  TokenSequence out;
  for (auto& raw : strings::split_whitespace(strings::to_lower(text))) {
    std::size_t b = 0, e = raw.size();
    while (b < e && strings::is_punct(raw[b])) ++b;
    while (e > b && strings::is_punct(raw[e - 1])) --e;
    if (e > b) out.push_back(raw.substr(b, e - b));
  }
  return out;
}

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

namespace detail {

inline double harmonic(double p, double r) { return (p + r) > 0 ? 2 * p * r / (p + r) : 0.0; }

inline std::map<std::string, int> ngram_counts(const TokenSequence& tokens, int n) {
  std::map<std::string, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (int j = 0; j < n; ++j) {
      if (j > 0) key.push_back('\x1f');
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

inline std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), curr(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      curr[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], curr[j - 1]);
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

}  // namespace detail

// Clipped n-gram overlap. Precision over hypothesis n-grams, recall over
// reference n-grams; an empty n-gram set on either side yields zeros.
inline PrecisionRecallF1 rouge_n(const TokenSequence& reference, const TokenSequence& hypothesis,
                                 int n) {
  if (n != 1 && n != 2) throw Error("rouge_n supports n in {1, 2}");
  auto ref_counts = detail::ngram_counts(reference, n);
  auto hyp_counts = detail::ngram_counts(hypothesis, n);
  std::size_t ref_total = 0, hyp_total = 0;
  for (const auto& [k, v] : ref_counts) ref_total += v;
  for (const auto& [k, v] : hyp_counts) hyp_total += v;
  if (ref_total == 0 || hyp_total == 0) return {};

  std::size_t overlap = 0;
  for (const auto& [gram, count] : hyp_counts) {
    auto it = ref_counts.find(gram);
    if (it != ref_counts.end()) overlap += std::min(count, it->second);
  }
  PrecisionRecallF1 out;
  out.precision = static_cast<double>(overlap) / static_cast<double>(hyp_total);
  out.recall = static_cast<double>(overlap) / static_cast<double>(ref_total);
  out.f1 = detail::harmonic(out.precision, out.recall);
  return out;
}

// Longest-common-subsequence variant.
inline PrecisionRecallF1 rouge_l(const TokenSequence& reference, const TokenSequence& hypothesis) {
  if (reference.empty() || hypothesis.empty()) return {};
  const double lcs = static_cast<double>(detail::lcs_length(reference, hypothesis));
  PrecisionRecallF1 out;
  out.precision = lcs / static_cast<double>(hypothesis.size());
  out.recall = lcs / static_cast<double>(reference.size());
  out.f1 = detail::harmonic(out.precision, out.recall);
  return out;
}

namespace detail {

// BLEU up to 4-grams with add-one smoothed modified precisions
// p_n = (clipped matches + 1) / (candidate n-grams + 1) and a brevity
// penalty against the closest reference length (ties prefer the shorter).
inline double bleu_against(const TokenSequence& candidate,
                           const std::vector<const TokenSequence*>& references) {
  const auto c = static_cast<double>(candidate.size());
  if (candidate.empty()) return 0.0;

  double closest = 0.0;
  double best_gap = -1.0;
  for (const auto* ref : references) {
    const auto len = static_cast<double>(ref->size());
    const double gap = std::fabs(len - c);
    if (best_gap < 0 || gap < best_gap || (gap == best_gap && len < closest)) {
      best_gap = gap;
      closest = len;
    }
  }

  double log_sum = 0.0;
  for (int n = 1; n <= 4; ++n) {
    auto hyp_counts = ngram_counts(candidate, n);
    std::size_t hyp_total = 0;
    for (const auto& [k, v] : hyp_counts) hyp_total += v;

    std::map<std::string, int> max_ref_counts;
    for (const auto* ref : references)
      for (const auto& [gram, count] : ngram_counts(*ref, n))
        max_ref_counts[gram] = std::max(max_ref_counts[gram], count);

    std::size_t matched = 0;
    for (const auto& [gram, count] : hyp_counts) {
      auto it = max_ref_counts.find(gram);
      if (it != max_ref_counts.end()) matched += std::min(count, it->second);
    }
    log_sum += std::log((static_cast<double>(matched) + 1.0) /
                        (static_cast<double>(hyp_total) + 1.0));
  }

  const double brevity = c >= closest ? 1.0 : std::exp(1.0 - closest / c);
  return brevity * std::exp(log_sum / 4.0);
}

}  // namespace detail

// Average BLEU of each turn scored against all other turns as references.
// In the topic-guided setting higher values indicate topical cohesion.
inline double self_bleu(const std::vector<TokenSequence>& conversation) {
  if (conversation.size() < 2) throw TooFewTurns();
  double total = 0.0;
  for (std::size_t i = 0; i < conversation.size(); ++i) {
    std::vector<const TokenSequence*> references;
    for (std::size_t j = 0; j < conversation.size(); ++j)
      if (j != i) references.push_back(&conversation[j]);
    total += detail::bleu_against(conversation[i], references);
  }
  return total / static_cast<double>(conversation.size());
}

// Add-one smoothed n-gram language model. The vocabulary holds every corpus
// token plus the unknown symbol and the sequence-start padding symbol, so
//   P(w | ctx) = (count(ctx, w) + 1) / (count(ctx) + |V|)
// is a proper distribution over V for every context.
class NGramModel {
 public:
  static constexpr const char* kUnknown = "<unk>";
  static constexpr const char* kSequenceStart = "<s>";

  NGramModel(int order, const std::vector<TokenSequence>& corpus) : order_(order) {
    if (order < 1) throw Error("n-gram order must be >= 1");
    if (corpus.empty()) throw Error("n-gram training corpus must be nonempty");
    vocabulary_.insert(kUnknown);
    vocabulary_.insert(kSequenceStart);
    for (const auto& sequence : corpus)
      for (const auto& token : sequence) vocabulary_.insert(token);
    for (const auto& sequence : corpus) {
      for (std::size_t i = 0; i < sequence.size(); ++i) {
        const std::string ctx = context_key(sequence, i);
        ++counts_[ctx][sequence[i]];
        ++context_totals_[ctx];
      }
    }
  }

  int order() const { return order_; }
  std::size_t vocabulary_size() const { return vocabulary_.size(); }
  bool knows(const std::string& token) const { return vocabulary_.count(token) > 0; }

  double probability(const std::string& token, const std::vector<std::string>& context) const {
    const std::string mapped = knows(token) ? token : kUnknown;
    std::string ctx;
    for (const auto& t : context) {
      if (!ctx.empty()) ctx.push_back('\x1f');
      ctx += knows(t) ? t : kUnknown;
    }
    double numerator = 1.0;
    double denominator = static_cast<double>(vocabulary_.size());
    auto ctx_it = counts_.find(ctx);
    if (ctx_it != counts_.end()) {
      auto tok_it = ctx_it->second.find(mapped);
      if (tok_it != ctx_it->second.end()) numerator += tok_it->second;
      denominator += context_totals_.at(ctx);
    }
    return numerator / denominator;
  }

  // exp of the mean negative log probability over all tokens, each sequence
  // padded at the start with the sequence-start symbol.
  double perplexity(const std::vector<TokenSequence>& sequences) const {
    double nll = 0.0;
    std::size_t count = 0;
    for (const auto& sequence : sequences) {
      for (std::size_t i = 0; i < sequence.size(); ++i) {
        nll -= std::log(probability(sequence[i], context_of(sequence, i)));
        ++count;
      }
    }
    if (count == 0) throw EmptyText();
    return std::exp(nll / static_cast<double>(count));
  }

  std::vector<std::string> context_of(const TokenSequence& sequence, std::size_t position) const {
    std::vector<std::string> ctx;
    for (int j = order_ - 1; j >= 1; --j) {
      const auto idx = static_cast<long>(position) - j;
      ctx.push_back(idx < 0 ? kSequenceStart : sequence[idx]);
    }
    return ctx;
  }

 private:
  std::string context_key(const TokenSequence& sequence, std::size_t position) const {
    std::string key;
    for (int j = order_ - 1; j >= 1; --j) {
      const auto idx = static_cast<long>(position) - j;
      if (!key.empty()) key.push_back('\x1f');
      key += idx < 0 ? kSequenceStart : sequence[idx];
    }
    return key;
  }

  int order_;
  std::set<std::string> vocabulary_;
  std::unordered_map<std::string, std::unordered_map<std::string, int>> counts_;
  std::unordered_map<std::string, int> context_totals_;
};

inline NGramModel train_ngram(const std::vector<TokenSequence>& corpus, int order) {
  return NGramModel(order, corpus);
}

inline double perplexity(const NGramModel& model, const TokenSequence& text) {
  if (text.empty()) throw EmptyText();
  return model.perplexity({text});
}

// Jaccard similarity of content-token sets (tokens minus stopwords).
inline double entity_overlap(const TokenSequence& a, const TokenSequence& b,
                             const std::set<std::string>& stop = stopwords()) {
  std::set<std::string> ca, cb;
  for (const auto& t : a)
    if (!stop.count(t)) ca.insert(t);
  for (const auto& t : b)
    if (!stop.count(t)) cb.insert(t);
  if (ca.empty() && cb.empty()) return 1.0;
  if (ca.empty() || cb.empty()) return 0.0;
  std::size_t intersection = 0;
  for (const auto& t : ca)
    if (cb.count(t)) ++intersection;
  const std::size_t unions = ca.size() + cb.size() - intersection;
  return static_cast<double>(intersection) / static_cast<double>(unions);
}

namespace detail {

// Greedy best-match mean cosine of `from` tokens against `against` tokens.
// Negative best matches floor at zero to keep the score in [0, 1].
inline double greedy_match_score(const std::vector<std::vector<double>>& from,
                                 const std::vector<std::vector<double>>& against) {
  double total = 0.0;
  for (const auto& v : from) {
    double best = 0.0;
    for (const auto& w : against) {
      double dot = 0.0;
      for (std::size_t k = 0; k < v.size() && k < w.size(); ++k) dot += v[k] * w[k];
      best = std::max(best, dot);
    }
    total += std::min(1.0, best);
  }
  return total / static_cast<double>(from.size());
}

}  // namespace detail

// Embedding-based alignment between consecutive turns: for each adjacent
// pair the earlier turn is the reference and the later the hypothesis;
// precision matches hypothesis tokens to their best reference token and
// recall the reverse. Precision and recall average over pairs; F1 is the
// harmonic mean of those averages.
inline PrecisionRecallF1 flow_score(const std::vector<TokenSequence>& conversation,
                                    const EmbeddingProvider& embedder) {
  if (conversation.size() < 2) throw TooFewTurns();

  double precision_sum = 0.0, recall_sum = 0.0;
  const std::size_t pairs = conversation.size() - 1;
  for (std::size_t i = 0; i + 1 < conversation.size(); ++i) {
    const TokenSequence& ref = conversation[i];
    const TokenSequence& hyp = conversation[i + 1];
    if (ref.empty() && hyp.empty()) {
      precision_sum += 1.0;
      recall_sum += 1.0;
      continue;
    }
    if (ref.empty() || hyp.empty()) continue;  // contributes zeros
    const auto ref_vectors = embedder.embed(ref);
    const auto hyp_vectors = embedder.embed(hyp);
    precision_sum += detail::greedy_match_score(hyp_vectors, ref_vectors);
    recall_sum += detail::greedy_match_score(ref_vectors, hyp_vectors);
  }

  PrecisionRecallF1 out;
  out.precision = precision_sum / static_cast<double>(pairs);
  out.recall = recall_sum / static_cast<double>(pairs);
  out.f1 = detail::harmonic(out.precision, out.recall);
  return out;
}

// Cosine of the mean token vectors, negatives clipped to zero.
inline double semantic_similarity(const TokenSequence& a, const TokenSequence& b,
                                  const EmbeddingProvider& embedder) {
  if (a.empty() || b.empty()) throw EmptyText();
  auto mean_vector = [&](const TokenSequence& tokens) {
    const auto vectors = embedder.embed(tokens);
    std::vector<double> mean(embedder.dimension(), 0.0);
    for (const auto& v : vectors)
      for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += v[k];
    for (double& x : mean) x /= static_cast<double>(vectors.size());
    return mean;
  };
  const auto ma = mean_vector(a);
  const auto mb = mean_vector(b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < ma.size(); ++k) {
    dot += ma[k] * mb[k];
    na += ma[k] * ma[k];
    nb += mb[k] * mb[k];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

namespace detail {

// Vowel-group syllable count with a final silent-e rule, minimum one.
inline int syllable_count(const std::string& word) {
  std::string letters;
  for (char c : word)
    if (std::isalpha(static_cast<unsigned char>(c))) letters.push_back(strings::lower(c));
  if (letters.empty()) return 1;

  auto is_vowel = [](char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
  };
  int groups = 0;
  bool in_group = false;
  for (char c : letters) {
    if (is_vowel(c)) {
      if (!in_group) ++groups;
      in_group = true;
    } else {
      in_group = false;
    }
  }
  if (groups > 1 && letters.back() == 'e') --groups;
  return std::max(groups, 1);
}

}  // namespace detail

// Flesch Reading Ease:
//   206.835 - 1.015 * (words / sentences) - 84.6 * (syllables / words)
// Sentences split on [.!?]; a segment counts when it contains a word.
inline double flesch(const std::string& text) {
  std::vector<std::string> segments;
  std::string current;
  for (char c : text) {
    if (c == '.' || c == '!' || c == '?') {
      segments.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  segments.push_back(current);

  int sentences = 0;
  for (const auto& segment : segments)
    if (!strings::split_whitespace(segment).empty()) ++sentences;

  const auto words = strings::split_whitespace(text);
  if (sentences == 0 || words.empty()) throw EmptyText();

  int syllables = 0;
  for (const auto& w : words) syllables += detail::syllable_count(w);

  return 206.835 -
         1.015 * (static_cast<double>(words.size()) / static_cast<double>(sentences)) -
         84.6 * (static_cast<double>(syllables) / static_cast<double>(words.size()));
}

// ---- dataset-level evaluation ----

// A conversation as the evaluator sees it; the pipeline adapts dataset
// records into this shape.
struct EvalConversation {
  std::string pair_id;
  std::string topic;
  std::vector<std::string> turn_texts;
};

struct MetricReport {
  PrecisionRecallF1 flow;
  double self_bleu = 0.0;
  double perplexity = 1.0;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
  double semantic_similarity = 0.0;
  double entity_overlap = 0.0;
  double flesch = 0.0;
};

struct ConversationMetrics {
  std::string pair_id;
  std::string topic;
  bool has_pair_metrics = false;
  MetricReport values;
};

struct EvaluationResult {
  MetricReport report;
  std::vector<ConversationMetrics> per_conversation;
};

// Two-stage averaging: consecutive-turn metrics average over adjacent pairs
// within each conversation first, then across conversations. The perplexity
// model (order 2, add-one) is trained on the corpus being evaluated, one
// training sequence per turn. Conversations too short for a metric are
// skipped for that metric with a logged notice.
inline EvaluationResult evaluate_dataset(const std::vector<EvalConversation>& conversations,
                                         const EmbeddingProvider& embedder) {
  if (conversations.empty()) throw Error("evaluate_dataset requires at least one conversation");

  std::vector<TokenSequence> training;
  for (const auto& conv : conversations)
    for (const auto& text : conv.turn_texts) training.push_back(tokenize(text));
  NGramModel model(2, training);

  EvaluationResult result;
  struct Accumulator {
    double sum = 0.0;
    int n = 0;
    void add(double v) { sum += v; ++n; }
    double mean() const { return n > 0 ? sum / n : 0.0; }
  };
  Accumulator flow_p, flow_r, flow_f1, bleu, ppl, r1, r2, rl, sem, entity, read;

  for (const auto& conv : conversations) {
    ConversationMetrics cm;
    cm.pair_id = conv.pair_id;
    cm.topic = conv.topic;

    std::vector<TokenSequence> turns;
    for (const auto& text : conv.turn_texts) turns.push_back(tokenize(text));

    std::size_t token_total = 0;
    for (const auto& t : turns) token_total += t.size();
    if (token_total > 0) {
      cm.values.perplexity = model.perplexity(turns);
      ppl.add(cm.values.perplexity);
    }

    const std::string joined = strings::join(conv.turn_texts, " ");
    try {
      cm.values.flesch = flesch(joined);
      read.add(cm.values.flesch);
    } catch (const EmptyText&) {
      log::warn("conversation for pair " + conv.pair_id + " has no scoreable text; skipping flesch");
    }

    if (turns.size() < 2) {
      log::warn("conversation for pair " + conv.pair_id +
                " has fewer than two turns; skipping consecutive-turn metrics");
      result.per_conversation.push_back(std::move(cm));
      continue;
    }
    cm.has_pair_metrics = true;

    cm.values.flow = flow_score(turns, embedder);
    flow_p.add(cm.values.flow.precision);
    flow_r.add(cm.values.flow.recall);
    flow_f1.add(cm.values.flow.f1);

    cm.values.self_bleu = self_bleu(turns);
    bleu.add(cm.values.self_bleu);

    Accumulator c_r1, c_r2, c_rl, c_sem, c_entity;
    for (std::size_t i = 0; i + 1 < turns.size(); ++i) {
      const TokenSequence& ref = turns[i];
      const TokenSequence& hyp = turns[i + 1];
      c_r1.add(rouge_n(ref, hyp, 1).f1);
      c_r2.add(rouge_n(ref, hyp, 2).f1);
      c_rl.add(rouge_l(ref, hyp).f1);
      c_entity.add(entity_overlap(ref, hyp));
      if (!ref.empty() && !hyp.empty())
        c_sem.add(semantic_similarity(ref, hyp, embedder));
      else
        c_sem.add(0.0);
    }
    cm.values.rouge1 = c_r1.mean();
    cm.values.rouge2 = c_r2.mean();
    cm.values.rougeL = c_rl.mean();
    cm.values.semantic_similarity = c_sem.mean();
    cm.values.entity_overlap = c_entity.mean();
    r1.add(cm.values.rouge1);
    r2.add(cm.values.rouge2);
    rl.add(cm.values.rougeL);
    sem.add(cm.values.semantic_similarity);
    entity.add(cm.values.entity_overlap);

    result.per_conversation.push_back(std::move(cm));
  }

  result.report.flow = {flow_p.mean(), flow_r.mean(), flow_f1.mean()};
  result.report.self_bleu = bleu.mean();
  result.report.perplexity = ppl.n > 0 ? ppl.mean() : 1.0;
  result.report.rouge1 = r1.mean();
  result.report.rouge2 = r2.mean();
  result.report.rougeL = rl.mean();
  result.report.semantic_similarity = sem.mean();
  result.report.entity_overlap = entity.mean();
  result.report.flesch = read.mean();
  return result;
}

}  // namespace dialoggen

#endif  // DIALOGGEN_METRICS_HPP
