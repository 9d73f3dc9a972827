#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <random>

#include "dialoggen/metrics.hpp"

using namespace dialoggen;

// ---------------------------------------------------------------------------
// Independent oracles. These recompute the metric definitions from scratch
// (multiset intersection, memoized LCS recursion, direct cosine matrices) and
// stay decoupled from the implementations they check.
// ---------------------------------------------------------------------------

namespace oracle {

std::vector<std::vector<std::string>> ngrams_of(const TokenSequence& t, int n) {
  std::vector<std::vector<std::string>> out;
  for (int i = 0; i + n <= static_cast<int>(t.size()); ++i)
    out.emplace_back(t.begin() + i, t.begin() + i + n);
  return out;
}

// Multiset intersection via sorted two-pointer sweep.
std::size_t multiset_overlap(std::vector<std::vector<std::string>> a,
                             std::vector<std::vector<std::string>> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0, overlap = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++overlap;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return overlap;
}

PrecisionRecallF1 rouge_n(const TokenSequence& ref, const TokenSequence& hyp, int n) {
  auto ref_grams = ngrams_of(ref, n);
  auto hyp_grams = ngrams_of(hyp, n);
  if (ref_grams.empty() || hyp_grams.empty()) return {};
  const double overlap = static_cast<double>(multiset_overlap(ref_grams, hyp_grams));
  PrecisionRecallF1 out;
  out.precision = overlap / static_cast<double>(hyp_grams.size());
  out.recall = overlap / static_cast<double>(ref_grams.size());
  out.f1 = (out.precision + out.recall) > 0
               ? 2 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

// Memoized recursion, a different formulation than the iterative DP.
std::size_t lcs(const TokenSequence& a, const TokenSequence& b, std::size_t i, std::size_t j,
                std::map<std::pair<std::size_t, std::size_t>, std::size_t>& memo) {
  if (i == a.size() || j == b.size()) return 0;
  auto key = std::make_pair(i, j);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  std::size_t best;
  if (a[i] == b[j])
    best = 1 + lcs(a, b, i + 1, j + 1, memo);
  else
    best = std::max(lcs(a, b, i + 1, j, memo), lcs(a, b, i, j + 1, memo));
  memo[key] = best;
  return best;
}

std::size_t lcs(const TokenSequence& a, const TokenSequence& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  return lcs(a, b, 0, 0, memo);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Greedy-max matching on the full pairwise cosine matrix.
PrecisionRecallF1 flow_pair(const TokenSequence& ref, const TokenSequence& hyp,
                            const EmbeddingProvider& embedder) {
  auto ref_vecs = embedder.embed(ref);
  auto hyp_vecs = embedder.embed(hyp);
  std::vector<std::vector<double>> sim(hyp_vecs.size(),
                                       std::vector<double>(ref_vecs.size(), 0.0));
  for (std::size_t i = 0; i < hyp_vecs.size(); ++i)
    for (std::size_t j = 0; j < ref_vecs.size(); ++j)
      sim[i][j] = cosine(hyp_vecs[i], ref_vecs[j]);

  double p = 0;
  for (std::size_t i = 0; i < hyp_vecs.size(); ++i) {
    double best = 0;
    for (std::size_t j = 0; j < ref_vecs.size(); ++j) best = std::max(best, sim[i][j]);
    p += std::min(1.0, best);
  }
  p /= static_cast<double>(hyp_vecs.size());

  double r = 0;
  for (std::size_t j = 0; j < ref_vecs.size(); ++j) {
    double best = 0;
    for (std::size_t i = 0; i < hyp_vecs.size(); ++i) best = std::max(best, sim[i][j]);
    r += std::min(1.0, best);
  }
  r /= static_cast<double>(ref_vecs.size());

  PrecisionRecallF1 out;
  out.precision = p;
  out.recall = r;
  out.f1 = (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
  return out;
}

}  // namespace oracle

namespace {

TokenSequence toks(std::initializer_list<const char*> words) {
  TokenSequence out;
  for (const char* w : words) out.emplace_back(w);
  return out;
}

// Embedder with hand-chosen orthogonal axes, for the zero-similarity cases.
class AxisEmbedder final : public EmbeddingProvider {
 public:
  std::size_t dimension() const override { return 8; }
  std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) const override {
    std::vector<std::vector<double>> out;
    for (const auto& t : tokens) {
      std::vector<double> v(8, 0.0);
      v[std::hash<std::string>{}(t) % 4 + (t[0] < 'n' ? 0 : 4)] = 0;  // overwritten below
      v.assign(8, 0.0);
      v[axis_.count(t) ? axis_.at(t) : 0] = 1.0;
      out.push_back(v);
    }
    return out;
  }
  std::map<std::string, int> axis_;
};

}  // namespace

TEST_CASE("tokenize lowers, splits, and strips edge punctuation") {
  CHECK(tokenize("The cat, sat.") == toks({"the", "cat", "sat"}));
  CHECK(tokenize("").empty());
  CHECK(tokenize("a--b") == toks({"a--b"}));  // internal punctuation kept
  CHECK(tokenize("  Hello!!  WORLD??  ") == toks({"hello", "world"}));
  CHECK(tokenize("... !!!").empty());
}

TEST_CASE("rouge_1 on the cat-sat fixture") {
  auto r = rouge_n(toks({"the", "cat", "sat"}), toks({"the", "cat"}), 1);
  CHECK(r.precision == Catch::Approx(1.0).margin(1e-9));
  CHECK(r.recall == Catch::Approx(2.0 / 3.0).margin(1e-9));
  CHECK(r.f1 == Catch::Approx(0.8).margin(1e-9));
}

TEST_CASE("rouge_n on identical and disjoint sequences") {
  auto same = rouge_n(toks({"a", "b", "c"}), toks({"a", "b", "c"}), 2);
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.f1 == 1.0);
  auto none = rouge_n(toks({"a", "b"}), toks({"c", "d"}), 1);
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);
}

TEST_CASE("rouge_n yields zeros when an n-gram set is empty") {
  CHECK(rouge_n(toks({"a"}), toks({"a", "b"}), 2).f1 == 0.0);  // ref has no bigrams
  CHECK(rouge_n({}, toks({"a"}), 1).f1 == 0.0);
}

TEST_CASE("rouge_l on the a-c-d fixture") {
  auto r = rouge_l(toks({"a", "b", "c", "d"}), toks({"a", "c", "d"}));
  CHECK(r.precision == Catch::Approx(1.0).margin(1e-9));
  CHECK(r.recall == Catch::Approx(0.75).margin(1e-9));
  CHECK(r.f1 == Catch::Approx(6.0 / 7.0).margin(1e-9));
}

TEST_CASE("rouge_l identity and empty cases") {
  auto same = rouge_l(toks({"x", "y"}), toks({"x", "y"}));
  CHECK(same.f1 == 1.0);
  CHECK(rouge_l({}, toks({"x"})).f1 == 0.0);
  CHECK(rouge_l(toks({"x"}), {}).f1 == 0.0);
}

TEST_CASE("exhaustive: rouge and LCS match the oracles on short sequences") {
  // all sequences of length <= 4 over {a, b, c}; the acceptance suite runs
  // the full length-6 sweep
  std::vector<TokenSequence> all;
  const std::vector<std::string> alphabet = {"a", "b", "c"};
  all.push_back({});
  std::size_t begin = 0;
  for (int len = 1; len <= 4; ++len) {
    std::size_t end = all.size();
    for (std::size_t i = begin; i < end; ++i)
      for (const auto& s : alphabet) {
        TokenSequence next = all[i];
        next.push_back(s);
        all.push_back(next);
      }
    begin = end;
  }

  for (const auto& ref : all) {
    for (const auto& hyp : all) {
      for (int n : {1, 2}) {
        auto got = rouge_n(ref, hyp, n);
        auto want = oracle::rouge_n(ref, hyp, n);
        REQUIRE(got.precision == Catch::Approx(want.precision).margin(1e-12));
        REQUIRE(got.recall == Catch::Approx(want.recall).margin(1e-12));
        REQUIRE(got.f1 == Catch::Approx(want.f1).margin(1e-12));
      }
      REQUIRE(detail::lcs_length(ref, hyp) == oracle::lcs(ref, hyp));
    }
  }
}

TEST_CASE("self_bleu of identical turns is one") {
  for (int k = 2; k <= 6; ++k) {
    std::vector<TokenSequence> turns(k, toks({"we", "hike", "every", "weekend"}));
    CHECK(self_bleu(turns) == Catch::Approx(1.0).margin(1e-12));
  }
  // also for turns shorter than the maximum BLEU order
  std::vector<TokenSequence> short_turns(3, toks({"hi"}));
  CHECK(self_bleu(short_turns) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("self_bleu hits the add-one smoothing floor on disjoint turns") {
  // two 4-token turns sharing nothing: for each order n the modified
  // precision is 1/(h_n + 1) with h_n = 5 - n, so BLEU = (1/120)^(1/4)
  std::vector<TokenSequence> turns = {toks({"aa", "bb", "cc", "dd"}),
                                      toks({"ee", "ff", "gg", "hh"})};
  const double expected = std::pow(1.0 / (5.0 * 4.0 * 3.0 * 2.0), 0.25);
  CHECK(self_bleu(turns) == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("self_bleu applies the brevity penalty") {
  // candidate shorter than its only reference: BP = exp(1 - r/c)
  std::vector<TokenSequence> turns = {toks({"x", "y"}), toks({"x", "y", "z", "w"})};
  // turn 1: c=2, r=4, matches m1=2 (p1=1), m2=1 (p2=(1+1)/(1+1)=1), higher
  // orders have no candidate n-grams -> p=1; BLEU = exp(1-2)
  // turn 2: c=4 >= r=2 -> BP=1; m1=2/4 -> p1=3/5; m2=1/3 -> p2=2/4;
  //         m3=0/2 -> p3=1/3; m4=0/1 -> p4=1/2
  const double b1 = std::exp(1.0 - 4.0 / 2.0) * 1.0;
  const double b2 = std::pow((3.0 / 5.0) * (2.0 / 4.0) * (1.0 / 3.0) * (1.0 / 2.0), 0.25);
  CHECK(self_bleu(turns) == Catch::Approx((b1 + b2) / 2.0).margin(1e-12));
}

TEST_CASE("self_bleu needs at least two turns") {
  std::vector<TokenSequence> one = {toks({"a"})};
  CHECK_THROWS_AS(self_bleu(one), TooFewTurns);
}

TEST_CASE("unigram perplexity closed form on a single-occurrence corpus") {
  for (int v : {1, 2, 5, 17, 100}) {
    std::vector<TokenSequence> corpus;
    TokenSequence sequence;
    for (int i = 0; i < v; ++i) sequence.push_back("w" + std::to_string(i));
    corpus.push_back(sequence);
    auto model = train_ngram(corpus, 1);

    // every in-vocabulary token has probability exactly 1/(V+1):
    // (1 + 1) / (V + (V + 2)) with the unknown and padding symbols in V
    CHECK(model.probability("w0", {}) == 1.0 / (v + 1));
    CHECK(perplexity(model, sequence) == Catch::Approx(v + 1.0).margin(1e-9));
    CHECK(perplexity(model, toks({"w0"})) == Catch::Approx(v + 1.0).margin(1e-9));
  }
}

TEST_CASE("perplexity approaches one from above as a repetitive corpus grows") {
  double previous = std::numeric_limits<double>::infinity();
  for (int n : {2, 8, 32, 128, 1024}) {
    std::vector<TokenSequence> corpus = {TokenSequence(n, "a")};
    auto model = train_ngram(corpus, 1);
    const double ppl = perplexity(model, toks({"a", "a", "a"}));
    CHECK(ppl > 1.0);
    CHECK(ppl < previous);
    // closed form for this corpus: (N + 3) / (N + 1)
    CHECK(ppl == Catch::Approx((n + 3.0) / (n + 1.0)).margin(1e-9));
    previous = ppl;
  }
}

TEST_CASE("bigram probabilities and perplexity on a tiny corpus") {
  // corpus [x y]: vocabulary {x, y, <unk>, <s>} of size 4
  auto model = train_ngram({toks({"x", "y"})}, 2);
  CHECK(model.vocabulary_size() == 4);
  CHECK(model.probability("x", {NGramModel::kSequenceStart}) == Catch::Approx(2.0 / 5.0));
  CHECK(model.probability("y", {"x"}) == Catch::Approx(2.0 / 5.0));
  CHECK(model.probability("zzz", {"x"}) == Catch::Approx(1.0 / 5.0));  // unseen -> <unk>
  CHECK(model.probability("y", {"unseen-context"}) == Catch::Approx(1.0 / 4.0));
  CHECK(perplexity(model, toks({"x", "y"})) == Catch::Approx(2.5).margin(1e-12));
}

TEST_CASE("perplexity maps out-of-vocabulary tokens to the unknown symbol") {
  auto model = train_ngram({toks({"a", "b", "a"})}, 1);
  const double ppl = perplexity(model, toks({"never", "seen"}));
  CHECK(ppl >= 1.0);
  CHECK(std::isfinite(ppl));
}

TEST_CASE("perplexity rejects empty text") {
  auto model = train_ngram({toks({"a"})}, 1);
  CHECK_THROWS_AS(perplexity(model, {}), EmptyText);
}

TEST_CASE("property: perplexity is at least one") {
  std::mt19937 rng(20250811);
  for (int i = 0; i < 1000; ++i) {
    const int order = 1 + static_cast<int>(rng() % 3);
    std::vector<TokenSequence> corpus;
    const int n_seqs = 1 + static_cast<int>(rng() % 4);
    for (int s = 0; s < n_seqs; ++s) {
      TokenSequence seq;
      const int len = 1 + static_cast<int>(rng() % 12);
      for (int k = 0; k < len; ++k) seq.push_back("w" + std::to_string(rng() % 6));
      corpus.push_back(seq);
    }
    auto model = train_ngram(corpus, order);
    TokenSequence text;
    const int len = 1 + static_cast<int>(rng() % 10);
    for (int k = 0; k < len; ++k) text.push_back("w" + std::to_string(rng() % 9));
    const double ppl = perplexity(model, text);
    CHECK(ppl >= 1.0);
  }
}

TEST_CASE("property: perplexity is invariant under vocabulary relabeling") {
  std::mt19937 rng(9);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::string> names = {"w0", "w1", "w2", "w3", "w4", "w5"};
    std::vector<std::string> renamed = {"q5", "q1", "q9", "q0", "q7", "q2"};
    for (std::size_t k = renamed.size() - 1; k > 0; --k)
      std::swap(renamed[k], renamed[rng() % (k + 1)]);

    auto rename = [&](const TokenSequence& seq) {
      TokenSequence out;
      for (const auto& t : seq)
        out.push_back(renamed[&*std::find(names.begin(), names.end(), t) - &names[0]]);
      return out;
    };

    std::vector<TokenSequence> corpus;
    const int n_seqs = 1 + static_cast<int>(rng() % 3);
    for (int s = 0; s < n_seqs; ++s) {
      TokenSequence seq;
      const int len = 1 + static_cast<int>(rng() % 10);
      for (int k = 0; k < len; ++k) seq.push_back(names[rng() % names.size()]);
      corpus.push_back(seq);
    }
    TokenSequence text;
    for (int k = 0; k < 6; ++k) text.push_back(names[rng() % names.size()]);

    const int order = 1 + static_cast<int>(rng() % 2);
    auto model = train_ngram(corpus, order);
    std::vector<TokenSequence> renamed_corpus;
    for (const auto& seq : corpus) renamed_corpus.push_back(rename(seq));
    auto renamed_model = train_ngram(renamed_corpus, order);

    CHECK(perplexity(model, text) ==
          Catch::Approx(perplexity(renamed_model, rename(text))).margin(1e-12));
  }
}

TEST_CASE("entity_overlap on the colorado fixture") {
  CHECK(entity_overlap(toks({"love", "hiking", "colorado"}),
                       toks({"colorado", "hiking", "great"})) == Catch::Approx(0.5));
}

TEST_CASE("entity_overlap identity, disjoint, and empty conventions") {
  CHECK(entity_overlap(toks({"alpine", "lakes"}), toks({"lakes", "alpine"})) == 1.0);
  CHECK(entity_overlap(toks({"alpine"}), toks({"deserts"})) == 0.0);
  CHECK(entity_overlap({}, {}) == 1.0);
  CHECK(entity_overlap(toks({"the", "and"}), toks({"of", "a"})) == 1.0);  // all stopwords
  CHECK(entity_overlap(toks({"the"}), toks({"mountain"})) == 0.0);
}

TEST_CASE("flow_score is one for identical consecutive turns") {
  HashEmbedder embedder;
  std::vector<TokenSequence> turns(3, toks({"the", "trail", "was", "long"}));
  auto f = flow_score(turns, embedder);
  CHECK(f.precision == Catch::Approx(1.0).margin(1e-9));
  CHECK(f.recall == Catch::Approx(1.0).margin(1e-9));
  CHECK(f.f1 == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("flow_score is zero for orthogonal embeddings") {
  AxisEmbedder embedder;
  embedder.axis_ = {{"aa", 0}, {"bb", 1}, {"cc", 2}, {"dd", 3}};
  std::vector<TokenSequence> turns = {toks({"aa", "bb"}), toks({"cc", "dd"})};
  auto f = flow_score(turns, embedder);
  CHECK(f.precision == 0.0);
  CHECK(f.recall == 0.0);
  CHECK(f.f1 == 0.0);
}

TEST_CASE("flow_score matches the brute-force greedy oracle") {
  HashEmbedder embedder;
  std::mt19937 rng(77);
  for (int i = 0; i < 500; ++i) {
    std::vector<TokenSequence> turns;
    const int n_turns = 2 + static_cast<int>(rng() % 3);
    for (int t = 0; t < n_turns; ++t) {
      TokenSequence seq;
      const int len = 1 + static_cast<int>(rng() % 6);
      for (int k = 0; k < len; ++k) seq.push_back("tok" + std::to_string(rng() % 12));
      turns.push_back(seq);
    }
    auto got = flow_score(turns, embedder);

    double p = 0, r = 0;
    for (int t = 0; t + 1 < n_turns; ++t) {
      auto pair = oracle::flow_pair(turns[t], turns[t + 1], embedder);
      p += pair.precision;
      r += pair.recall;
    }
    p /= (n_turns - 1);
    r /= (n_turns - 1);
    const double f1 = (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
    CHECK(got.precision == Catch::Approx(p).margin(1e-9));
    CHECK(got.recall == Catch::Approx(r).margin(1e-9));
    CHECK(got.f1 == Catch::Approx(f1).margin(1e-9));
  }
}

TEST_CASE("flow_score F1 lies between precision and recall") {
  HashEmbedder embedder;
  std::mt19937 rng(78);
  for (int i = 0; i < 1000; ++i) {
    std::vector<TokenSequence> turns;
    const int n_turns = 2 + static_cast<int>(rng() % 4);
    for (int t = 0; t < n_turns; ++t) {
      TokenSequence seq;
      const int len = 1 + static_cast<int>(rng() % 5);
      for (int k = 0; k < len; ++k) seq.push_back("t" + std::to_string(rng() % 10));
      turns.push_back(seq);
    }
    auto f = flow_score(turns, embedder);
    CHECK(f.f1 >= std::min(f.precision, f.recall) - 1e-12);
    CHECK(f.f1 <= std::max(f.precision, f.recall) + 1e-12);
  }
}

TEST_CASE("flow_score requires two turns") {
  HashEmbedder embedder;
  std::vector<TokenSequence> one = {toks({"a"})};
  CHECK_THROWS_AS(flow_score(one, embedder), TooFewTurns);
}

TEST_CASE("semantic_similarity identity and orthogonal cases") {
  HashEmbedder embedder;
  auto t = toks({"rivers", "and", "canyons"});
  CHECK(semantic_similarity(t, t, embedder) == Catch::Approx(1.0).margin(1e-9));

  AxisEmbedder axes;
  axes.axis_ = {{"aa", 0}, {"bb", 1}};
  CHECK(semantic_similarity(toks({"aa"}), toks({"bb"}), axes) == 0.0);
}

TEST_CASE("semantic_similarity matches a direct cosine computation") {
  HashEmbedder embedder;
  auto a = toks({"red", "car"});
  auto b = toks({"red", "bike"});
  auto va = embedder.embed(a);
  auto vb = embedder.embed(b);
  std::vector<double> ma(embedder.dimension(), 0), mb(embedder.dimension(), 0);
  for (const auto& v : va)
    for (std::size_t k = 0; k < ma.size(); ++k) ma[k] += v[k] / va.size();
  for (const auto& v : vb)
    for (std::size_t k = 0; k < mb.size(); ++k) mb[k] += v[k] / vb.size();
  const double expected = std::clamp(oracle::cosine(ma, mb), 0.0, 1.0);
  CHECK(semantic_similarity(a, b, embedder) == Catch::Approx(expected).margin(1e-9));
}

TEST_CASE("semantic_similarity rejects empty inputs") {
  HashEmbedder embedder;
  CHECK_THROWS_AS(semantic_similarity({}, toks({"a"}), embedder), EmptyText);
}

TEST_CASE("flesch on the cat-sat fixture") {
  // 1 sentence, 3 words, 3 syllables:
  // 206.835 - 1.015 * 3 - 84.6 * 1 = 119.19
  CHECK(flesch("The cat sat.") == Catch::Approx(119.19).margin(1e-6));
}

TEST_CASE("flesch is invariant under whole-text duplication") {
  const std::string text = "The weather was lovely today. We hiked for hours!";
  CHECK(flesch(text + " " + text) == Catch::Approx(flesch(text)).margin(1e-9));
}

TEST_CASE("flesch rejects wordless text") {
  CHECK_THROWS_AS(flesch(""), EmptyText);
  CHECK_THROWS_AS(flesch("..."), EmptyText);
}

TEST_CASE("flesch counts vowel groups with the silent-e rule") {
  // hand-derived from the rule: count maximal aeiouy runs, subtract one for
  // a trailing e when more than one run exists, floor at one
  CHECK(detail::syllable_count("cake") == 1);     // a, e(final, dropped)
  CHECK(detail::syllable_count("the") == 1);      // single final-e run kept
  CHECK(detail::syllable_count("garden") == 2);   // a, e
  CHECK(detail::syllable_count("evening") == 3);  // e, e, i
  CHECK(detail::syllable_count("xyz") == 1);      // y counts as a vowel
  CHECK(detail::syllable_count("12,3") == 1);     // non-alpha words count one
  CHECK(detail::syllable_count("idea") == 2);     // runs i, ea
}

TEST_CASE("property: bounded metrics stay in range on random inputs") {
  std::mt19937 rng(123);
  auto random_seq = [&](int max_len) {
    TokenSequence seq;
    const int len = static_cast<int>(rng() % (max_len + 1));
    for (int k = 0; k < len; ++k) seq.push_back("w" + std::to_string(rng() % 9));
    return seq;
  };

  for (int i = 0; i < 10000; ++i) {
    auto a = random_seq(8);
    auto b = random_seq(8);
    for (int n : {1, 2}) {
      auto r = rouge_n(a, b, n);
      CHECK((r.precision >= 0 && r.precision <= 1));
      CHECK((r.recall >= 0 && r.recall <= 1));
      CHECK((r.f1 >= 0 && r.f1 <= 1));
    }
    auto l = rouge_l(a, b);
    CHECK((l.f1 >= 0 && l.f1 <= 1));
    const double j = entity_overlap(a, b);
    CHECK((j >= 0 && j <= 1));
  }

  HashEmbedder embedder;
  for (int i = 0; i < 2000; ++i) {
    std::vector<TokenSequence> turns;
    const int n_turns = 2 + static_cast<int>(rng() % 3);
    for (int t = 0; t < n_turns; ++t) {
      auto seq = random_seq(5);
      if (seq.empty()) seq.push_back("pad");
      turns.push_back(seq);
    }
    const double sb = self_bleu(turns);
    CHECK((sb >= 0 && sb <= 1 + 1e-12));
    auto f = flow_score(turns, embedder);
    CHECK((f.f1 >= 0 && f.f1 <= 1 + 1e-12));
    const double s = semantic_similarity(turns[0], turns[1], embedder);
    CHECK((s >= 0 && s <= 1));
  }
}

TEST_CASE("evaluate_dataset on a degenerate all-identical corpus") {
  HashEmbedder embedder;
  EvalConversation conv;
  conv.pair_id = "p1";
  conv.topic = "t";
  conv.turn_texts = {"the trail was long", "the trail was long", "the trail was long"};
  auto result = evaluate_dataset({conv}, embedder);
  CHECK(result.report.self_bleu == Catch::Approx(1.0).margin(1e-9));
  CHECK(result.report.flow.f1 == Catch::Approx(1.0).margin(1e-9));
  CHECK(result.report.entity_overlap == Catch::Approx(1.0).margin(1e-9));
  CHECK(result.report.perplexity >= 1.0);
}

TEST_CASE("evaluate_dataset averages per-conversation values") {
  HashEmbedder embedder;
  EvalConversation a;
  a.pair_id = "p1";
  a.turn_texts = {"alpine lakes shimmer", "granite peaks tower", "alpine lakes shimmer"};
  EvalConversation b;
  b.pair_id = "p2";
  b.turn_texts = {"the kitchen smelled of bread", "fresh bread cooled slowly"};

  auto both = evaluate_dataset({a, b}, embedder);
  REQUIRE(both.per_conversation.size() == 2);
  // report values equal the mean of the per-conversation values
  CHECK(both.report.self_bleu ==
        Catch::Approx((both.per_conversation[0].values.self_bleu +
                       both.per_conversation[1].values.self_bleu) /
                      2.0)
            .margin(1e-12));
  CHECK(both.report.rouge1 ==
        Catch::Approx((both.per_conversation[0].values.rouge1 +
                       both.per_conversation[1].values.rouge1) /
                      2.0)
            .margin(1e-12));
  CHECK(both.report.flesch ==
        Catch::Approx((both.per_conversation[0].values.flesch +
                       both.per_conversation[1].values.flesch) /
                      2.0)
            .margin(1e-12));

  // pair-metric values of each conversation match standalone computation
  std::vector<TokenSequence> turns_a;
  for (const auto& t : a.turn_texts) turns_a.push_back(tokenize(t));
  CHECK(both.per_conversation[0].values.self_bleu ==
        Catch::Approx(self_bleu(turns_a)).margin(1e-12));
}

TEST_CASE("evaluate_dataset skips too-short conversations per metric") {
  HashEmbedder embedder;
  EvalConversation single;
  single.pair_id = "p1";
  single.turn_texts = {"only one turn here"};
  EvalConversation full;
  full.pair_id = "p2";
  full.turn_texts = {"two turns now", "two turns again"};
  auto result = evaluate_dataset({single, full}, embedder);
  REQUIRE(result.per_conversation.size() == 2);
  CHECK_FALSE(result.per_conversation[0].has_pair_metrics);
  CHECK(result.per_conversation[1].has_pair_metrics);
  // the one-turn conversation still contributes readability and perplexity
  CHECK(result.per_conversation[0].values.flesch != 0.0);
  CHECK(result.per_conversation[0].values.perplexity >= 1.0);
}

TEST_CASE("evaluate_dataset rejects an empty record list") {
  HashEmbedder embedder;
  CHECK_THROWS_AS(evaluate_dataset({}, embedder), Error);
}
