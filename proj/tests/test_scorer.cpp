#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "longdep/corpus.hpp"
#include "longdep/errors.hpp"
#include "longdep/ngram.hpp"
#include "longdep/scorer.hpp"
#include "support.hpp"

using namespace longdep;
using longdep::testing::doc_from_tokens;
using longdep::testing::labeled_doc;
using longdep::testing::ScriptedBackend;
using longdep::testing::TempDir;

namespace {

SegmentRef ref(const std::vector<TokenId>& v) { return SegmentRef{std::span<const TokenId>(v), {}}; }

std::vector<TokenId> random_tokens(std::size_t n, TokenId vocab, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<TokenId> out(n);
    for (auto& t : out) t = static_cast<TokenId>(rng() % vocab);
    return out;
}

std::shared_ptr<const NGramModel> model_of(std::vector<Document> docs, int order, double k, double lambda = 0.0) {
    return std::make_shared<const NGramModel>(train_ngram(docs, order, k, {}, lambda));
}

}  // namespace

TEST(Perplexity, ProbabilityOneGivesOne) {
    EXPECT_DOUBLE_EQ(perplexity_from_logprob({0.0, 7}), 1.0);
}

TEST(Perplexity, UniformModelGivesV) {
    const double v = 37.0;
    EXPECT_NEAR(perplexity_from_logprob({-10 * std::log(v), 10}), v, 1e-12);
}

TEST(Perplexity, NonFiniteIsScoringError) {
    EXPECT_THROW(perplexity_from_logprob({-INFINITY, 3}), ScoringError);
    EXPECT_THROW(perplexity_from_logprob({std::nan(""), 3}), ScoringError);
    EXPECT_THROW(perplexity_from_logprob({0.0, 0}), ScoringError);
}

TEST(NGram, BigramChainRuleMatchesHandExpansion) {
    // Corpus "a b a b" as ids a=0, b=1; V = 2 observed + unknown = 3.
    const double k = 0.01;
    auto m = model_of({doc_from_tokens("d", {0, 1, 0, 1})}, 2, k);
    ASSERT_EQ(m->vocab_size(), 3u);
    NGramBackend backend(m);
    const std::vector<TokenId> target{0, 1};
    // p(a | BOS) = (1 + k) / (1 + 3k), p(b | a) = (2 + k) / (2 + 3k)
    const double pa = (1 + k) / (1 + 3 * k);
    const double pb = (2 + k) / (2 + 3 * k);
    const double expected = std::exp(-(std::log(pa) + std::log(pb)) / 2);
    EXPECT_NEAR(ppl(backend, ref(target)), expected, 1e-14);
    // arbitrary-precision evaluation of the same expression
    EXPECT_NEAR(ppl(backend, ref(target)), 1.0148641601628637, 1e-14);
}

TEST(NGram, SingleSymbolCorpusApproachesCertainty) {
    auto m = model_of({doc_from_tokens("d", {0, 0, 0, 0})}, 2, 1e-9);
    const std::vector<TokenId> h{0};
    EXPECT_NEAR(m->ngram_prob(h, 0), 1.0, 1e-8);
}

TEST(NGram, UnigramAddKClosedForm) {
    // V_obs = 5 symbols, each seen twice; predictive vocabulary 6 with unknown.
    const double k = 0.5;
    auto m = model_of({doc_from_tokens("d", {0, 1, 2, 3, 4, 4, 3, 2, 1, 0})}, 1, k);
    for (TokenId w = 0; w < 5; ++w) EXPECT_NEAR(m->ngram_prob({}, w), (2 + k) / (10 + 6 * k), 1e-15);
    EXPECT_NEAR(m->ngram_prob({}, 99), k / (10 + 6 * k), 1e-15);
}

TEST(NGram, DisjointVocabularyFallsToSmoothingFloor) {
    const double k = 0.01;
    auto m = model_of({doc_from_tokens("x", {0, 1, 0, 1, 0, 1}), doc_from_tokens("y", {2, 3, 2, 3, 2, 3})}, 2, k);
    const double v = static_cast<double>(m->vocab_size());
    // c(a) = 3 successors of a in training; (a, c) never seen.
    const std::vector<TokenId> h{0};
    EXPECT_NEAR(m->ngram_prob(h, 2), k / (3 + k * v), 1e-15);
}

TEST(NGram, DisjointContextOnlyMovesTheBoundaryToken) {
    std::vector<TokenId> a_text, b_text;
    for (int r = 0; r < 200; ++r) {
        a_text.push_back(static_cast<TokenId>(r % 5));
        b_text.push_back(static_cast<TokenId>(5 + (r * 7) % 5));
    }
    const double lambda = 0.5;
    auto m = model_of({doc_from_tokens("a", a_text), doc_from_tokens("b", b_text)}, 2, 0.01, lambda);
    NGramBackend backend(m);
    const std::vector<TokenId> target(b_text.begin(), b_text.begin() + 128);
    const std::vector<TokenId> context(a_text.begin(), a_text.begin() + 128);
    const double u = ppl(backend, ref(target));
    const double c = ppl_given(backend, ref(target), ref(context));
    // Every position after the first sees the same target-only history. The
    // first one is predicted after the context's last token, which has cached
    // successors none of which is the target token.
    const std::vector<TokenId> last{context.back()};
    const double p_uncond = m->ngram_prob({}, target[0]);
    const double p_cond = (1 - lambda) * m->ngram_prob(last, target[0]);
    EXPECT_NEAR(128 * std::log(c / u), std::log(p_uncond) - std::log(p_cond), 1e-9);
    EXPECT_LT(std::abs(u - c) / u, 0.1);
}

TEST(NGram, RepeatedSpanContextLowersPerplexity) {
    const auto text = random_tokens(4096, 300, 11);
    auto m = model_of({doc_from_tokens("d", text)}, 3, 0.01, 0.5);
    NGramBackend backend(m);
    const std::vector<TokenId> seg(text.begin() + 1000, text.begin() + 1128);
    const std::vector<TokenId> other(text.begin() + 3000, text.begin() + 3128);
    EXPECT_LT(ppl_given(backend, ref(seg), ref(seg)), ppl(backend, ref(seg)));
    EXPECT_LT(ppl_given(backend, ref(seg), ref(seg)), ppl_given(backend, ref(seg), ref(other)));
}

TEST(NGram, EmptyContextIsUnconditionalExactly) {
    const auto text = random_tokens(2000, 50, 3);
    auto m = model_of({doc_from_tokens("d", text)}, 3, 0.1, 0.5);
    NGramBackend backend(m);
    const std::vector<TokenId> t(text.begin(), text.begin() + 64);
    const std::vector<TokenId> empty;
    EXPECT_EQ(ppl_given(backend, ref(t), ref(empty)), ppl(backend, ref(t)));
}

TEST(NGram, ConditionalDistributionSumsToOne) {
    const auto text = random_tokens(3000, 40, 5);
    auto m = model_of({doc_from_tokens("d", text)}, 3, 0.05);
    for (std::size_t start = 0; start < 50; ++start) {
        std::span<const TokenId> h(text.data() + start, 2);
        double s = 0.0;
        for (TokenId w = 0; w < m->vocab_size(); ++w) s += m->ngram_prob(h, w);
        EXPECT_NEAR(s, 1.0, 1e-9);
    }
}

TEST(NGram, TrainingErrors) {
    EXPECT_THROW(train_ngram({}, 3, 0.1), ConfigError);
    std::vector<Document> one{doc_from_tokens("d", {0, 1})};
    EXPECT_THROW(train_ngram(one, 0, 0.1), ConfigError);
    EXPECT_THROW(train_ngram(one, 6, 0.1), ConfigError);
    EXPECT_THROW(train_ngram(one, 2, 0.0), ConfigError);
}

TEST(NGram, SaveLoadIsLosslessAndCanonical) {
    TempDir dir;
    const auto text = random_tokens(5000, 80, 9);
    const NGramModel m = train_ngram(std::vector<Document>{doc_from_tokens("d", text)}, 3, 0.01, {}, 0.5);
    m.save(dir / "a.json");
    const NGramModel back = NGramModel::load(dir / "a.json");
    EXPECT_TRUE(back == m);
    back.save(dir / "b.json");
    EXPECT_EQ(longdep::testing::read_text(dir / "a.json"), longdep::testing::read_text(dir / "b.json"));

    NGramBackend b1(std::make_shared<const NGramModel>(m)), b2(std::make_shared<const NGramModel>(back));
    const std::vector<TokenId> t(text.begin() + 10, text.begin() + 138), c(text.begin() + 500, text.begin() + 628);
    EXPECT_EQ(ppl_given(b1, ref(t), ref(c)), ppl_given(b2, ref(t), ref(c)));
    EXPECT_EQ(b1.identity(), b2.identity());
}

TEST(NGram, LoadRejectsBadFiles) {
    TempDir dir;
    longdep::testing::write_text(dir / "bad.json", "{\"format\":\"other\"}");
    EXPECT_THROW(NGramModel::load(dir / "bad.json"), ConfigError);
    EXPECT_THROW(NGramModel::load(dir / "missing.json"), ConfigError);
}

TEST(Counters, PplAndPplGivenAreCounted) {
    ScriptedBackend b;
    b.uncond[0] = 5.0;
    const std::vector<TokenId> t{0, 0}, c{0}, empty;
    ppl(b, ref(t));
    ppl_given(b, ref(t), ref(c));
    ppl_given(b, ref(t), ref(empty));
    EXPECT_EQ(b.unconditional_calls(), 2u);
    EXPECT_EQ(b.conditional_calls(), 1u);
}

TEST(Cache, OneCallPerSegmentThenNone) {
    std::vector<TokenId> labels(256);
    std::iota(labels.begin(), labels.end(), 0);
    ScriptedBackend b;
    for (TokenId l : labels) b.uncond[l] = 2.0 + l;
    const auto grid = segment(labeled_doc("d", labels, 4), 4, 1024);
    PplCache cache;
    const auto first = cached_unconditional(b, grid, cache);
    EXPECT_EQ(b.unconditional_calls(), 256u);
    const auto second = cached_unconditional(b, grid, cache);
    EXPECT_EQ(b.unconditional_calls(), 256u);
    EXPECT_EQ(first, second);
    EXPECT_NEAR(first[10], 12.0, 1e-12);
}

TEST(Cache, SameDocIdDifferentContentNoFalseHit) {
    ScriptedBackend b;
    for (TokenId l = 0; l < 4; ++l) b.uncond[l] = 3.0 + l;
    PplCache cache;
    const auto g1 = segment(labeled_doc("same", {0, 1}, 3), 3, 100);
    const auto g2 = segment(labeled_doc("same", {2, 3}, 3), 3, 100);
    const auto v1 = cached_unconditional(b, g1, cache);
    const auto v2 = cached_unconditional(b, g2, cache);
    EXPECT_EQ(b.unconditional_calls(), 4u);
    EXPECT_NEAR(v1[0], 3.0, 1e-12);
    EXPECT_NEAR(v2[0], 5.0, 1e-12);
}

TEST(Cache, BackendErrorCarriesSegmentIndex) {
    ScriptedBackend b;
    for (TokenId l = 0; l < 4; ++l) b.uncond[l] = 3.0;
    b.poison = 2;
    PplCache cache;
    const auto g = segment(labeled_doc("d", {0, 1, 2, 3}, 2), 2, 100);
    try {
        cached_unconditional(b, g, cache);
        FAIL() << "expected BackendError";
    } catch (const BackendError& e) {
        EXPECT_EQ(e.segment_index(), 3);
    }
}
