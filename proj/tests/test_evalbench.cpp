#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "longdep/errors.hpp"
#include "longdep/evalbench.hpp"
#include "longdep/lds.hpp"
#include "longdep/ngram.hpp"
#include "longdep/stats.hpp"

using namespace longdep;

namespace {

SynthSpec small_spec(std::size_t n_each = 6, std::size_t len = 2048) {
    SynthSpec s;
    s.n_positive = n_each;
    s.n_negative = n_each;
    s.doc_token_len = len;
    return s;
}

struct Fixture {
    std::vector<LabeledDocument> docs;
    std::shared_ptr<Vocabulary> vocab = std::make_shared<Vocabulary>();
    std::shared_ptr<const NGramModel> model;

    explicit Fixture(const SynthSpec& spec) : docs(generate_testset(spec)) {
        tokenize_all(docs, Tokenizer(TokenizerSpec{}, vocab));
        std::vector<Document> plain;
        for (const auto& d : docs) plain.push_back(d.doc);
        model = std::make_shared<const NGramModel>(train_ngram(plain, 3, 0.01, vocab->snapshot(), 0.5));
    }
};

double mean_far_dst(const Document& doc, const PerplexityBackend& b, std::size_t L) {
    const auto grid = segment(doc, L, doc.tokens.size());
    LdsConfig cfg;
    cfg.mode = ScoreMode::exact;
    PplCache cache;
    const auto r = lds_exact(grid, b, cfg, cache, {.keep_pairs = true});
    double s = 0;
    std::size_t n = 0;
    for (const auto& p : r.pairs)
        if (p.ddi > 0.5) s += p.dst, ++n;
    return s / static_cast<double>(n);
}

class Broken final : public PerplexityBackend {
public:
    BackendCapabilities capabilities() const override { return {}; }
    std::string identity() const override { return "broken"; }
    LogProb score(SegmentRef, std::optional<SegmentRef>) const override { throw ScoringError("nan"); }
};

}  // namespace

TEST(Testset, DeterministicBalancedAndLengthMatched) {
    const auto spec = small_spec(10, 1000);
    const auto a = generate_testset(spec);
    const auto b = generate_testset(spec);
    ASSERT_EQ(a.size(), 20u);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].doc.id, b[k].doc.id);
        EXPECT_EQ(a[k].doc.text, b[k].doc.text);
        EXPECT_EQ(a[k].positive, b[k].positive);
        pos += a[k].positive;
        const auto words = std::count(a[k].doc.text.begin(), a[k].doc.text.end(), ' ') + 1;
        EXPECT_EQ(words, 1000);
        EXPECT_EQ(a[k].doc.id.rfind("synth-", 0), 0u);
    }
    EXPECT_EQ(pos, 10u);
    auto other = spec;
    other.seed = 8;
    EXPECT_NE(generate_testset(other)[0].doc.text, a[0].doc.text);
}

TEST(Testset, PositivesHaveMoreFarDependency) {
    Fixture f(small_spec(6, 4096));
    NGramBackend b(f.model);
    std::vector<double> pos, neg;
    for (const auto& d : f.docs) (d.positive ? pos : neg).push_back(mean_far_dst(d.doc, b, 128));
    EXPECT_GT(stats::mean(pos), stats::mean(neg));
    EXPECT_GT(*std::min_element(pos.begin(), pos.end()), *std::max_element(neg.begin(), neg.end()));
}

TEST(Testset, RepeatedTokenHasHighDstButZeroDsp) {
    SynthLanguage lang(LanguageParams{}, 1);
    auto vocab = std::make_shared<Vocabulary>();
    Tokenizer tok(TokenizerSpec{}, vocab);
    Document filler, rep;
    filler.id = "f";
    filler.tokens = tok.encode(lang.generate(Generator::local_only, 8192, 2)).ids;
    rep.id = "r";
    rep.tokens = tok.encode(lang.generate(Generator::repeated_token, 2048, 3)).ids;
    auto model = std::make_shared<const NGramModel>(
        train_ngram(std::vector<Document>{filler}, 3, 0.01, vocab->snapshot(), 0.5));
    NGramBackend b(model);
    const auto grid = segment(rep, 128, 2048);
    LdsConfig cfg;
    cfg.mode = ScoreMode::exact;
    PplCache cache;
    const auto r = lds_exact(grid, b, cfg, cache, {.keep_pairs = true});
    for (const auto& p : r.pairs) EXPECT_GT(p.dst, cfg.tau);
    for (auto [i, d] : r.dsp_per_target) EXPECT_LT(d, 1e-12);
    EXPECT_LT(std::abs(r.lds), 1e-9);
}

TEST(Bench, OracleIsPerfect) {
    Fixture f(small_spec(8, 2048));
    std::vector<BenchBackend> backends{{"oracle", std::make_shared<OracleBackend>(f.docs, 128)}};
    BenchOptions o;
    o.segmentation.segment_len = 128;
    o.segmentation.max_tokens = 2048;
    const std::vector<std::size_t> ts{50};
    const auto res = run_bench(f.docs, backends, ts, o);
    ASSERT_EQ(res.size(), 1u);
    EXPECT_FALSE(res[0].failed);
    EXPECT_EQ(res[0].k, 8u);
    EXPECT_EQ(res[0].positives_in_top_k, 8u);
    EXPECT_DOUBLE_EQ(res[0].accuracy, 1.0);
    EXPECT_GT(res[0].docs_per_second, 0.0);
}

TEST(Bench, FailingCellDoesNotStopOthers) {
    Fixture f(small_spec(3, 1024));
    std::vector<BenchBackend> backends{{"broken", std::make_shared<Broken>()},
                                       {"ngram", std::make_shared<NGramBackend>(f.model)}};
    BenchOptions o;
    o.segmentation.segment_len = 128;
    o.segmentation.max_tokens = 1024;
    const std::vector<std::size_t> ts{20, 5};
    const auto res = run_bench(f.docs, backends, ts, o);
    ASSERT_EQ(res.size(), 4u);
    std::size_t failed = 0;
    for (const auto& r : res) {
        failed += r.failed;
        EXPECT_GE(r.accuracy, 0.0);
        EXPECT_LE(r.accuracy, 1.0);
    }
    EXPECT_EQ(failed, 2u);
    const auto csv = bench_csv(res);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "samples_T,backend,docs_per_second,accuracy,positives_in_top_k,k,wall_seconds,workers,status");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
    EXPECT_NE(bench_table(res).find("failed"), std::string::npos);
}

TEST(Bench, TopKTieBreakAndPermutationInvariance) {
    const std::vector<double> lds{3, 1, 3, 2};
    const std::vector<bool> pos{false, true, true, false};
    const std::vector<std::string> ids{"b", "a", "a2", "c"};
    // top-2 by (lds desc, id asc): "a2" then "b"
    EXPECT_EQ(positives_in_top_k(lds, pos, ids, 2), 1u);
    std::vector<std::size_t> order{3, 1, 0, 2};
    std::vector<double> l2;
    std::vector<bool> p2;
    std::vector<std::string> i2;
    for (auto k : order) {
        l2.push_back(lds[k]);
        p2.push_back(pos[k]);
        i2.push_back(ids[k]);
    }
    EXPECT_EQ(positives_in_top_k(l2, p2, i2, 2), 1u);
}
