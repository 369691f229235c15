#include <gtest/gtest.h>

#include "longdep/errors.hpp"
#include "longdep/evalbench.hpp"
#include "longdep/lds.hpp"
#include "longdep/ngram.hpp"
#include "longdep/viz.hpp"
#include "support.hpp"

using namespace longdep;
using longdep::testing::TempDir;

namespace {

PairScore cell(std::size_t i, std::size_t j, double dst) {
    PairScore p;
    p.i = i;
    p.j = j;
    p.dst = dst;
    p.lds_pair = 10 * dst;
    return p;
}

const std::vector<PairScore> kThree{cell(2, 1, 0.5), cell(3, 1, 0.0), cell(3, 2, -0.2)};

// Exact-mode DST matrix of one generated document under an n-gram model trained on its family.
HeatmapMatrix generated_matrix(Generator g, std::size_t n_segments, std::size_t L) {
    SynthLanguage lang(LanguageParams{}, 3);
    auto vocab = std::make_shared<Vocabulary>();
    Tokenizer tok(TokenizerSpec{}, vocab);
    std::vector<Document> train;
    for (std::uint64_t s = 0; s < 6; ++s) {
        Document d;
        d.id = "t" + std::to_string(s);
        d.text = lang.generate(s % 2 ? Generator::short_concat : Generator::local_only, 8192, 100 + s);
        d.tokens = tok.encode(d.text).ids;
        train.push_back(std::move(d));
    }
    Document doc;
    doc.id = "probe";
    doc.text = lang.generate(g, n_segments * L, 999);
    doc.tokens = tok.encode(doc.text).ids;
    auto model = std::make_shared<const NGramModel>(train_ngram(train, 3, 0.01, vocab->snapshot(), 0.5));
    NGramBackend backend(model);
    const auto grid = segment(doc, L, n_segments * L);
    LdsConfig cfg;
    cfg.mode = ScoreMode::exact;
    PplCache cache;
    const auto r = lds_exact(grid, backend, cfg, cache, {.keep_pairs = true});
    return HeatmapMatrix::from_pairs(doc.id, grid.size(), r.pairs);
}

}  // namespace

TEST(Heatmap, CsvPassThrough) {
    const auto m = HeatmapMatrix::from_pairs("d", 3, kThree);
    EXPECT_EQ(heatmap_csv(m), "i,j,dst\n2,1,0.5\n3,1,0\n3,2,-0.20000000000000001\n");
    EXPECT_EQ(m.defined_cells(), 3u);
}

TEST(Heatmap, CsvRoundTripIsExact) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3, 1);
    std::vector<PairScore> pairs;
    for (std::size_t i = 2; i <= 30; ++i)
        for (std::size_t j = 1; j < i; ++j) pairs.push_back(cell(i, j, u(rng)));
    const auto back = parse_heatmap_csv(heatmap_csv(HeatmapMatrix::from_pairs("d", 30, pairs)));
    ASSERT_EQ(back.size(), pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        EXPECT_EQ(back[k].i, pairs[k].i);
        EXPECT_EQ(back[k].j, pairs[k].j);
        EXPECT_EQ(back[k].dst, pairs[k].dst);
    }
}

TEST(Heatmap, LdsPairValueSwitch) {
    const auto m = HeatmapMatrix::from_pairs("d", 3, kThree, HeatmapValue::lds_pair);
    EXPECT_EQ(*m.at(2, 1), 5.0);
    EXPECT_EQ(heatmap_csv(m, HeatmapValue::lds_pair).substr(0, 11), "i,j,lds_pai");
}

TEST(Heatmap, EmptyPairsAndOutOfTriangle) {
    EXPECT_THROW(HeatmapMatrix::from_pairs("d", 3, {}), ConfigError);
    HeatmapMatrix m("d", 3);
    EXPECT_THROW(m.set(1, 2, 0.1), ConfigError);
    EXPECT_THROW(m.set(2, 2, 0.1), ConfigError);
    EXPECT_THROW(m.set(4, 1, 0.1), ConfigError);
}

TEST(Heatmap, DimensionsAndMask) {
    const auto m = HeatmapMatrix::from_pairs("d", 3, kThree);
    for (std::size_t cs : {1u, 4u}) {
        const auto r = render_heatmap(m, {ColorScale::linear, HeatmapValue::dst, cs});
        EXPECT_EQ(r.width, 3 * cs);
        EXPECT_EQ(r.height, 3 * cs);
        EXPECT_EQ(r.pixel(0, 0), kMaskColor);              // diagonal
        EXPECT_EQ(r.pixel(2 * cs, 0), kMaskColor);         // upper triangle
        EXPECT_EQ(r.pixel(0, cs), (Rgb{255, 255, 255}));   // (2,1) is the max
        EXPECT_EQ(r.pixel(cs, 2 * cs), (Rgb{0, 0, 0}));    // (3,2) is the min
    }
}

TEST(Heatmap, SparseSampledCellsStayMasked) {
    const std::vector<PairScore> sparse{cell(5, 1, 0.3), cell(4, 2, 0.1)};
    const auto r = render_heatmap(HeatmapMatrix::from_pairs("d", 5, sparse), {});
    std::size_t masked = 0;
    for (std::size_t y = 0; y < 5; ++y)
        for (std::size_t x = 0; x < 5; ++x) masked += r.pixel(x, y) == kMaskColor;
    EXPECT_EQ(masked, 23u);
}

TEST(Heatmap, DivergingScale) {
    const auto r = render_heatmap(HeatmapMatrix::from_pairs("d", 3, kThree), {ColorScale::diverging});
    EXPECT_EQ(r.pixel(0, 1), (Rgb{255, 0, 0}));      // +0.5 is the largest magnitude
    EXPECT_EQ(r.pixel(0, 2), (Rgb{255, 255, 255}));  // 0 is white
    const Rgb neg = r.pixel(1, 2);
    EXPECT_EQ(neg[2], 255);
    EXPECT_LT(neg[0], 255);
}

TEST(Heatmap, PpmRoundTrip) {
    TempDir dir;
    const auto r = render_heatmap(HeatmapMatrix::from_pairs("d", 3, kThree), {ColorScale::linear, HeatmapValue::dst, 2});
    write_ppm(r, dir / "h.ppm");
    const auto back = read_ppm(dir / "h.ppm");
    EXPECT_EQ(back.width, r.width);
    EXPECT_EQ(back.rgb, r.rgb);
    EXPECT_EQ(longdep::testing::read_text(dir / "h.ppm").substr(0, 2), "P6");
}

TEST(Heatmap, RepeatedTokenIsUniformlyBright) {
    const auto m = generated_matrix(Generator::repeated_token, 12, 64);
    const auto r = render_heatmap(m, {});
    ASSERT_EQ(m.defined_cells(), 66u);
    const double first = *m.at(2, 1);
    EXPECT_GT(first, 0.0);
    for (std::size_t i = 2; i <= 12; ++i)
        for (std::size_t j = 1; j < i; ++j) {
            EXPECT_EQ(*m.at(i, j), first);
            EXPECT_EQ(r.pixel(j - 1, i - 1), (Rgb{255, 255, 255}));
        }
}

TEST(Heatmap, ConcatenationIsBrightNearDiagonal) {
    const std::size_t n = 24;
    const auto m = generated_matrix(Generator::short_concat, n, 64);
    double near = 0, far = 0;
    std::size_t n_near = 0, n_far = 0;
    for (std::size_t i = 2; i <= n; ++i)
        for (std::size_t j = 1; j < i; ++j) {
            if (i - j == 1) near += *m.at(i, j), ++n_near;
            if (i - j >= n / 2) far += *m.at(i, j), ++n_far;
        }
    EXPECT_GT(near / n_near, far / n_far + 0.02);
}

TEST(Sidecar, MissingDocumentIsConfigError) {
    TempDir dir;
    longdep::testing::write_text(dir / "p.jsonl",
                                 R"({"doc_id":"a","source":"s","mode":"exact","n_segments":3,"lds":0.1,"config_hash":"h",)"
                                 R"("dsp":[],"pair_fields":["i","j","delta_ppl","dst","ddi","indicator","lds_pair"],)"
                                 R"("pairs":[[2,1,1.0,0.5,0.5,1,0.4]]})"
                                 "\n");
    const auto e = read_sidecar(dir / "p.jsonl", "a");
    EXPECT_EQ(e.n_segments, 3u);
    ASSERT_EQ(e.pairs.size(), 1u);
    EXPECT_EQ(e.pairs[0].dst, 0.5);
    EXPECT_THROW(read_sidecar(dir / "p.jsonl", "zzz"), ConfigError);
    EXPECT_THROW(read_sidecar(dir / "none.jsonl"), ConfigError);
}
