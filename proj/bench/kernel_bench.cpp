#include <benchmark/benchmark.h>

#include <memory>

#include "longdep/evalbench.hpp"
#include "longdep/lds.hpp"
#include "longdep/ngram.hpp"

using namespace longdep;

namespace {

struct Setup {
    std::unique_ptr<NGramBackend> backend;
    std::unique_ptr<SegmentGrid> grid;
};

const Setup& setup() {
    static const Setup s = [] {
        SynthLanguage lang(LanguageParams{}, 3);
        auto vocab = std::make_shared<Vocabulary>();
        Tokenizer tok(TokenizerSpec{}, vocab);
        Document doc;
        doc.id = "bench";
        doc.tokens = tok.encode(lang.generate(Generator::entity_chain, 64 * 128, 5)).ids;
        auto model = std::make_shared<const NGramModel>(
            train_ngram(std::vector<Document>{doc}, 3, 0.01, vocab->snapshot(), 0.5));
        Setup r;
        r.backend = std::make_unique<NGramBackend>(model);
        r.grid = std::make_unique<SegmentGrid>(segment(doc, 128, doc.tokens.size()));
        return r;
    }();
    return s;
}

LdsConfig exact() {
    LdsConfig c;
    c.mode = ScoreMode::exact;
    return c;
}

void BM_ExactSerialReference(benchmark::State& state) {
    const auto& s = setup();
    for (auto _ : state) benchmark::DoNotOptimize(reference::lds_exact_serial(*s.grid, *s.backend, exact()).lds);
    state.counters["pairs"] = static_cast<double>(pair_count(s.grid->size()));
}

void BM_ExactParallel(benchmark::State& state) {
    const auto& s = setup();
    const int threads = static_cast<int>(state.range(0));
    for (auto _ : state) {
        PplCache cache;
        benchmark::DoNotOptimize(score_document(*s.grid, *s.backend, exact(), cache, {.threads = threads}).lds);
    }
    state.counters["pairs"] = static_cast<double>(pair_count(s.grid->size()));
}

void BM_ConditionalKernel(benchmark::State& state) {
    const auto& s = setup();
    const auto pairs = sample_pairs(s.grid->size(), 1000, 1).pairs;
    const int threads = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(conditional_ppls(*s.grid, *s.backend, pairs, threads));
}

}  // namespace

BENCHMARK(BM_ExactSerialReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExactParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConditionalKernel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
