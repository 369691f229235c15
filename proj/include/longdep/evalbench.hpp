#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "longdep/corpus.hpp"
#include "longdep/lds.hpp"
#include "longdep/pipeline.hpp"
#include "longdep/scorer.hpp"

namespace longdep {

/// Synthetic document families. Positives carry long-range structure,
/// negatives only local structure.
enum class Generator {
    key_reference,   // bindings defined up front, re-referenced near the end
    entity_chain,    // one cast of entities mentioned throughout
    short_concat,    // independent short texts glued together
    local_only,      // a single stream whose entities rotate every few sentences
    repeated_token,  // one token repeated; the repetition pathology
};

std::string_view to_string(Generator g);
Generator generator_from_string(std::string_view s);

/// Shared filler language and entity pools. Every document draws from the
/// same pools, so a binding (name -> attribute phrase) is only predictable
/// from inside the document that established it.
struct LanguageParams {
    std::size_t filler_vocab = 2000;
    std::size_t successors = 6;
    std::size_t name_pool = 600;
    std::size_t attr_pool = 600;
    std::size_t phrase_len = 3;
    std::size_t mentions_per_sentence = 2;
};

class SynthLanguage {
public:
    SynthLanguage(LanguageParams params, std::uint64_t seed);

    /// Exactly n_tokens whitespace-separated tokens.
    std::string generate(Generator g, std::size_t n_tokens, std::uint64_t seed) const;

    const LanguageParams& params() const noexcept { return params_; }

private:
    struct Binding {
        std::vector<std::string> tokens;
    };
    class Writer;

    Binding make_binding(std::mt19937_64& rng) const;
    void sentence(std::mt19937_64& rng, std::vector<std::string>& out) const;

    LanguageParams params_;
    std::vector<std::vector<std::uint32_t>> next_;  // successor table of the filler chain
    std::vector<double> next_cdf_;
    std::vector<double> start_cdf_;
};

struct SynthSpec {
    std::size_t n_positive = 100;
    std::size_t n_negative = 100;
    std::size_t doc_token_len = 32768;
    std::vector<Generator> positive_generators{Generator::key_reference, Generator::entity_chain};
    std::vector<Generator> negative_generators{Generator::short_concat, Generator::local_only};
    std::uint64_t seed = 7;
    LanguageParams language;

    void validate() const;
};

struct LabeledDocument {
    Document doc;  // text only; tokenize before scoring
    bool positive = false;
    Generator generator = Generator::entity_chain;
};

/// Deterministic in spec.seed. Positives and negatives have identical
/// token lengths and are interleaved in a seeded order under neutral ids.
std::vector<LabeledDocument> generate_testset(const SynthSpec& spec);

/// Tokenizes every document in place with `tokenizer`.
void tokenize_all(std::vector<LabeledDocument>& docs, const Tokenizer& tokenizer);

/// Scores targets belonging to planted-positive documents as context-dependent
/// and everything else as context-free. An upper-bound sanity scorer.
class OracleBackend final : public PerplexityBackend {
public:
    OracleBackend(std::span<const LabeledDocument> testset, std::size_t segment_len);

    BackendCapabilities capabilities() const override { return {0, true}; }
    std::string identity() const override { return "oracle"; }
    LogProb score(SegmentRef target, std::optional<SegmentRef> context) const override;

private:
    std::unordered_set<std::uint64_t> positive_segments_;
};

struct BenchBackend {
    std::string label;
    std::shared_ptr<const PerplexityBackend> backend;
};

struct BenchResult {
    std::string backend;
    std::size_t sample_size = 0;  // T
    std::size_t k = 0;
    std::size_t positives_in_top_k = 0;
    double accuracy = 0.0;
    double docs_per_second = 0.0;
    double wall_seconds = 0.0;
    int workers = 1;
    bool failed = false;
    std::string error;
};

struct BenchOptions {
    SegmentationConfig segmentation;
    LdsConfig lds;  // mode is forced to sampled; sample_size is taken from the T list
    int workers = 1;
};

/// Positives among the k highest-LDS documents, ties broken by doc_id; k = #positives.
std::size_t positives_in_top_k(std::span<const double> lds, const std::vector<bool>& positive,
                               std::span<const std::string> ids, std::size_t k);

/// For every (backend, T) cell: score all documents in sampled mode, rank,
/// and measure accuracy@k and throughput. Cells run sequentially; a failing
/// cell is marked and the rest proceed.
std::vector<BenchResult> run_bench(std::span<const LabeledDocument> testset, std::span<const BenchBackend> backends,
                                   std::span<const std::size_t> sample_sizes, const BenchOptions& opts);

/// "samples_T,backend,docs_per_second,accuracy" plus detail columns.
std::string bench_csv(std::span<const BenchResult> results);
std::string bench_table(std::span<const BenchResult> results);

}  // namespace longdep
