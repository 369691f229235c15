#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "longdep/corpus.hpp"
#include "longdep/lds.hpp"
#include "longdep/scorer.hpp"

namespace longdep {

struct SegmentationConfig {
    std::size_t segment_len = 128;  // L
    std::size_t max_tokens = 32768; // M, counted in pipeline-tokenizer tokens
    TokenizerKind tokenizer = TokenizerKind::whitespace;
};

/// Canonical JSON of everything that determines a score; its hash stamps every artifact.
nlohmann::ordered_json scoring_config_json(const LdsConfig& lds, const SegmentationConfig& seg,
                                           std::string_view backend_identity);
std::string config_hash(const nlohmann::ordered_json& canonical);

enum class DocStatus { scored, excluded, failed };
std::string_view to_string(DocStatus s);
DocStatus doc_status_from_string(std::string_view s);

/// Outcome of one input document, emitted in input order.
struct DocOutcome {
    std::size_t index = 0;
    std::string doc_id;
    std::string source;
    DocStatus status = DocStatus::scored;
    std::string reason;
    std::optional<ScoreReport> report;
};

struct ScoreCounters {
    std::size_t read = 0;
    std::size_t scored = 0;
    std::size_t excluded = 0;
    std::size_t failed = 0;
    std::uint64_t pairs_evaluated = 0;
    double wall_seconds = 0.0;
    bool cancelled = false;

    double docs_per_second() const { return wall_seconds > 0 ? static_cast<double>(scored) / wall_seconds : 0.0; }
};

struct ScoreCorpusOptions {
    LdsConfig lds;
    SegmentationConfig segmentation;
    int workers = 1;
    int pair_threads = 1;  // OpenMP threads per document for the pair kernel
    bool keep_pairs = false;
    const Tokenizer* tokenizer = nullptr;     // decodes segment text for text-level backends
    const std::atomic<bool>* cancel = nullptr;  // stop after in-flight documents drain
};

using DocumentSource = std::function<std::optional<Document>()>;
using OutcomeSink = std::function<void(DocOutcome&&)>;

/// Scores every document from `source` on a pool of `workers` threads and
/// hands outcomes to `sink` in input order. Per-document scorer failures are
/// reported as failed outcomes; the run continues. Results do not depend on
/// the worker count. Throws BackendError only if the backend is unreachable
/// before the first document.
ScoreCounters score_corpus(const DocumentSource& source, const PerplexityBackend& backend,
                           const ScoreCorpusOptions& opts, const OutcomeSink& sink, PplCache* cache = nullptr);

/// Convenience overload collecting outcomes.
std::vector<DocOutcome> score_corpus(std::span<const Document> docs, const PerplexityBackend& backend,
                                     const ScoreCorpusOptions& opts, ScoreCounters* counters = nullptr);

// ---- report files ----------------------------------------------------------

/// Flat per-document record as stored in reports.jsonl.
struct ReportRecord {
    std::string doc_id;
    std::string source;
    DocStatus status = DocStatus::scored;
    std::string reason;
    double lds = 0.0;
    std::string mode;
    std::size_t n_segments = 0;
    std::size_t pairs_evaluated = 0;
    std::string config_hash;
};

ReportRecord to_record(const DocOutcome& o, std::string_view config_hash);
nlohmann::ordered_json to_json(const ReportRecord& r);
ReportRecord record_from_json(const nlohmann::json& j);

/// Sidecar line with the full pair list of one scored document.
nlohmann::ordered_json pairs_sidecar_json(const ScoreReport& r, std::string_view config_hash);

/// Reads reports.jsonl; throws ConfigError on an unreadable file or malformed line.
std::vector<ReportRecord> read_reports(const std::filesystem::path& path);

// ---- selection ---------------------------------------------------------------

enum class SelectionStrategy { prolong, random, full };
std::string_view to_string(SelectionStrategy s);
SelectionStrategy selection_strategy_from_string(std::string_view s);

struct SelectionOptions {
    SelectionStrategy strategy = SelectionStrategy::prolong;
    double fraction = 0.5;
    bool per_source = true;
    std::uint64_t seed = 0;
    std::vector<std::string> passthrough_sources;  // always retained in full
};

struct RankedDoc {
    std::string doc_id;
    double lds = 0.0;
    std::size_t rank = 0;  // 1-based within its group, by LDS descending then doc_id
    bool retained = false;
};

struct ArmStats {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
};

struct SourceSelection {
    std::string source;  // "*" under global ranking
    double retention_fraction = 0.0;
    bool passthrough = false;
    std::vector<RankedDoc> documents;
    ArmStats full;
    ArmStats retained;
    // The three selection arms evaluated on the same group.
    ArmStats random_arm;
    ArmStats prolong_arm;
    double random_mean_stderr = 0.0;
};

struct SelectionManifest {
    std::string run_id;
    std::string config_hash;
    SelectionOptions options;
    bool complete = true;
    std::vector<SourceSelection> sources;
    std::vector<ReportRecord> excluded;  // excluded or failed records
    ArmStats overall_full;
    ArmStats overall_retained;
    ArmStats overall_random;
    ArmStats overall_prolong;

    std::vector<std::string> retained_ids() const;
    nlohmann::ordered_json to_json() const;
};

/// Ranks scored documents (per source by default) and retains the top
/// ceil(fraction * count) of each group, ties broken by doc_id.
/// Throws ConfigError for an empty input, a fraction outside (0, 1] or mixed config hashes.
SelectionManifest rank_and_select(std::span<const ReportRecord> reports, double fraction, bool per_source = true,
                                  const SelectionOptions& base = {});

/// Uniform random retention of ceil(fraction * count) per group, deterministic in seed.
SelectionManifest random_baseline(std::span<const ReportRecord> reports, double fraction, std::uint64_t seed,
                                  const SelectionOptions& base = {});

/// Strategy dispatch; `full` forces fraction 1.0.
SelectionManifest select(std::span<const ReportRecord> reports, const SelectionOptions& opts);

/// Indices of a uniform k-subset of [0, n), deterministic in seed, ascending.
std::vector<std::size_t> seeded_subset(std::size_t n, std::size_t k, std::uint64_t seed);

}  // namespace longdep
