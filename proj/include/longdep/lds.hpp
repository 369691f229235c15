#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "longdep/corpus.hpp"
#include "longdep/scorer.hpp"

namespace longdep {

enum class ScoreMode { exact, sampled };
enum class DspVariant { multiplicative, additive, none };

std::string_view to_string(ScoreMode m);
std::string_view to_string(DspVariant v);
ScoreMode score_mode_from_string(std::string_view s);
DspVariant dsp_variant_from_string(std::string_view s);

struct LdsConfig {
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;  // additive variant only
    double tau = 0.05;
    ScoreMode mode = ScoreMode::sampled;
    std::size_t sample_size = 5000;  // T
    std::uint64_t seed = 0;
    DspVariant dsp_variant = DspVariant::multiplicative;

    /// Throws ConfigError when a field is out of range.
    void validate() const;
};

/// One scored segment pair. Indices are 1-based segment numbers with j < i;
/// i is the target segment and j the context segment.
struct PairScore {
    std::size_t i = 0;
    std::size_t j = 0;
    double delta_ppl = 0.0;
    double dst = 0.0;
    double ddi = 0.0;
    int indicator = 0;
    double lds_pair = 0.0;
};

struct ScoreReport {
    std::string doc_id;
    std::string source;
    double lds = 0.0;
    ScoreMode mode = ScoreMode::exact;
    std::size_t n_segments = 0;
    std::size_t pairs_evaluated = 0;
    std::vector<std::pair<std::size_t, double>> dsp_per_target;  // (i, DSP_i), ascending i
    LdsConfig config;
    std::vector<PairScore> pairs;  // filled when requested; empty otherwise
};

/// Relative perplexity reduction (ppl_i - ppl_i_given_j) / ppl_i. May be negative.
double dst(double ppl_i, double ppl_i_given_j);

/// Normalized distance (i - j) / (N - 1), 1-based, 1 <= j < i <= N.
double ddi(std::size_t i, std::size_t j, std::size_t n_segments);

/// 1 - H(softmax(deltas)) / log(m) over one target's perplexity reductions.
/// The softmax is max-shifted, so the result is shift invariant. A single-entry
/// row is the uniform distribution over one candidate and yields 0.
double dsp(std::span<const double> delta_ppls);

/// Combines one pair's scores under the configured DSP variant.
double lds_pair(const PairScore& pair, double dsp_i, const LdsConfig& cfg);

/// Distinct (x, y) pairs with 1 <= x < y <= N, sorted by (y, x): target-major,
/// which is also the accumulation order used by the exact sum.
struct SampledPairSet {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (x = context j, y = target i)
    std::uint64_t seed = 0;
};

std::size_t pair_count(std::size_t n_segments);

/// Uniform sample without replacement of min(T, N(N-1)/2) pairs; deterministic in seed.
SampledPairSet sample_pairs(std::size_t n_segments, std::size_t sample_size, std::uint64_t seed);

struct ScoreOptions {
    bool keep_pairs = false;
    int threads = 0;  // 0: OpenMP default; nested regions run serially
};

/// Accumulated LDS over all N(N-1)/2 pairs.
ScoreReport lds_exact(const SegmentGrid& grid, const PerplexityBackend& backend, const LdsConfig& cfg,
                      PplCache& cache, const ScoreOptions& opts = {});

/// LDS over a sampled pair set; DSP rows are built from the sampled pairs sharing a target.
ScoreReport lds_sampled(const SegmentGrid& grid, const PerplexityBackend& backend, const LdsConfig& cfg,
                        PplCache& cache, const ScoreOptions& opts = {});

/// Dispatches on cfg.mode.
ScoreReport score_document(const SegmentGrid& grid, const PerplexityBackend& backend, const LdsConfig& cfg,
                           PplCache& cache, const ScoreOptions& opts = {});

/// Parallel kernel: conditional perplexity for each (j, i) pair, in input order.
std::vector<double> conditional_ppls(const SegmentGrid& grid, const PerplexityBackend& backend,
                                     std::span<const std::pair<std::size_t, std::size_t>> pairs, int threads = 0);

namespace reference {

// Straight-line single-threaded evaluation, kept as the test oracle for the
// parallel path. Does not use the perplexity cache.
ScoreReport lds_exact_serial(const SegmentGrid& grid, const PerplexityBackend& backend, const LdsConfig& cfg);
ScoreReport lds_sampled_serial(const SegmentGrid& grid, const PerplexityBackend& backend, const LdsConfig& cfg);

}  // namespace reference

}  // namespace longdep
