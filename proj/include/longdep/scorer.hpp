#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "longdep/corpus.hpp"

namespace longdep {

struct BackendCapabilities {
    std::size_t max_context_tokens = 0;
    bool deterministic = true;
};

/// Summed natural-log probability over the target tokens. Backends report
/// this pair rather than a perplexity so the exp/normalize step lives in one place.
struct LogProb {
    double logprob_sum = 0.0;
    std::size_t token_count = 0;
};

/// Language-model scorer. Implementations must be callable concurrently.
class PerplexityBackend {
public:
    virtual ~PerplexityBackend() = default;

    virtual BackendCapabilities capabilities() const = 0;

    /// Stable description of the backend and its parameters; stamped into config hashes.
    virtual std::string identity() const = 0;

    /// Scores `target`, optionally conditioned on `context`. Context tokens
    /// only extend the conditioning history and contribute no loss terms.
    virtual LogProb score(SegmentRef target, std::optional<SegmentRef> context) const = 0;

    /// Throws BackendError when the backend cannot serve requests. Called once before a run.
    virtual void check_available() const {}

    std::uint64_t unconditional_calls() const noexcept { return uncond_calls_.load(); }
    std::uint64_t conditional_calls() const noexcept { return cond_calls_.load(); }
    std::uint64_t total_calls() const noexcept { return unconditional_calls() + conditional_calls(); }
    void reset_counters() noexcept {
        uncond_calls_ = 0;
        cond_calls_ = 0;
    }

private:
    friend double ppl(const PerplexityBackend&, SegmentRef);
    friend double ppl_given(const PerplexityBackend&, SegmentRef, SegmentRef);

    mutable std::atomic<std::uint64_t> uncond_calls_{0};
    mutable std::atomic<std::uint64_t> cond_calls_{0};
};

/// exp(-logprob_sum / token_count); throws ScoringError on a non-finite or
/// non-positive result.
double perplexity_from_logprob(const LogProb& lp);

/// Unconditional per-token perplexity of `target`.
double ppl(const PerplexityBackend& backend, SegmentRef target);

/// Perplexity of `target` with `context` prepended to its history. An empty
/// context takes exactly the unconditional path.
double ppl_given(const PerplexityBackend& backend, SegmentRef target, SegmentRef context);

struct PplCacheEntry {
    std::string doc_id;
    std::size_t segment_index = 0;
    double unconditional_ppl = 0.0;
    std::vector<TokenId> tokens;
};

/// Unconditional-perplexity cache keyed by segment content (not by doc id),
/// sharded for concurrent use. Values are deterministic, so concurrent
/// inserts of the same key are benign (last writer wins).
class PplCache {
public:
    std::optional<double> find(const PerplexityBackend& backend, std::span<const TokenId> tokens) const;
    void insert(const PerplexityBackend& backend, std::span<const TokenId> tokens, PplCacheEntry entry);

    std::size_t size() const;
    std::uint64_t hits() const noexcept { return hits_.load(); }
    std::uint64_t misses() const noexcept { return misses_.load(); }
    void clear();

private:
    static constexpr std::size_t kShards = 16;
    static std::uint64_t key(const PerplexityBackend& backend, std::span<const TokenId> tokens);

    struct Shard {
        mutable std::mutex mu;
        std::unordered_multimap<std::uint64_t, PplCacheEntry> map;
    };
    std::array<Shard, kShards> shards_;
    mutable std::atomic<std::uint64_t> hits_{0};
    mutable std::atomic<std::uint64_t> misses_{0};
};

/// PPL(c_i) for every segment of `grid`, one backend call per segment not
/// already cached. A BackendError is rethrown with the segment index attached.
std::vector<double> cached_unconditional(const PerplexityBackend& backend, const SegmentGrid& grid, PplCache& cache);

}  // namespace longdep
