#include "longdep/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "longdep/errors.hpp"
#include "longdep/hash.hpp"

namespace longdep {

namespace {

void check_target(const PerplexityBackend& backend, SegmentRef target, std::size_t context_len) {
    if (target.tokens.empty()) throw std::invalid_argument("perplexity target must be non-empty");
    const auto cap = backend.capabilities();
    if (cap.max_context_tokens != 0 && target.tokens.size() + context_len > cap.max_context_tokens)
        throw std::invalid_argument("target + context exceed the backend's maximum context (" +
                                    std::to_string(cap.max_context_tokens) + " tokens)");
}

}  // namespace

double perplexity_from_logprob(const LogProb& lp) {
    if (lp.token_count == 0) throw ScoringError("backend reported zero scored tokens");
    const double value = std::exp(-lp.logprob_sum / static_cast<double>(lp.token_count));
    if (!std::isfinite(value) || !(value > 0.0))
        throw ScoringError("non-finite perplexity (logprob_sum=" + std::to_string(lp.logprob_sum) +
                           ", token_count=" + std::to_string(lp.token_count) + ")");
    return value;
}

double ppl(const PerplexityBackend& backend, SegmentRef target) {
    check_target(backend, target, 0);
    backend.uncond_calls_.fetch_add(1, std::memory_order_relaxed);
    return perplexity_from_logprob(backend.score(target, std::nullopt));
}

double ppl_given(const PerplexityBackend& backend, SegmentRef target, SegmentRef context) {
    if (context.tokens.empty()) return ppl(backend, target);
    check_target(backend, target, context.tokens.size());
    backend.cond_calls_.fetch_add(1, std::memory_order_relaxed);
    return perplexity_from_logprob(backend.score(target, context));
}

std::uint64_t PplCache::key(const PerplexityBackend& backend, std::span<const TokenId> tokens) {
    Fnv1a h;
    h.update(backend.identity());
    h.update(tokens);
    return h.digest();
}

std::optional<double> PplCache::find(const PerplexityBackend& backend, std::span<const TokenId> tokens) const {
    const auto k = key(backend, tokens);
    const Shard& shard = shards_[k % kShards];
    std::lock_guard lock(shard.mu);
    auto [lo, hi] = shard.map.equal_range(k);
    for (auto it = lo; it != hi; ++it) {
        if (std::equal(it->second.tokens.begin(), it->second.tokens.end(), tokens.begin(), tokens.end())) {
            hits_.fetch_add(1, std::memory_order_relaxed);
            return it->second.unconditional_ppl;
        }
    }
    misses_.fetch_add(1, std::memory_order_relaxed);
    return std::nullopt;
}

void PplCache::insert(const PerplexityBackend& backend, std::span<const TokenId> tokens, PplCacheEntry entry) {
    const auto k = key(backend, tokens);
    entry.tokens.assign(tokens.begin(), tokens.end());
    Shard& shard = shards_[k % kShards];
    std::lock_guard lock(shard.mu);
    auto [lo, hi] = shard.map.equal_range(k);
    for (auto it = lo; it != hi; ++it) {
        if (it->second.tokens == entry.tokens) {
            it->second = std::move(entry);
            return;
        }
    }
    shard.map.emplace(k, std::move(entry));
}

std::size_t PplCache::size() const {
    std::size_t n = 0;
    for (const auto& s : shards_) {
        std::lock_guard lock(s.mu);
        n += s.map.size();
    }
    return n;
}

void PplCache::clear() {
    for (auto& s : shards_) {
        std::lock_guard lock(s.mu);
        s.map.clear();
    }
    hits_ = 0;
    misses_ = 0;
}

std::vector<double> cached_unconditional(const PerplexityBackend& backend, const SegmentGrid& grid, PplCache& cache) {
    std::vector<double> out(grid.size());
    for (std::size_t s = 0; s < grid.size(); ++s) {
        const auto tokens = grid.tokens(s);
        if (auto hit = cache.find(backend, tokens)) {
            out[s] = *hit;
            continue;
        }
        try {
            out[s] = ppl(backend, grid.segment(s));
        } catch (const BackendError& e) {
            throw BackendError(std::string(e.what()) + " (segment " + std::to_string(s + 1) + " of '" +
                                   grid.doc_id() + "')",
                               static_cast<long>(s + 1));
        }
        cache.insert(backend, tokens, PplCacheEntry{grid.doc_id(), s + 1, out[s], {}});
    }
    return out;
}

}  // namespace longdep
