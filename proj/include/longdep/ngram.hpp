#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "longdep/corpus.hpp"
#include "longdep/scorer.hpp"

namespace longdep {

inline constexpr int kMaxNGramOrder = 5;

/// Fixed-width n-gram key; unused trailing slots are zero.
struct NGramKey {
    std::array<TokenId, kMaxNGramOrder> ids{};

    bool operator==(const NGramKey&) const = default;
    auto operator<=>(const NGramKey&) const = default;
};

struct NGramKeyHash {
    std::size_t operator()(const NGramKey& k) const noexcept {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (TokenId id : k.ids) {
            h ^= id + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
            h *= 0xff51afd7ed558ccdULL;
        }
        return static_cast<std::size_t>(h ^ (h >> 33));
    }
};

/// Add-k smoothed n-gram model, optionally interpolated with a bigram cache
/// built from the conditioning history.
///
/// Vocabulary layout: ids [0, observed) are training tokens, id `observed`
/// is the unknown symbol, so the predictive vocabulary has V = observed + 1
/// entries. Id V is a begin-of-sequence marker used only as padding in
/// histories and is never predicted. Any id >= observed maps to unknown.
///
/// With cache weight lambda > 0, the probability of token w after token u is
///   (1 - lambda) * P_ngram(w | h) + lambda * c_hist(u, w) / c_hist(u)
/// whenever u has at least one successor in the history, and P_ngram(w | h)
/// otherwise. The history is the context followed by the already-scored
/// target prefix. Both branches are normalized over the V symbols.
class NGramModel {
public:
    NGramModel() = default;

    int order() const noexcept { return order_; }
    double k() const noexcept { return k_; }
    double cache_weight() const noexcept { return cache_weight_; }
    std::size_t vocab_size() const noexcept { return observed_ + 1; }
    TokenId unknown_id() const noexcept { return static_cast<TokenId>(observed_); }
    TokenId bos_id() const noexcept { return static_cast<TokenId>(observed_ + 1); }
    const std::vector<std::string>& vocab() const noexcept { return vocab_; }
    std::size_t ngram_types() const noexcept { return counts_.size(); }

    TokenId map(TokenId id) const noexcept { return id < observed_ ? id : unknown_id(); }

    /// Add-k conditional P(w | history). `history` holds the preceding
    /// model ids, most recent last; only the last order-1 are used and
    /// missing positions are padded with the BOS marker.
    double ngram_prob(std::span<const TokenId> history, TokenId w) const;

    /// Summed log-probability of `target` with `context` as history.
    LogProb score(std::span<const TokenId> target, std::span<const TokenId> context) const;

    /// Same as score(), reusing precomputed n-gram probabilities for target
    /// positions >= order-1 (those do not depend on the context).
    LogProb score_with(std::span<const TokenId> target, std::span<const TokenId> context,
                       std::span<const double> target_ngram_probs) const;

    /// P_ngram for every target position as if scored without context;
    /// entries below order-1 depend on context and are recomputed by score_with.
    std::vector<double> target_ngram_probs(std::span<const TokenId> target) const;

    void set_cache_weight(double w);

    // Serialization: canonical JSON, n-grams sorted, so equal models give equal bytes.
    std::string to_json() const;
    static NGramModel from_json(std::string_view text);
    void save(const std::filesystem::path& path) const;
    static NGramModel load(const std::filesystem::path& path);

    friend NGramModel train_ngram(std::span<const Document> corpus, int order, double k,
                                  std::vector<std::string> vocab, double cache_weight);

    bool operator==(const NGramModel& o) const {
        return order_ == o.order_ && k_ == o.k_ && cache_weight_ == o.cache_weight_ && observed_ == o.observed_ &&
               vocab_ == o.vocab_ && counts_ == o.counts_;
    }

private:
    NGramKey history_key(std::span<const TokenId> history) const;
    void rebuild_history_counts();

    int order_ = 1;
    double k_ = 0.01;
    double cache_weight_ = 0.0;
    std::size_t observed_ = 0;
    std::vector<std::string> vocab_;
    std::unordered_map<NGramKey, std::uint32_t, NGramKeyHash> counts_;
    std::unordered_map<NGramKey, std::uint64_t, NGramKeyHash> history_counts_;
};

/// Trains an add-k model over the documents' token ids. `vocab` lists the
/// token strings by id; when empty the vocabulary is the id range observed.
/// Throws ConfigError for an empty corpus, order outside [1, 5] or k <= 0.
NGramModel train_ngram(std::span<const Document> corpus, int order, double k,
                       std::vector<std::string> vocab = {}, double cache_weight = 0.0);

/// Built-in backend over an immutable NGramModel.
class NGramBackend final : public PerplexityBackend {
public:
    explicit NGramBackend(std::shared_ptr<const NGramModel> model, std::size_t max_context_tokens = 1u << 20);

    BackendCapabilities capabilities() const override { return {max_context_, true}; }
    std::string identity() const override { return identity_; }
    LogProb score(SegmentRef target, std::optional<SegmentRef> context) const override;

    const NGramModel& model() const noexcept { return *model_; }

private:
    std::shared_ptr<const NGramModel> model_;
    std::size_t max_context_;
    std::string identity_;
    std::uint64_t instance_id_ = 0;
};

}  // namespace longdep
