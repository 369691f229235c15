#pragma once

#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace longdep {

using TokenId = std::uint32_t;

/// Append-only string <-> id map. Ids are assigned in first-seen order, so a
/// single-threaded ingestion run yields a deterministic numbering.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> seed);

    Vocabulary(const Vocabulary&) = delete;
    Vocabulary& operator=(const Vocabulary&) = delete;

    /// Returns the id of `token`, interning it unless the vocabulary is frozen.
    /// A frozen vocabulary maps unseen strings to unknown_id().
    TokenId intern(std::string_view token);

    /// Id lookup without interning; nullopt-like sentinel is unknown_id().
    TokenId find(std::string_view token) const;

    std::string token(TokenId id) const;
    std::size_t size() const;

    void freeze();
    bool frozen() const;

    /// Reserved id for out-of-vocabulary tokens once frozen: equals the size at freeze time.
    TokenId unknown_id() const;

    std::vector<std::string> snapshot() const;

private:
    mutable std::shared_mutex mu_;
    std::vector<std::string> strings_;
    std::unordered_map<std::string, TokenId> ids_;
    bool frozen_ = false;
};

enum class TokenizerKind { whitespace, byte };

std::string_view to_string(TokenizerKind kind);
TokenizerKind tokenizer_kind_from_string(std::string_view s);

struct TokenizerSpec {
    TokenizerKind kind = TokenizerKind::whitespace;
};

/// Result of tokenizing one text: ids plus how to glue them back into text.
struct Tokenized {
    std::vector<TokenId> ids;
    bool joined_by_space = true;
};

/// Whitespace splitting with a byte-level fallback for texts that contain no
/// whitespace at all (code blobs, CJK). The byte kind always splits into bytes.
class Tokenizer {
public:
    Tokenizer(TokenizerSpec spec, std::shared_ptr<Vocabulary> vocab);

    Tokenized encode(std::string_view text) const;
    std::string decode(std::span<const TokenId> ids, bool joined_by_space) const;

    const TokenizerSpec& spec() const noexcept { return spec_; }
    const std::shared_ptr<Vocabulary>& vocabulary() const noexcept { return vocab_; }

private:
    TokenizerSpec spec_;
    std::shared_ptr<Vocabulary> vocab_;
};

}  // namespace longdep
