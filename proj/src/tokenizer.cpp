#include "longdep/tokenizer.hpp"

#include <mutex>

#include "longdep/errors.hpp"

namespace longdep {

namespace {

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> seed) {
    for (auto& s : seed) {
        if (ids_.find(s) != ids_.end()) continue;
        ids_.emplace(s, static_cast<TokenId>(strings_.size()));
        strings_.push_back(std::move(s));
    }
}

TokenId Vocabulary::intern(std::string_view token) {
    {
        std::shared_lock lock(mu_);
        if (auto it = ids_.find(std::string(token)); it != ids_.end()) return it->second;
        if (frozen_) return static_cast<TokenId>(strings_.size());
    }
    std::unique_lock lock(mu_);
    auto [it, inserted] = ids_.try_emplace(std::string(token), static_cast<TokenId>(strings_.size()));
    if (inserted) strings_.emplace_back(token);
    return it->second;
}

TokenId Vocabulary::find(std::string_view token) const {
    std::shared_lock lock(mu_);
    if (auto it = ids_.find(std::string(token)); it != ids_.end()) return it->second;
    return static_cast<TokenId>(strings_.size());
}

std::string Vocabulary::token(TokenId id) const {
    std::shared_lock lock(mu_);
    if (id < strings_.size()) return strings_[id];
    return "<unk>";
}

std::size_t Vocabulary::size() const {
    std::shared_lock lock(mu_);
    return strings_.size();
}

void Vocabulary::freeze() {
    std::unique_lock lock(mu_);
    frozen_ = true;
}

bool Vocabulary::frozen() const {
    std::shared_lock lock(mu_);
    return frozen_;
}

TokenId Vocabulary::unknown_id() const {
    std::shared_lock lock(mu_);
    return static_cast<TokenId>(strings_.size());
}

std::vector<std::string> Vocabulary::snapshot() const {
    std::shared_lock lock(mu_);
    return strings_;
}

std::string_view to_string(TokenizerKind kind) {
    return kind == TokenizerKind::byte ? "byte" : "whitespace";
}

TokenizerKind tokenizer_kind_from_string(std::string_view s) {
    if (s == "whitespace") return TokenizerKind::whitespace;
    if (s == "byte") return TokenizerKind::byte;
    throw ConfigError("unknown tokenizer kind '" + std::string(s) + "' (expected whitespace|byte)");
}

Tokenizer::Tokenizer(TokenizerSpec spec, std::shared_ptr<Vocabulary> vocab)
    : spec_(spec), vocab_(std::move(vocab)) {
    if (!vocab_) vocab_ = std::make_shared<Vocabulary>();
}

Tokenized Tokenizer::encode(std::string_view text) const {
    Tokenized out;
    bool has_space = false;
    for (unsigned char c : text) {
        if (is_space(c)) {
            has_space = true;
            break;
        }
    }
    if (spec_.kind == TokenizerKind::byte || !has_space) {
        out.joined_by_space = false;
        out.ids.reserve(text.size());
        for (char c : text) out.ids.push_back(vocab_->intern(std::string_view(&c, 1)));
        return out;
    }
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) out.ids.push_back(vocab_->intern(text.substr(start, i - start)));
    }
    return out;
}

std::string Tokenizer::decode(std::span<const TokenId> ids, bool joined_by_space) const {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (joined_by_space && i > 0) out.push_back(' ');
        out += vocab_->token(ids[i]);
    }
    return out;
}

}  // namespace longdep
