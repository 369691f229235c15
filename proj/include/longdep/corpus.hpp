#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "longdep/tokenizer.hpp"

namespace longdep {

struct Document {
    std::string id;
    std::string source;
    std::string text;
    std::vector<TokenId> tokens;
    bool joined_by_space = true;
};

/// Non-owning view of one segment: token ids plus the decoded text that
/// text-level backends send over the wire. `text` may be empty when the grid
/// was built without a tokenizer.
struct SegmentRef {
    std::span<const TokenId> tokens;
    std::string_view text;
};

/// A document cut into N >= 2 contiguous segments of exactly L tokens each.
/// Immutable after construction.
class SegmentGrid {
public:
    SegmentGrid(std::string doc_id, std::string source, std::size_t segment_len,
                std::vector<TokenId> kept_tokens, std::vector<std::string> texts,
                std::size_t original_len);

    const std::string& doc_id() const noexcept { return doc_id_; }
    const std::string& source() const noexcept { return source_; }
    std::size_t segment_len() const noexcept { return segment_len_; }
    std::size_t size() const noexcept { return tokens_.size() / segment_len_; }
    std::size_t original_len() const noexcept { return original_len_; }

    /// Zero-based segment access.
    std::span<const TokenId> tokens(std::size_t index) const;
    SegmentRef segment(std::size_t index) const;

    /// All kept tokens, i.e. the concatenation of every segment.
    std::span<const TokenId> kept_tokens() const noexcept { return tokens_; }

    /// Content hash over the kept tokens.
    std::uint64_t content_hash() const noexcept { return content_hash_; }

private:
    std::string doc_id_;
    std::string source_;
    std::size_t segment_len_;
    std::vector<TokenId> tokens_;
    std::vector<std::string> texts_;
    std::size_t original_len_;
    std::uint64_t content_hash_;
};

/// Truncates to min(len, max_tokens) and keeps floor(kept / segment_len)
/// segments, discarding the trailing remainder. Throws DocumentTooShort when
/// fewer than two segments remain and ConfigError on invalid L/M.
/// When `tokenizer` is given each segment also carries its decoded text.
SegmentGrid segment(const Document& doc, std::size_t segment_len, std::size_t max_tokens,
                    const Tokenizer* tokenizer = nullptr);

enum class InputFormat { jsonl, plain_dir };

InputFormat input_format_from_string(std::string_view s);

/// Streaming reader over a JSONL file or a directory of plain-text files.
/// Malformed records are counted and skipped; an unreadable path throws
/// IngestError from the constructor.
class DocumentReader {
public:
    DocumentReader(std::filesystem::path path, InputFormat format,
                   std::shared_ptr<const Tokenizer> tokenizer = nullptr);

    std::optional<Document> next();

    std::size_t skipped() const noexcept { return skipped_; }
    std::size_t line_number() const noexcept { return line_no_; }
    const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

private:
    std::optional<Document> next_jsonl();
    std::optional<Document> next_file();
    void finish(Document& doc);
    void skip(std::string why);

    std::filesystem::path path_;
    InputFormat format_;
    std::shared_ptr<const Tokenizer> tokenizer_;
    std::ifstream in_;
    std::vector<std::filesystem::path> files_;
    std::size_t file_pos_ = 0;
    std::size_t line_no_ = 0;
    std::size_t skipped_ = 0;
    std::string default_source_;
    std::unordered_set<std::string> seen_ids_;
    std::vector<std::string> diagnostics_;
};

/// Drains a reader.
std::vector<Document> read_all(DocumentReader& reader);

}  // namespace longdep
