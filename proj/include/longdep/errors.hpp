#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace longdep {

/// Invalid user configuration or CLI input.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unreadable input or otherwise unrecoverable ingestion failure.
class IngestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A document yields fewer than two segments; it is excluded, not fatal.
class DocumentTooShort : public std::runtime_error {
public:
    DocumentTooShort(std::string doc_id, std::size_t n_tokens, std::size_t n_segments)
        : std::runtime_error("document '" + doc_id + "' too short: " + std::to_string(n_tokens) +
                             " tokens give " + std::to_string(n_segments) + " segment(s), need >= 2"),
          doc_id_(std::move(doc_id)),
          n_tokens_(n_tokens) {}

    const std::string& doc_id() const noexcept { return doc_id_; }
    std::size_t n_tokens() const noexcept { return n_tokens_; }

private:
    std::string doc_id_;
    std::size_t n_tokens_;
};

/// Transport-level scorer failure. Retriable.
class BackendError : public std::runtime_error {
public:
    explicit BackendError(const std::string& what, long segment_index = -1)
        : std::runtime_error(what), segment_index_(segment_index) {}

    long segment_index() const noexcept { return segment_index_; }

private:
    long segment_index_;
};

/// Non-finite or otherwise invalid numeric result; fatal for the document being scored.
class ScoringError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace longdep
