#pragma once

#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "longdep/ngram.hpp"
#include "longdep/scorer.hpp"
#include "longdep/tokenizer.hpp"

namespace longdep {

/// Where the external scorer lives:
///   tcp://host:port  - newline-delimited JSON over a TCP stream
///   exec:<command>   - spawn `command` via /bin/sh and talk over its stdin/stdout
struct Endpoint {
    enum class Kind { tcp, exec };
    Kind kind = Kind::tcp;
    std::string host;
    int port = 0;
    std::string command;

    static Endpoint parse(std::string_view spec);
    std::string str() const;
};

/// Environment variable consulted for the external scorer endpoint.
inline constexpr const char* kScorerEndpointEnv = "LONGDEP_SCORER_ENDPOINT";

struct ExternalOptions {
    std::size_t pool_size = 4;
    int max_attempts = 3;
    int timeout_ms = 60000;
    std::size_t max_context_tokens = 32768;
    std::string context_separator;  // appended to the context text; empty = plain concatenation
};

/// One bidirectional line-oriented connection (socket or child-process pipes).
class LineChannel {
public:
    virtual ~LineChannel() = default;
    virtual void write_line(std::string_view line) = 0;
    /// Throws BackendError on EOF, error or timeout.
    virtual std::string read_line(int timeout_ms) = 0;
};

std::unique_ptr<LineChannel> open_channel(const Endpoint& ep);

/// Client for the external scorer protocol:
///   request:  {"req_id": str, "target": str, "context": str|null}
///   response: {"req_id": str, "logprob_sum": float, "token_count": int}
///          or {"req_id": str, "error": str}
/// Segment text comes from SegmentRef::text, so grids must be built with a tokenizer.
class ExternalBackend final : public PerplexityBackend {
public:
    explicit ExternalBackend(Endpoint endpoint, ExternalOptions opts = {});
    ~ExternalBackend() override;

    BackendCapabilities capabilities() const override { return {opts_.max_context_tokens, false}; }
    std::string identity() const override;
    LogProb score(SegmentRef target, std::optional<SegmentRef> context) const override;
    void check_available() const override;

private:
    std::unique_ptr<LineChannel> acquire() const;
    void release(std::unique_ptr<LineChannel> ch) const;
    LogProb round_trip(LineChannel& ch, const std::string& req_id, const std::string& line) const;

    Endpoint endpoint_;
    ExternalOptions opts_;
    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    mutable std::vector<std::unique_ptr<LineChannel>> idle_;
    mutable std::size_t open_ = 0;
    mutable std::atomic<std::uint64_t> next_req_{1};
};

/// Server half of the protocol backed by an n-gram model; re-tokenizes the
/// request text with the model's vocabulary. Used by the stdio reference
/// scorer and by tests.
class NGramProtocolHandler {
public:
    explicit NGramProtocolHandler(std::shared_ptr<const NGramModel> model);

    /// Handles one request line and returns the response line (no newline).
    std::string handle(std::string_view request_line) const;

private:
    std::shared_ptr<const NGramModel> model_;
    std::unique_ptr<Tokenizer> tokenizer_;
};

}  // namespace longdep
