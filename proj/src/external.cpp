#include "longdep/external.hpp"

#include <arpa/inet.h>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <thread>

#include "longdep/errors.hpp"

namespace longdep {

using nlohmann::json;

Endpoint Endpoint::parse(std::string_view spec) {
    Endpoint ep;
    if (spec.rfind("tcp://", 0) == 0) {
        std::string_view rest = spec.substr(6);
        const auto colon = rest.rfind(':');
        if (colon == std::string_view::npos || colon == 0 || colon + 1 == rest.size())
            throw ConfigError("endpoint '" + std::string(spec) + "': expected tcp://host:port");
        ep.kind = Kind::tcp;
        ep.host = std::string(rest.substr(0, colon));
        try {
            ep.port = std::stoi(std::string(rest.substr(colon + 1)));
        } catch (const std::exception&) {
            throw ConfigError("endpoint '" + std::string(spec) + "': bad port");
        }
        if (ep.port <= 0 || ep.port > 65535) throw ConfigError("endpoint '" + std::string(spec) + "': bad port");
        return ep;
    }
    if (spec.rfind("exec:", 0) == 0 && spec.size() > 5) {
        ep.kind = Kind::exec;
        ep.command = std::string(spec.substr(5));
        return ep;
    }
    throw ConfigError("endpoint '" + std::string(spec) + "': expected tcp://host:port or exec:<command>");
}

std::string Endpoint::str() const {
    return kind == Kind::tcp ? "tcp://" + host + ":" + std::to_string(port) : "exec:" + command;
}

namespace {

// Buffered line reader over a file descriptor with a poll() timeout.
class FdReader {
public:
    explicit FdReader(int fd) : fd_(fd) {}

    std::string read_line(int timeout_ms) {
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
        for (;;) {
            if (auto nl = buf_.find('\n'); nl != std::string::npos) {
                std::string line = buf_.substr(0, nl);
                buf_.erase(0, nl + 1);
                return line;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now()).count();
            if (left <= 0) throw BackendError("external scorer: timed out waiting for a response");
            pollfd p{fd_, POLLIN, 0};
            const int rc = ::poll(&p, 1, static_cast<int>(left));
            if (rc < 0) {
                if (errno == EINTR) continue;
                throw BackendError(std::string("external scorer: poll failed: ") + std::strerror(errno));
            }
            if (rc == 0) continue;
            char chunk[65536];
            const ssize_t n = ::read(fd_, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN) continue;
                throw BackendError(std::string("external scorer: read failed: ") + std::strerror(errno));
            }
            if (n == 0) throw BackendError("external scorer: connection closed");
            buf_.append(chunk, static_cast<std::size_t>(n));
        }
    }

private:
    int fd_;
    std::string buf_;
};

void write_all(int fd, std::string_view data, bool socket) {
    while (!data.empty()) {
        const ssize_t n = socket ? ::send(fd, data.data(), data.size(), MSG_NOSIGNAL) : ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            throw BackendError(std::string("external scorer: write failed: ") + std::strerror(errno));
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

class SocketChannel final : public LineChannel {
public:
    explicit SocketChannel(const Endpoint& ep) {
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        const std::string port = std::to_string(ep.port);
        if (int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0)
            throw BackendError("external scorer: cannot resolve " + ep.host + ": " + ::gai_strerror(rc));
        int fd = -1;
        for (addrinfo* a = res; a != nullptr; a = a->ai_next) {
            fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
            if (fd < 0) continue;
            if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
            ::close(fd);
            fd = -1;
        }
        ::freeaddrinfo(res);
        if (fd < 0) throw BackendError("external scorer: cannot connect to " + ep.str());
        fd_ = fd;
        reader_ = std::make_unique<FdReader>(fd_);
    }
    ~SocketChannel() override {
        if (fd_ >= 0) ::close(fd_);
    }

    void write_line(std::string_view line) override {
        std::string data(line);
        data.push_back('\n');
        write_all(fd_, data, true);
    }
    std::string read_line(int timeout_ms) override { return reader_->read_line(timeout_ms); }

private:
    int fd_ = -1;
    std::unique_ptr<FdReader> reader_;
};

class ProcessChannel final : public LineChannel {
public:
    explicit ProcessChannel(const Endpoint& ep) {
        int to_child[2], from_child[2];
        if (::pipe(to_child) != 0) throw BackendError("external scorer: pipe failed");
        if (::pipe(from_child) != 0) {
            ::close(to_child[0]);
            ::close(to_child[1]);
            throw BackendError("external scorer: pipe failed");
        }
        pid_ = ::fork();
        if (pid_ < 0) throw BackendError("external scorer: fork failed");
        if (pid_ == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::close(to_child[0]);
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::close(from_child[1]);
            ::execl("/bin/sh", "sh", "-c", ep.command.c_str(), static_cast<char*>(nullptr));
            ::_exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        ::fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
        ::fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
        write_fd_ = to_child[1];
        read_fd_ = from_child[0];
        reader_ = std::make_unique<FdReader>(read_fd_);
    }
    ~ProcessChannel() override {
        if (write_fd_ >= 0) ::close(write_fd_);
        if (read_fd_ >= 0) ::close(read_fd_);
        if (pid_ > 0) {
            // Closing stdin asks the child to exit; escalate if it lingers.
            for (int i = 0; i < 50; ++i) {
                if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
                std::this_thread::sleep_for(std::chrono::milliseconds(10));
            }
            ::kill(pid_, SIGTERM);
            ::waitpid(pid_, nullptr, 0);
        }
    }

    void write_line(std::string_view line) override {
        std::string data(line);
        data.push_back('\n');
        write_all(write_fd_, data, false);
    }
    std::string read_line(int timeout_ms) override { return reader_->read_line(timeout_ms); }

private:
    pid_t pid_ = -1;
    int write_fd_ = -1;
    int read_fd_ = -1;
    std::unique_ptr<FdReader> reader_;
};

}  // namespace

std::unique_ptr<LineChannel> open_channel(const Endpoint& ep) {
    if (ep.kind == Endpoint::Kind::tcp) return std::make_unique<SocketChannel>(ep);
    return std::make_unique<ProcessChannel>(ep);
}

ExternalBackend::ExternalBackend(Endpoint endpoint, ExternalOptions opts)
    : endpoint_(std::move(endpoint)), opts_(std::move(opts)) {
    if (opts_.pool_size == 0) throw ConfigError("external scorer pool size must be >= 1");
    if (opts_.max_attempts < 1) throw ConfigError("external scorer attempts must be >= 1");
    std::signal(SIGPIPE, SIG_IGN);
}

ExternalBackend::~ExternalBackend() = default;

std::string ExternalBackend::identity() const {
    std::string id = "external:" + endpoint_.str();
    if (!opts_.context_separator.empty()) id += ":sep=" + json(opts_.context_separator).dump();
    return id;
}

std::unique_ptr<LineChannel> ExternalBackend::acquire() const {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !idle_.empty() || open_ < opts_.pool_size; });
    if (!idle_.empty()) {
        auto ch = std::move(idle_.back());
        idle_.pop_back();
        return ch;
    }
    ++open_;
    lock.unlock();
    try {
        return open_channel(endpoint_);
    } catch (...) {
        std::lock_guard relock(mu_);
        --open_;
        cv_.notify_one();
        throw;
    }
}

void ExternalBackend::release(std::unique_ptr<LineChannel> ch) const {
    std::lock_guard lock(mu_);
    if (ch)
        idle_.push_back(std::move(ch));
    else
        --open_;
    cv_.notify_one();
}

LogProb ExternalBackend::round_trip(LineChannel& ch, const std::string& req_id, const std::string& line) const {
    ch.write_line(line);
    const std::string reply = ch.read_line(opts_.timeout_ms);
    json j = json::parse(reply, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw BackendError("external scorer: malformed response line");
    if (j.value("req_id", "") != req_id) throw BackendError("external scorer: response req_id mismatch");
    if (auto err = j.find("error"); err != j.end())
        throw ScoringError("external scorer reported: " + (err->is_string() ? err->get<std::string>() : err->dump()));
    if (!j.contains("logprob_sum") || !j.contains("token_count") || !j["logprob_sum"].is_number() ||
        !j["token_count"].is_number_integer())
        throw BackendError("external scorer: response lacks logprob_sum/token_count");
    return LogProb{j["logprob_sum"].get<double>(), j["token_count"].get<std::size_t>()};
}

LogProb ExternalBackend::score(SegmentRef target, std::optional<SegmentRef> context) const {
    if (target.text.empty()) throw ConfigError("external scorer needs segment text; build grids with a tokenizer");
    json req;
    const std::string req_id = "r" + std::to_string(next_req_.fetch_add(1));
    req["req_id"] = req_id;
    req["target"] = target.text;
    if (context && !context->tokens.empty())
        req["context"] = std::string(context->text) + opts_.context_separator;
    else
        req["context"] = nullptr;
    const std::string line = req.dump();

    std::string last_error;
    for (int attempt = 0; attempt < opts_.max_attempts; ++attempt) {
        std::unique_ptr<LineChannel> ch;
        try {
            ch = acquire();
            LogProb lp = round_trip(*ch, req_id, line);
            release(std::move(ch));
            return lp;
        } catch (const BackendError& e) {
            last_error = e.what();
            if (ch) release(nullptr);  // drop the broken connection
        } catch (...) {
            if (ch) release(std::move(ch));
            throw;
        }
    }
    throw BackendError(last_error + " (after " + std::to_string(opts_.max_attempts) + " attempts)");
}

void ExternalBackend::check_available() const {
    auto ch = acquire();
    release(std::move(ch));
}

NGramProtocolHandler::NGramProtocolHandler(std::shared_ptr<const NGramModel> model) : model_(std::move(model)) {
    if (!model_) throw ConfigError("protocol handler needs a model");
    auto vocab = std::make_shared<Vocabulary>(model_->vocab());
    vocab->freeze();
    tokenizer_ = std::make_unique<Tokenizer>(TokenizerSpec{TokenizerKind::whitespace}, std::move(vocab));
}

std::string NGramProtocolHandler::handle(std::string_view request_line) const {
    json req = json::parse(request_line, nullptr, false);
    json resp;
    if (req.is_discarded() || !req.is_object()) {
        resp["req_id"] = nullptr;
        resp["error"] = "malformed request";
        return resp.dump();
    }
    resp["req_id"] = req.value("req_id", "");
    auto target = req.find("target");
    if (target == req.end() || !target->is_string()) {
        resp["error"] = "missing target";
        return resp.dump();
    }
    const auto t = tokenizer_->encode(target->get<std::string>());
    if (t.ids.empty()) {
        resp["error"] = "empty target";
        return resp.dump();
    }
    std::vector<TokenId> ctx;
    if (auto c = req.find("context"); c != req.end() && c->is_string()) ctx = tokenizer_->encode(c->get<std::string>()).ids;
    const LogProb lp = model_->score(t.ids, ctx);
    resp["logprob_sum"] = lp.logprob_sum;
    resp["token_count"] = lp.token_count;
    return resp.dump();
}

}  // namespace longdep
