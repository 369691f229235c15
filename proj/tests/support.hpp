#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "longdep/corpus.hpp"
#include "longdep/errors.hpp"
#include "longdep/scorer.hpp"

namespace longdep::testing {

// Document whose k-th segment (0-based) is L copies of token id `labels[k]`.
inline Document labeled_doc(std::string id, const std::vector<TokenId>& labels, std::size_t L,
                            std::string source = "src") {
    Document d;
    d.id = std::move(id);
    d.source = std::move(source);
    for (TokenId label : labels)
        for (std::size_t t = 0; t < L; ++t) d.tokens.push_back(label);
    return d;
}

inline Document doc_from_tokens(std::string id, std::vector<TokenId> tokens, std::string source = "src") {
    Document d;
    d.id = std::move(id);
    d.source = std::move(source);
    d.tokens = std::move(tokens);
    return d;
}

// Backend with a lookup table keyed by the first token of each segment.
// Unlisted pairs fall back to the unconditional value.
class ScriptedBackend final : public PerplexityBackend {
public:
    std::map<TokenId, double> uncond;
    std::map<std::pair<TokenId, TokenId>, double> cond;  // (target label, context label)
    TokenId poison = static_cast<TokenId>(-1);           // target label that raises BackendError

    BackendCapabilities capabilities() const override { return {1u << 20, true}; }
    std::string identity() const override { return "scripted"; }
    LogProb score(SegmentRef target, std::optional<SegmentRef> context) const override {
        const TokenId t = target.tokens.front();
        if (t == poison) throw BackendError("scripted failure");
        double p = uncond.at(t);
        if (context) {
            auto it = cond.find({t, context->tokens.front()});
            if (it != cond.end()) p = it->second;
        }
        const auto n = target.tokens.size();
        return {-std::log(p) * static_cast<double>(n), n};
    }
};

// Per-process scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("longdep-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& s) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << s;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace longdep::testing
