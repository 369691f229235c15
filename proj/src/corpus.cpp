#include "longdep/corpus.hpp"

#include <algorithm>
#include <json.hpp>
#include <sstream>

#include "longdep/errors.hpp"
#include "longdep/hash.hpp"

namespace longdep {

namespace fs = std::filesystem;
using nlohmann::json;

SegmentGrid::SegmentGrid(std::string doc_id, std::string source, std::size_t segment_len,
                         std::vector<TokenId> kept_tokens, std::vector<std::string> texts,
                         std::size_t original_len)
    : doc_id_(std::move(doc_id)),
      source_(std::move(source)),
      segment_len_(segment_len),
      tokens_(std::move(kept_tokens)),
      texts_(std::move(texts)),
      original_len_(original_len) {
    if (segment_len_ == 0 || tokens_.size() % segment_len_ != 0)
        throw ConfigError("segment grid: token count is not a multiple of the segment length");
    if (!texts_.empty() && texts_.size() != size())
        throw ConfigError("segment grid: text count does not match segment count");
    Fnv1a h;
    h.update(std::span<const TokenId>(tokens_));
    std::uint64_t len = segment_len_;
    h.update(&len, sizeof len);
    content_hash_ = h.digest();
}

std::span<const TokenId> SegmentGrid::tokens(std::size_t index) const {
    return std::span<const TokenId>(tokens_).subspan(index * segment_len_, segment_len_);
}

SegmentRef SegmentGrid::segment(std::size_t index) const {
    return SegmentRef{tokens(index), texts_.empty() ? std::string_view{} : std::string_view(texts_[index])};
}

SegmentGrid segment(const Document& doc, std::size_t segment_len, std::size_t max_tokens,
                    const Tokenizer* tokenizer) {
    if (segment_len == 0) throw ConfigError("segment length must be >= 1");
    if (max_tokens < 2 * segment_len)
        throw ConfigError("truncation length M must be >= 2 * segment length L");
    const std::size_t kept = std::min(doc.tokens.size(), max_tokens);
    const std::size_t n = kept / segment_len;
    if (n < 2) throw DocumentTooShort(doc.id, doc.tokens.size(), n);

    std::vector<TokenId> tokens(doc.tokens.begin(), doc.tokens.begin() + static_cast<std::ptrdiff_t>(n * segment_len));
    std::vector<std::string> texts;
    if (tokenizer != nullptr) {
        texts.reserve(n);
        for (std::size_t s = 0; s < n; ++s) {
            std::span<const TokenId> seg(tokens.data() + s * segment_len, segment_len);
            texts.push_back(tokenizer->decode(seg, doc.joined_by_space));
        }
    }
    return SegmentGrid(doc.id, doc.source, segment_len, std::move(tokens), std::move(texts), doc.tokens.size());
}

InputFormat input_format_from_string(std::string_view s) {
    if (s == "jsonl") return InputFormat::jsonl;
    if (s == "plain-dir" || s == "plain_dir" || s == "dir") return InputFormat::plain_dir;
    throw ConfigError("unknown input format '" + std::string(s) + "' (expected jsonl|plain-dir)");
}

DocumentReader::DocumentReader(fs::path path, InputFormat format, std::shared_ptr<const Tokenizer> tokenizer)
    : path_(std::move(path)), format_(format), tokenizer_(std::move(tokenizer)) {
    std::error_code ec;
    if (!fs::exists(path_, ec)) throw IngestError("input path does not exist: " + path_.string());
    if (format_ == InputFormat::jsonl) {
        if (fs::is_directory(path_, ec)) throw IngestError("expected a JSONL file, got a directory: " + path_.string());
        in_.open(path_);
        if (!in_) throw IngestError("cannot open input: " + path_.string());
        default_source_ = path_.stem().string();
    } else {
        if (!fs::is_directory(path_, ec)) throw IngestError("expected a directory: " + path_.string());
        for (auto it = fs::recursive_directory_iterator(path_, ec); it != fs::recursive_directory_iterator();
             it.increment(ec)) {
            if (ec) throw IngestError("cannot walk directory " + path_.string() + ": " + ec.message());
            if (it->is_regular_file()) files_.push_back(it->path());
        }
        if (ec) throw IngestError("cannot walk directory " + path_.string() + ": " + ec.message());
        std::sort(files_.begin(), files_.end());
        default_source_ = path_.filename().empty() ? path_.parent_path().filename().string()
                                                   : path_.filename().string();
    }
}

void DocumentReader::skip(std::string why) {
    ++skipped_;
    diagnostics_.push_back(std::move(why));
}

void DocumentReader::finish(Document& doc) {
    if (tokenizer_) {
        auto tok = tokenizer_->encode(doc.text);
        doc.tokens = std::move(tok.ids);
        doc.joined_by_space = tok.joined_by_space;
    }
}

std::optional<Document> DocumentReader::next() {
    return format_ == InputFormat::jsonl ? next_jsonl() : next_file();
}

std::optional<Document> DocumentReader::next_jsonl() {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_no_;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path_.string() + ":" + std::to_string(line_no_);
        json rec = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (rec.is_discarded() || !rec.is_object()) {
            skip(where + ": malformed JSON");
            continue;
        }
        auto id = rec.find("id");
        auto text = rec.find("text");
        if (id == rec.end() || !id->is_string() || id->get_ref<const std::string&>().empty()) {
            skip(where + ": missing or empty string field 'id'");
            continue;
        }
        if (text == rec.end() || !text->is_string()) {
            skip(where + ": missing string field 'text'");
            continue;
        }
        Document doc;
        doc.id = id->get<std::string>();
        doc.text = text->get<std::string>();
        if (auto src = rec.find("source"); src != rec.end() && src->is_string() && !src->get_ref<const std::string&>().empty())
            doc.source = src->get<std::string>();
        else
            doc.source = default_source_;
        if (!seen_ids_.insert(doc.id).second) {
            skip(where + ": duplicate id '" + doc.id + "'");
            continue;
        }
        finish(doc);
        return doc;
    }
    return std::nullopt;
}

std::optional<Document> DocumentReader::next_file() {
    while (file_pos_ < files_.size()) {
        const fs::path& p = files_[file_pos_++];
        std::ifstream f(p, std::ios::binary);
        if (!f) {
            skip(p.string() + ": unreadable");
            continue;
        }
        std::ostringstream ss;
        ss << f.rdbuf();
        Document doc;
        fs::path rel = fs::relative(p, path_);
        doc.id = rel.generic_string();
        auto first = rel.begin();
        doc.source = std::next(first) != rel.end() ? first->string() : default_source_;
        doc.text = std::move(ss).str();
        seen_ids_.insert(doc.id);
        finish(doc);
        return doc;
    }
    return std::nullopt;
}

std::vector<Document> read_all(DocumentReader& reader) {
    std::vector<Document> docs;
    while (auto d = reader.next()) docs.push_back(std::move(*d));
    return docs;
}

}  // namespace longdep
