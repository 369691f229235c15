#include "longdep/ngram.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "longdep/errors.hpp"
#include "longdep/hash.hpp"

namespace longdep {

using nlohmann::json;

namespace {

constexpr std::string_view kFormat = "longdep-ngram";
constexpr int kFormatVersion = 1;

// Open-addressing count table reset in O(1) through generation stamps.
// Holds bigram counts (u, w) and successor totals of u for the history cache.
class CountTable {
public:
    void reset(std::size_t expected) {
        std::size_t cap = 64;
        while (cap < expected * 4) cap <<= 1;
        if (cap > keys_.size()) {
            keys_.assign(cap, 0);
            vals_.assign(cap, 0);
            stamps_.assign(cap, 0);
            gen_ = 0;
        }
        mask_ = keys_.size() - 1;
        if (++gen_ == 0) {
            std::fill(stamps_.begin(), stamps_.end(), 0);
            gen_ = 1;
        }
    }

    std::uint32_t get(std::uint64_t key) const {
        for (std::size_t i = slot(key);; i = (i + 1) & mask_) {
            if (stamps_[i] != gen_) return 0;
            if (keys_[i] == key) return vals_[i];
        }
    }

    void add(std::uint64_t key) {
        for (std::size_t i = slot(key);; i = (i + 1) & mask_) {
            if (stamps_[i] != gen_) {
                stamps_[i] = gen_;
                keys_[i] = key;
                vals_[i] = 1;
                return;
            }
            if (keys_[i] == key) {
                ++vals_[i];
                return;
            }
        }
    }

private:
    std::size_t slot(std::uint64_t key) const {
        key ^= key >> 33;
        key *= 0xff51afd7ed558ccdULL;
        key ^= key >> 33;
        return static_cast<std::size_t>(key) & mask_;
    }

    std::vector<std::uint64_t> keys_;
    std::vector<std::uint32_t> vals_;
    std::vector<std::uint32_t> stamps_;
    std::uint32_t gen_ = 0;
    std::size_t mask_ = 0;
};

std::uint64_t bigram_key(TokenId u, TokenId w) { return (static_cast<std::uint64_t>(u) << 32) | w; }
std::uint64_t successor_key(TokenId u) { return (static_cast<std::uint64_t>(u) << 32) | 0xffffffffULL; }

void add_bigram(CountTable& table, TokenId u, TokenId w) {
    table.add(bigram_key(u, w));
    table.add(successor_key(u));
}

}  // namespace

NGramKey NGramModel::history_key(std::span<const TokenId> history) const {
    NGramKey key;
    const int h = order_ - 1;
    const auto have = static_cast<int>(std::min<std::size_t>(history.size(), static_cast<std::size_t>(h)));
    for (int s = 0; s < h - have; ++s) key.ids[static_cast<std::size_t>(s)] = bos_id();
    for (int s = 0; s < have; ++s)
        key.ids[static_cast<std::size_t>(h - have + s)] = history[history.size() - static_cast<std::size_t>(have - s)];
    return key;
}

double NGramModel::ngram_prob(std::span<const TokenId> history, TokenId w) const {
    NGramKey key = history_key(history);
    std::uint64_t hist_count = 0;
    if (auto it = history_counts_.find(key); it != history_counts_.end()) hist_count = it->second;
    std::uint32_t count = 0;
    if (hist_count > 0) {
        key.ids[static_cast<std::size_t>(order_ - 1)] = map(w);
        if (auto it = counts_.find(key); it != counts_.end()) count = it->second;
    }
    const auto v = static_cast<double>(vocab_size());
    return (static_cast<double>(count) + k_) / (static_cast<double>(hist_count) + k_ * v);
}

std::vector<double> NGramModel::target_ngram_probs(std::span<const TokenId> target) const {
    std::vector<double> probs(target.size());
    std::vector<TokenId> mapped(target.size());
    for (std::size_t t = 0; t < target.size(); ++t) mapped[t] = map(target[t]);
    for (std::size_t t = 0; t < target.size(); ++t)
        probs[t] = ngram_prob(std::span<const TokenId>(mapped).first(t), mapped[t]);
    return probs;
}

LogProb NGramModel::score(std::span<const TokenId> target, std::span<const TokenId> context) const {
    const auto probs = target_ngram_probs(target);
    return score_with(target, context, probs);
}

LogProb NGramModel::score_with(std::span<const TokenId> target, std::span<const TokenId> context,
                               std::span<const double> target_probs) const {
    thread_local CountTable table;
    thread_local std::vector<TokenId> hist;

    const auto h = static_cast<std::size_t>(order_ - 1);
    const bool use_cache = cache_weight_ > 0.0;
    if (use_cache) {
        table.reset(context.size() + target.size() + 1);
        for (std::size_t t = 1; t < context.size(); ++t) add_bigram(table, map(context[t - 1]), map(context[t]));
    }

    double sum = 0.0;
    for (std::size_t t = 0; t < target.size(); ++t) {
        const TokenId w = map(target[t]);
        double p;
        if (t >= h) {
            p = target_probs[t];
        } else {
            // History straddles the context boundary: last h ids of context ++ target[0, t).
            hist.clear();
            const std::size_t from_ctx = std::min(context.size(), h - t);
            for (std::size_t c = context.size() - from_ctx; c < context.size(); ++c) hist.push_back(map(context[c]));
            for (std::size_t c = 0; c < t; ++c) hist.push_back(map(target[c]));
            p = ngram_prob(hist, w);
        }
        if (use_cache) {
            const bool has_prev = t > 0 || !context.empty();
            if (has_prev) {
                const TokenId u = t > 0 ? map(target[t - 1]) : map(context.back());
                const std::uint32_t succ = table.get(successor_key(u));
                if (succ > 0) {
                    const double pc = static_cast<double>(table.get(bigram_key(u, w))) / static_cast<double>(succ);
                    p = (1.0 - cache_weight_) * p + cache_weight_ * pc;
                }
                add_bigram(table, u, w);
            }
        }
        sum += std::log(p);
    }
    return LogProb{sum, target.size()};
}

void NGramModel::set_cache_weight(double w) {
    if (!(w >= 0.0 && w < 1.0)) throw ConfigError("cache weight must be in [0, 1)");
    cache_weight_ = w;
}

void NGramModel::rebuild_history_counts() {
    history_counts_.clear();
    for (const auto& [key, c] : counts_) {
        NGramKey hk = key;
        hk.ids[static_cast<std::size_t>(order_ - 1)] = 0;
        history_counts_[hk] += c;
    }
}

NGramModel train_ngram(std::span<const Document> corpus, int order, double k, std::vector<std::string> vocab,
                       double cache_weight) {
    if (corpus.empty()) throw ConfigError("cannot train an n-gram model on an empty corpus");
    if (order < 1 || order > kMaxNGramOrder)
        throw ConfigError("n-gram order must be in [1, " + std::to_string(kMaxNGramOrder) + "], got " +
                          std::to_string(order));
    if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("add-k constant must be positive and finite");

    NGramModel m;
    m.order_ = order;
    m.k_ = k;
    m.set_cache_weight(cache_weight);

    std::size_t observed = vocab.size();
    std::size_t n_tokens = 0;
    for (const auto& d : corpus) {
        n_tokens += d.tokens.size();
        if (vocab.empty())
            for (TokenId id : d.tokens) observed = std::max<std::size_t>(observed, static_cast<std::size_t>(id) + 1);
    }
    if (n_tokens == 0) throw ConfigError("cannot train an n-gram model on a corpus without tokens");
    m.observed_ = observed;
    m.vocab_ = std::move(vocab);

    const auto h = static_cast<std::size_t>(order - 1);
    std::vector<TokenId> mapped;
    for (const auto& d : corpus) {
        mapped.resize(d.tokens.size());
        for (std::size_t t = 0; t < d.tokens.size(); ++t) mapped[t] = m.map(d.tokens[t]);
        for (std::size_t t = 0; t < mapped.size(); ++t) {
            const std::size_t start = t >= h ? t - h : 0;
            NGramKey key = m.history_key(std::span<const TokenId>(mapped).subspan(start, t - start));
            key.ids[h] = mapped[t];
            ++m.counts_[key];
        }
    }
    m.rebuild_history_counts();
    return m;
}

std::string NGramModel::to_json() const {
    std::vector<std::pair<NGramKey, std::uint32_t>> sorted(counts_.begin(), counts_.end());
    std::sort(sorted.begin(), sorted.end());
    json counts = json::array();
    for (const auto& [key, c] : sorted) {
        json row = json::array();
        for (int s = 0; s < order_; ++s) row.push_back(key.ids[static_cast<std::size_t>(s)]);
        row.push_back(c);
        counts.push_back(std::move(row));
    }
    json j;
    j["format"] = kFormat;
    j["version"] = kFormatVersion;
    j["order"] = order_;
    j["k"] = k_;
    j["cache_weight"] = cache_weight_;
    j["observed_vocab"] = observed_;
    j["vocab"] = vocab_;
    j["counts"] = std::move(counts);
    return j.dump() + "\n";
}

NGramModel NGramModel::from_json(std::string_view text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError("n-gram model: not a JSON object");
    if (j.value("format", "") != kFormat) throw ConfigError("n-gram model: unexpected format tag");
    if (j.value("version", 0) != kFormatVersion)
        throw ConfigError("n-gram model: unsupported version " + std::to_string(j.value("version", 0)));
    NGramModel m;
    try {
        m.order_ = j.at("order").get<int>();
        m.k_ = j.at("k").get<double>();
        m.set_cache_weight(j.at("cache_weight").get<double>());
        m.observed_ = j.at("observed_vocab").get<std::size_t>();
        m.vocab_ = j.at("vocab").get<std::vector<std::string>>();
        if (m.order_ < 1 || m.order_ > kMaxNGramOrder) throw ConfigError("n-gram model: order out of range");
        if (!(m.k_ > 0.0)) throw ConfigError("n-gram model: k must be positive");
        if (!m.vocab_.empty() && m.vocab_.size() != m.observed_)
            throw ConfigError("n-gram model: vocab length disagrees with observed_vocab");
        for (const auto& row : j.at("counts")) {
            if (!row.is_array() || row.size() != static_cast<std::size_t>(m.order_) + 1)
                throw ConfigError("n-gram model: malformed count row");
            NGramKey key;
            for (int s = 0; s < m.order_; ++s) {
                const auto id = row[static_cast<std::size_t>(s)].get<std::uint64_t>();
                if (id > m.observed_ + 1) throw ConfigError("n-gram model: id out of range in count row");
                key.ids[static_cast<std::size_t>(s)] = static_cast<TokenId>(id);
            }
            m.counts_[key] = row[static_cast<std::size_t>(m.order_)].get<std::uint32_t>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("n-gram model: ") + e.what());
    }
    m.rebuild_history_counts();
    return m;
}

void NGramModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write model file " + path.string());
    out << to_json();
    if (!out) throw ConfigError("error writing model file " + path.string());
}

NGramModel NGramModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read model file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

NGramBackend::NGramBackend(std::shared_ptr<const NGramModel> model, std::size_t max_context_tokens)
    : model_(std::move(model)), max_context_(max_context_tokens) {
    static std::atomic<std::uint64_t> next_instance{1};
    instance_id_ = next_instance.fetch_add(1);
    if (!model_) throw ConfigError("n-gram backend needs a model");
    Fnv1a h;
    h.update(model_->to_json());
    identity_ = "ngram:order=" + std::to_string(model_->order()) + ":model=" + to_hex(h.digest());
}

LogProb NGramBackend::score(SegmentRef target, std::optional<SegmentRef> context) const {
    // Target-side n-gram probabilities do not depend on the context past the
    // first order-1 positions; consecutive calls on the same target reuse them.
    struct Memo {
        std::uint64_t backend = 0;
        std::vector<TokenId> target;
        std::vector<double> probs;
    };
    thread_local Memo memo;
    if (memo.backend != instance_id_ ||
        !std::equal(memo.target.begin(), memo.target.end(), target.tokens.begin(), target.tokens.end())) {
        memo.backend = instance_id_;
        memo.target.assign(target.tokens.begin(), target.tokens.end());
        memo.probs = model_->target_ngram_probs(target.tokens);
    }
    const std::span<const TokenId> ctx = context ? context->tokens : std::span<const TokenId>{};
    return model_->score_with(target.tokens, ctx, memo.probs);
}

}  // namespace longdep
