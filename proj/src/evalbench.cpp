#include "longdep/evalbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "longdep/errors.hpp"
#include "longdep/hash.hpp"
#include "longdep/random.hpp"

namespace longdep {

std::string_view to_string(Generator g) {
    switch (g) {
        case Generator::key_reference: return "key_reference";
        case Generator::entity_chain: return "entity_chain";
        case Generator::short_concat: return "short_concat";
        case Generator::local_only: return "local_only";
        case Generator::repeated_token: return "repeated_token";
    }
    return "?";
}

Generator generator_from_string(std::string_view s) {
    for (auto g : {Generator::key_reference, Generator::entity_chain, Generator::short_concat, Generator::local_only,
                   Generator::repeated_token})
        if (to_string(g) == s) return g;
    throw ConfigError("unknown generator '" + std::string(s) + "'");
}

namespace {

std::vector<double> zipf_cdf(std::size_t n, double s) {
    std::vector<double> cdf(n);
    double acc = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        acc += 1.0 / std::pow(static_cast<double>(r + 1), s);
        cdf[r] = acc;
    }
    for (double& c : cdf) c /= acc;
    return cdf;
}

std::size_t draw(const std::vector<double>& cdf, std::mt19937_64& rng) {
    const double u = uniform_unit(rng);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

std::size_t draw_between(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(uniform_upto(rng, hi - lo));
}

}  // namespace

SynthLanguage::SynthLanguage(LanguageParams params, std::uint64_t seed) : params_(params) {
    if (params_.filler_vocab < 2 || params_.successors < 1 || params_.name_pool < 1 || params_.attr_pool < 1)
        throw ConfigError("synthetic language: pools must be non-empty");
    std::mt19937_64 rng(mix_seed(seed, 0x6c616e67));
    const auto word_cdf = zipf_cdf(params_.filler_vocab, 1.1);
    next_.resize(params_.filler_vocab);
    for (auto& succ : next_)
        for (std::size_t s = 0; s < params_.successors; ++s) succ.push_back(static_cast<std::uint32_t>(draw(word_cdf, rng)));
    // Successor choice: geometric weights, so each word has a few likely continuations.
    std::vector<double> w(params_.successors);
    for (std::size_t s = 0; s < w.size(); ++s) w[s] = std::pow(0.6, static_cast<double>(s));
    next_cdf_.resize(w.size());
    std::partial_sum(w.begin(), w.end(), next_cdf_.begin());
    for (double& c : next_cdf_) c /= next_cdf_.back();
    start_cdf_ = word_cdf;
}

SynthLanguage::Binding SynthLanguage::make_binding(std::mt19937_64& rng) const {
    Binding b;
    b.tokens.push_back("n" + std::to_string(uniform_upto(rng, params_.name_pool - 1)));
    for (std::size_t p = 0; p < params_.phrase_len; ++p)
        b.tokens.push_back("a" + std::to_string(uniform_upto(rng, params_.attr_pool - 1)));
    return b;
}

void SynthLanguage::sentence(std::mt19937_64& rng, std::vector<std::string>& out) const {
    const std::size_t len = draw_between(rng, 6, 14);
    std::size_t word = draw(start_cdf_, rng);
    for (std::size_t t = 0; t < len; ++t) {
        out.push_back("w" + std::to_string(word));
        word = next_[word][draw(next_cdf_, rng)];
    }
    out.push_back(".");
}

std::string SynthLanguage::generate(Generator g, std::size_t n_tokens, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::vector<std::string> toks;
    toks.reserve(n_tokens + 64);
    auto full = [&] { return toks.size() >= n_tokens; };
    auto mention = [&](const Binding& b) { toks.insert(toks.end(), b.tokens.begin(), b.tokens.end()); };
    auto new_bindings = [&](std::size_t count) {
        std::vector<Binding> bs;
        for (std::size_t i = 0; i < count; ++i) bs.push_back(make_binding(rng));
        return bs;
    };
    auto pick = [&](const std::vector<Binding>& bs) -> const Binding& {
        return bs[static_cast<std::size_t>(uniform_upto(rng, bs.size() - 1))];
    };
    const std::size_t per_sentence = params_.mentions_per_sentence;

    switch (g) {
        case Generator::entity_chain: {
            const auto cast = new_bindings(32);
            while (!full()) {
                sentence(rng, toks);
                for (std::size_t m = 0; m < per_sentence; ++m) mention(pick(cast));
            }
            break;
        }
        case Generator::key_reference: {
            const auto keys = new_bindings(24);
            // Definitions, then unrelated filler, then references back to the definitions.
            for (int pass = 0; pass < 2 && !full(); ++pass)
                for (const auto& k : keys) {
                    sentence(rng, toks);
                    mention(k);
                }
            const std::size_t recall_from = n_tokens * 11 / 20;
            while (toks.size() < recall_from) sentence(rng, toks);
            while (!full()) {
                sentence(rng, toks);
                for (std::size_t m = 0; m < per_sentence; ++m) mention(pick(keys));
            }
            break;
        }
        case Generator::short_concat: {
            while (!full()) {
                const std::size_t unit_end = toks.size() + draw_between(rng, 64, 320);
                const auto cast = new_bindings(6);
                while (toks.size() < unit_end && !full()) {
                    sentence(rng, toks);
                    for (std::size_t m = 0; m < per_sentence; ++m) mention(pick(cast));
                }
            }
            break;
        }
        case Generator::local_only: {
            auto active = new_bindings(6);
            std::size_t oldest = 0;
            while (!full()) {
                sentence(rng, toks);
                for (std::size_t m = 0; m < per_sentence; ++m) mention(pick(active));
                if (uniform_unit(rng) < 0.5) {
                    active[oldest] = make_binding(rng);
                    oldest = (oldest + 1) % active.size();
                }
            }
            break;
        }
        case Generator::repeated_token: {
            toks.assign(n_tokens, "z");
            break;
        }
    }
    toks.resize(n_tokens);
    std::string text;
    text.reserve(n_tokens * 6);
    for (std::size_t t = 0; t < toks.size(); ++t) {
        if (t) text.push_back(' ');
        text += toks[t];
    }
    return text;
}

void SynthSpec::validate() const {
    if (n_positive == 0 || n_negative == 0) throw ConfigError("synthetic spec: need at least one positive and one negative");
    if (doc_token_len == 0) throw ConfigError("synthetic spec: doc_token_len must be >= 1");
    if (positive_generators.empty() || negative_generators.empty())
        throw ConfigError("synthetic spec: generator lists must be non-empty");
}

std::vector<LabeledDocument> generate_testset(const SynthSpec& spec) {
    spec.validate();
    const SynthLanguage lang(spec.language, spec.seed);
    std::vector<LabeledDocument> docs;
    const std::size_t total = spec.n_positive + spec.n_negative;
    docs.reserve(total);
    for (std::size_t k = 0; k < total; ++k) {
        LabeledDocument d;
        d.positive = k < spec.n_positive;
        const auto& gens = d.positive ? spec.positive_generators : spec.negative_generators;
        const std::size_t within = d.positive ? k : k - spec.n_positive;
        d.generator = gens[within % gens.size()];
        d.doc.source = "synthetic";
        d.doc.text = lang.generate(d.generator, spec.doc_token_len, mix_seed(spec.seed, k));
        docs.push_back(std::move(d));
    }
    std::mt19937_64 rng(mix_seed(spec.seed, 0x6f72646572));
    seeded_shuffle(docs, rng);
    char id[32];
    for (std::size_t k = 0; k < docs.size(); ++k) {
        std::snprintf(id, sizeof id, "synth-%05zu", k);
        docs[k].doc.id = id;
    }
    return docs;
}

void tokenize_all(std::vector<LabeledDocument>& docs, const Tokenizer& tokenizer) {
    for (auto& d : docs) {
        auto t = tokenizer.encode(d.doc.text);
        d.doc.tokens = std::move(t.ids);
        d.doc.joined_by_space = t.joined_by_space;
    }
}

namespace {

std::uint64_t tokens_hash(std::span<const TokenId> t) {
    Fnv1a h;
    h.update(t);
    return h.digest();
}

}  // namespace

OracleBackend::OracleBackend(std::span<const LabeledDocument> testset, std::size_t segment_len) {
    if (segment_len == 0) throw ConfigError("oracle backend: segment length must be >= 1");
    for (const auto& d : testset) {
        if (!d.positive) continue;
        for (std::size_t s = 0; s + segment_len <= d.doc.tokens.size(); s += segment_len)
            positive_segments_.insert(tokens_hash(std::span<const TokenId>(d.doc.tokens).subspan(s, segment_len)));
    }
}

LogProb OracleBackend::score(SegmentRef target, std::optional<SegmentRef> context) const {
    const auto n = static_cast<double>(target.tokens.size());
    double ppl_value = 10.0;
    if (context && positive_segments_.count(tokens_hash(target.tokens)) > 0) {
        // Context-dependent reduction, varied per context so DSP rows are not uniform.
        const double u = static_cast<double>(tokens_hash(context->tokens) >> 11) * 0x1.0p-53;
        ppl_value = 10.0 * (0.7 - 0.2 * u);
    }
    return LogProb{-n * std::log(ppl_value), target.tokens.size()};
}

std::size_t positives_in_top_k(std::span<const double> lds, const std::vector<bool>& positive,
                               std::span<const std::string> ids, std::size_t k) {
    std::vector<std::size_t> order(lds.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (lds[a] != lds[b]) return lds[a] > lds[b];
        return ids[a] < ids[b];
    });
    std::size_t hits = 0;
    for (std::size_t r = 0; r < std::min(k, order.size()); ++r) hits += positive[order[r]] ? 1 : 0;
    return hits;
}

std::vector<BenchResult> run_bench(std::span<const LabeledDocument> testset, std::span<const BenchBackend> backends,
                                   std::span<const std::size_t> sample_sizes, const BenchOptions& opts) {
    std::vector<Document> docs;
    std::vector<bool> labels;
    std::vector<std::string> ids;
    for (const auto& d : testset) {
        docs.push_back(d.doc);
        labels.push_back(d.positive);
        ids.push_back(d.doc.id);
    }
    const auto k = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));

    std::vector<BenchResult> results;
    for (const auto& b : backends) {
        for (std::size_t t : sample_sizes) {
            BenchResult r;
            r.backend = b.label;
            r.sample_size = t;
            r.k = k;
            r.workers = opts.workers;
            try {
                ScoreCorpusOptions so;
                so.lds = opts.lds;
                so.lds.mode = ScoreMode::sampled;
                so.lds.sample_size = t;
                so.segmentation = opts.segmentation;
                so.workers = opts.workers;
                ScoreCounters counters;
                const auto outcomes = score_corpus(docs, *b.backend, so, &counters);
                std::vector<double> lds(docs.size(), -std::numeric_limits<double>::infinity());
                for (const auto& o : outcomes)
                    if (o.report) lds[o.index] = o.report->lds;
                r.positives_in_top_k = positives_in_top_k(lds, labels, ids, k);
                r.accuracy = k ? static_cast<double>(r.positives_in_top_k) / static_cast<double>(k) : 0.0;
                r.wall_seconds = counters.wall_seconds;
                r.docs_per_second = counters.docs_per_second();
                if (counters.failed > 0) {
                    r.failed = true;
                    r.error = std::to_string(counters.failed) + " document(s) failed";
                }
            } catch (const std::exception& e) {
                r.failed = true;
                r.error = e.what();
            }
            results.push_back(std::move(r));
        }
    }
    return results;
}

std::string bench_csv(std::span<const BenchResult> results) {
    std::ostringstream out;
    out << "samples_T,backend,docs_per_second,accuracy,positives_in_top_k,k,wall_seconds,workers,status\n";
    char buf[256];
    for (const auto& r : results) {
        std::snprintf(buf, sizeof buf, "%zu,%s,%.6g,%.4f,%zu,%zu,%.6g,%d,%s\n", r.sample_size, r.backend.c_str(),
                      r.docs_per_second, r.accuracy, r.positives_in_top_k, r.k, r.wall_seconds, r.workers,
                      r.failed ? "failed" : "ok");
        out << buf;
    }
    return out.str();
}

std::string bench_table(std::span<const BenchResult> results) {
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-10s %-16s %12s %10s\n", "Samples T", "Backend", "Docs/s", "Accuracy");
    out << buf << std::string(51, '-') << "\n";
    for (const auto& r : results) {
        if (r.failed && r.docs_per_second == 0.0)
            std::snprintf(buf, sizeof buf, "%-10zu %-16s %12s %10s\n", r.sample_size, r.backend.c_str(), "failed", "-");
        else
            std::snprintf(buf, sizeof buf, "%-10zu %-16s %12.3f %9.0f%%\n", r.sample_size, r.backend.c_str(),
                          r.docs_per_second, 100.0 * r.accuracy);
        out << buf;
    }
    return out.str();
}

}  // namespace longdep
