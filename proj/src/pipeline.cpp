#include "longdep/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "longdep/errors.hpp"
#include "longdep/hash.hpp"
#include "longdep/random.hpp"
#include "longdep/stats.hpp"

namespace longdep {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json scoring_config_json(const LdsConfig& lds, const SegmentationConfig& seg, std::string_view backend_identity) {
    ordered_json j;
    j["alpha"] = lds.alpha;
    j["beta"] = lds.beta;
    j["gamma"] = lds.gamma;
    j["tau"] = lds.tau;
    j["mode"] = to_string(lds.mode);
    j["sample_size"] = lds.sample_size;
    j["seed"] = lds.seed;
    j["dsp_variant"] = to_string(lds.dsp_variant);
    j["segment_len"] = seg.segment_len;
    j["max_tokens"] = seg.max_tokens;
    j["max_tokens_unit"] = "pipeline-tokenizer";
    j["tokenizer"] = to_string(seg.tokenizer);
    j["backend"] = backend_identity;
    return j;
}

std::string config_hash(const ordered_json& canonical) { return to_hex(fnv1a(canonical.dump())); }

std::string_view to_string(DocStatus s) {
    switch (s) {
        case DocStatus::scored: return "scored";
        case DocStatus::excluded: return "excluded";
        case DocStatus::failed: return "failed";
    }
    return "?";
}

DocStatus doc_status_from_string(std::string_view s) {
    if (s == "scored") return DocStatus::scored;
    if (s == "excluded") return DocStatus::excluded;
    if (s == "failed") return DocStatus::failed;
    throw ConfigError("unknown document status '" + std::string(s) + "'");
}

ScoreCounters score_corpus(const DocumentSource& source, const PerplexityBackend& backend,
                           const ScoreCorpusOptions& opts, const OutcomeSink& sink, PplCache* cache) {
    if (opts.workers < 1) throw ConfigError("workers must be >= 1");
    opts.lds.validate();
    backend.check_available();

    PplCache local_cache;
    PplCache& ppl_cache = cache ? *cache : local_cache;
    const ScoreOptions doc_opts{opts.keep_pairs, std::max(1, opts.pair_threads)};
    const std::size_t chunk = static_cast<std::size_t>(opts.workers) * 2;
    auto cancelled = [&] { return opts.cancel && opts.cancel->load(); };

    ScoreCounters counters;
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t next_index = 0;
    bool exhausted = false;

    while (!exhausted && !cancelled()) {
        std::vector<DocOutcome> batch;
        std::vector<std::optional<SegmentGrid>> grids;
        while (batch.size() < chunk) {
            auto doc = source();
            if (!doc) {
                exhausted = true;
                break;
            }
            DocOutcome out;
            out.index = next_index++;
            out.doc_id = doc->id;
            out.source = doc->source;
            try {
                grids.emplace_back(segment(*doc, opts.segmentation.segment_len, opts.segmentation.max_tokens,
                                           opts.tokenizer));
            } catch (const DocumentTooShort& e) {
                out.status = DocStatus::excluded;
                out.reason = e.what();
                grids.emplace_back(std::nullopt);
            }
            batch.push_back(std::move(out));
        }
        counters.read += batch.size();

        std::vector<char> started(batch.size(), 0);
        const auto n = static_cast<std::int64_t>(batch.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(opts.workers)
        for (std::int64_t b = 0; b < n; ++b) {
            const auto k = static_cast<std::size_t>(b);
            if (cancelled()) continue;
            started[k] = 1;
            if (!grids[k]) continue;
            try {
                batch[k].report = score_document(*grids[k], backend, opts.lds, ppl_cache, doc_opts);
            } catch (const std::exception& e) {
                batch[k].status = DocStatus::failed;
                batch[k].reason = e.what();
            }
        }

        for (std::size_t k = 0; k < batch.size(); ++k) {
            if (!started[k]) {
                // Documents after the first unstarted one are dropped to keep the output an input-order prefix.
                counters.read -= batch.size() - k;
                counters.cancelled = true;
                exhausted = true;
                break;
            }
            switch (batch[k].status) {
                case DocStatus::scored:
                    ++counters.scored;
                    counters.pairs_evaluated += batch[k].report->pairs_evaluated;
                    break;
                case DocStatus::excluded: ++counters.excluded; break;
                case DocStatus::failed: ++counters.failed; break;
            }
            sink(std::move(batch[k]));
        }
    }
    if (cancelled()) counters.cancelled = true;
    counters.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return counters;
}

std::vector<DocOutcome> score_corpus(std::span<const Document> docs, const PerplexityBackend& backend,
                                     const ScoreCorpusOptions& opts, ScoreCounters* counters) {
    std::size_t pos = 0;
    DocumentSource source = [&]() -> std::optional<Document> {
        if (pos >= docs.size()) return std::nullopt;
        return docs[pos++];
    };
    std::vector<DocOutcome> out;
    auto c = score_corpus(source, backend, opts, [&](DocOutcome&& o) { out.push_back(std::move(o)); });
    if (counters) *counters = c;
    return out;
}

ReportRecord to_record(const DocOutcome& o, std::string_view config_hash) {
    ReportRecord r;
    r.doc_id = o.doc_id;
    r.source = o.source;
    r.status = o.status;
    r.reason = o.reason;
    r.config_hash = std::string(config_hash);
    if (o.report) {
        r.lds = o.report->lds;
        r.mode = std::string(to_string(o.report->mode));
        r.n_segments = o.report->n_segments;
        r.pairs_evaluated = o.report->pairs_evaluated;
    }
    return r;
}

ordered_json to_json(const ReportRecord& r) {
    ordered_json j;
    j["doc_id"] = r.doc_id;
    j["source"] = r.source;
    j["status"] = to_string(r.status);
    if (r.status == DocStatus::scored) {
        j["lds"] = r.lds;
        j["mode"] = r.mode;
        j["n_segments"] = r.n_segments;
        j["pairs_evaluated"] = r.pairs_evaluated;
    } else {
        j["reason"] = r.reason;
    }
    j["config_hash"] = r.config_hash;
    return j;
}

ReportRecord record_from_json(const json& j) {
    ReportRecord r;
    r.doc_id = j.at("doc_id").get<std::string>();
    r.source = j.at("source").get<std::string>();
    r.status = doc_status_from_string(j.at("status").get<std::string>());
    r.config_hash = j.at("config_hash").get<std::string>();
    if (r.status == DocStatus::scored) {
        r.lds = j.at("lds").get<double>();
        r.mode = j.at("mode").get<std::string>();
        r.n_segments = j.at("n_segments").get<std::size_t>();
        r.pairs_evaluated = j.at("pairs_evaluated").get<std::size_t>();
    } else {
        r.reason = j.value("reason", "");
    }
    return r;
}

ordered_json pairs_sidecar_json(const ScoreReport& r, std::string_view config_hash) {
    ordered_json j;
    j["doc_id"] = r.doc_id;
    j["source"] = r.source;
    j["mode"] = to_string(r.mode);
    j["n_segments"] = r.n_segments;
    j["lds"] = r.lds;
    j["config_hash"] = config_hash;
    ordered_json dsp = ordered_json::array();
    for (const auto& [i, v] : r.dsp_per_target) dsp.push_back(ordered_json::array({i, v}));
    j["dsp"] = std::move(dsp);
    j["pair_fields"] = {"i", "j", "delta_ppl", "dst", "ddi", "indicator", "lds_pair"};
    ordered_json pairs = ordered_json::array();
    for (const auto& p : r.pairs)
        pairs.push_back(ordered_json::array({p.i, p.j, p.delta_ppl, p.dst, p.ddi, p.indicator, p.lds_pair}));
    j["pairs"] = std::move(pairs);
    return j;
}

std::vector<ReportRecord> read_reports(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read reports file " + path.string());
    std::vector<ReportRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(record_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": malformed report: " + e.what());
        }
    }
    return out;
}

// ---- selection ---------------------------------------------------------------

std::string_view to_string(SelectionStrategy s) {
    switch (s) {
        case SelectionStrategy::prolong: return "prolong";
        case SelectionStrategy::random: return "random";
        case SelectionStrategy::full: return "full";
    }
    return "?";
}

SelectionStrategy selection_strategy_from_string(std::string_view s) {
    if (s == "prolong") return SelectionStrategy::prolong;
    if (s == "random") return SelectionStrategy::random;
    if (s == "full") return SelectionStrategy::full;
    throw ConfigError("unknown strategy '" + std::string(s) + "' (expected prolong|random|full)");
}

std::vector<std::size_t> seeded_subset(std::size_t n, std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    seeded_shuffle(idx, rng);
    idx.resize(std::min(k, n));
    std::sort(idx.begin(), idx.end());
    return idx;
}

namespace {

std::size_t retain_count(double fraction, std::size_t count) {
    // Guard against 0.5 * 100 = 50.000000000000007 style round-up.
    const double raw = fraction * static_cast<double>(count);
    auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    return std::min(k, count);
}

ArmStats arm(std::span<const double> values) {
    return ArmStats{values.size(), stats::mean(values), stats::median(values)};
}

struct Group {
    std::string name;
    std::vector<const ReportRecord*> docs;  // sorted by LDS desc, doc_id asc
};

SelectionManifest build(std::span<const ReportRecord> reports, const SelectionOptions& opts) {
    if (reports.empty()) throw ConfigError("selection needs at least one report");
    if (!(opts.fraction > 0.0 && opts.fraction <= 1.0)) throw ConfigError("fraction must be in (0, 1]");
    const std::string& hash = reports.front().config_hash;
    for (const auto& r : reports)
        if (r.config_hash != hash)
            throw ConfigError("reports were scored under different configurations (" + hash + " vs " + r.config_hash +
                              "); their LDS values are not comparable");

    SelectionManifest m;
    m.config_hash = hash;
    m.options = opts;
    const std::set<std::string> passthrough(opts.passthrough_sources.begin(), opts.passthrough_sources.end());

    // Passthrough sources stay separate groups even under global ranking.
    std::map<std::string, Group> groups;
    for (const auto& r : reports) {
        if (r.status != DocStatus::scored) {
            m.excluded.push_back(r);
            continue;
        }
        const bool pass = passthrough.count(r.source) > 0;
        const std::string key = (opts.per_source || pass) ? r.source : std::string("*");
        auto& g = groups[key];
        g.name = key;
        g.docs.push_back(&r);
    }
    std::sort(m.excluded.begin(), m.excluded.end(),
              [](const ReportRecord& a, const ReportRecord& b) { return a.doc_id < b.doc_id; });

    std::vector<double> all_full, all_retained, all_random, all_prolong;
    for (auto& [name, g] : groups) {
        std::sort(g.docs.begin(), g.docs.end(), [](const ReportRecord* a, const ReportRecord* b) {
            if (a->lds != b->lds) return a->lds > b->lds;
            return a->doc_id < b->doc_id;
        });
        SourceSelection s;
        s.source = name;
        s.passthrough = passthrough.count(name) > 0;
        s.retention_fraction = s.passthrough ? 1.0 : opts.fraction;
        const std::size_t n = g.docs.size();
        const std::size_t k = retain_count(s.retention_fraction, n);

        // Random arm: canonical doc_id order, then a seeded subset independent of input order.
        std::vector<std::size_t> by_id(n);
        for (std::size_t i = 0; i < n; ++i) by_id[i] = i;
        std::sort(by_id.begin(), by_id.end(),
                  [&](std::size_t a, std::size_t b) { return g.docs[a]->doc_id < g.docs[b]->doc_id; });
        std::vector<char> random_pick(n, 0);
        for (std::size_t idx : seeded_subset(n, k, mix_seed(opts.seed, fnv1a(name)))) random_pick[by_id[idx]] = 1;

        std::vector<double> full, retained, random_vals, prolong_vals;
        for (std::size_t r = 0; r < n; ++r) {
            RankedDoc d{g.docs[r]->doc_id, g.docs[r]->lds, r + 1, false};
            switch (opts.strategy) {
                case SelectionStrategy::prolong: d.retained = r < k; break;
                case SelectionStrategy::random: d.retained = random_pick[r] != 0; break;
                case SelectionStrategy::full: d.retained = true; break;
            }
            full.push_back(d.lds);
            if (d.retained) retained.push_back(d.lds);
            if (random_pick[r]) random_vals.push_back(d.lds);
            if (r < k) prolong_vals.push_back(d.lds);
            s.documents.push_back(std::move(d));
        }
        s.full = arm(full);
        s.retained = arm(retained);
        s.random_arm = arm(random_vals);
        s.prolong_arm = arm(prolong_vals);
        s.random_mean_stderr = stats::subset_mean_stderr(full, k);
        all_full.insert(all_full.end(), full.begin(), full.end());
        all_retained.insert(all_retained.end(), retained.begin(), retained.end());
        all_random.insert(all_random.end(), random_vals.begin(), random_vals.end());
        all_prolong.insert(all_prolong.end(), prolong_vals.begin(), prolong_vals.end());
        m.sources.push_back(std::move(s));
    }
    m.overall_full = arm(all_full);
    m.overall_retained = arm(all_retained);
    m.overall_random = arm(all_random);
    m.overall_prolong = arm(all_prolong);

    Fnv1a h;
    h.update(hash);
    h.update(to_string(opts.strategy));
    h.update(ordered_json(opts.fraction).dump());
    h.update(std::to_string(opts.seed));
    h.update(opts.per_source ? "per-source" : "global");
    for (const auto& p : passthrough) h.update(p);
    for (const auto& r : reports) h.update(to_json(r).dump());
    m.run_id = to_hex(h.digest());
    return m;
}

ordered_json arm_json(const ArmStats& a) {
    return ordered_json{{"count", a.count}, {"mean_lds", a.mean}, {"median_lds", a.median}};
}

}  // namespace

SelectionManifest rank_and_select(std::span<const ReportRecord> reports, double fraction, bool per_source,
                                  const SelectionOptions& base) {
    SelectionOptions o = base;
    o.strategy = SelectionStrategy::prolong;
    o.fraction = fraction;
    o.per_source = per_source;
    return build(reports, o);
}

SelectionManifest random_baseline(std::span<const ReportRecord> reports, double fraction, std::uint64_t seed,
                                  const SelectionOptions& base) {
    SelectionOptions o = base;
    o.strategy = SelectionStrategy::random;
    o.fraction = fraction;
    o.seed = seed;
    return build(reports, o);
}

SelectionManifest select(std::span<const ReportRecord> reports, const SelectionOptions& opts) {
    SelectionOptions o = opts;
    if (o.strategy == SelectionStrategy::full) o.fraction = 1.0;
    return build(reports, o);
}

std::vector<std::string> SelectionManifest::retained_ids() const {
    std::vector<std::string> ids;
    for (const auto& s : sources)
        for (const auto& d : s.documents)
            if (d.retained) ids.push_back(d.doc_id);
    return ids;
}

ordered_json SelectionManifest::to_json() const {
    ordered_json j;
    j["format"] = "longdep-selection-manifest";
    j["version"] = 1;
    j["run_id"] = run_id;
    j["config_hash"] = config_hash;
    j["complete"] = complete;
    j["strategy"] = to_string(options.strategy);
    j["fraction"] = options.fraction;
    j["ranking"] = options.per_source ? "per-source" : "global";
    j["seed"] = options.seed;
    j["passthrough_sources"] = options.passthrough_sources;
    ordered_json sources_json = ordered_json::array();
    for (const auto& s : sources) {
        ordered_json sj;
        sj["source"] = s.source;
        sj["passthrough"] = s.passthrough;
        sj["retention_fraction"] = s.retention_fraction;
        sj["count"] = s.documents.size();
        sj["retained_count"] = s.retained.count;
        sj["stats"] = {{"full", arm_json(s.full)},
                       {"retained", arm_json(s.retained)},
                       {"arms",
                        {{"full", arm_json(s.full)},
                         {"random", arm_json(s.random_arm)},
                         {"prolong", arm_json(s.prolong_arm)},
                         {"random_mean_stderr", s.random_mean_stderr}}}};
        ordered_json docs = ordered_json::array();
        for (const auto& d : s.documents)
            docs.push_back({{"doc_id", d.doc_id}, {"lds", d.lds}, {"rank", d.rank}, {"retained", d.retained}});
        sj["documents"] = std::move(docs);
        sources_json.push_back(std::move(sj));
    }
    j["sources"] = std::move(sources_json);
    ordered_json ex = ordered_json::array();
    for (const auto& r : excluded)
        ex.push_back({{"doc_id", r.doc_id}, {"source", r.source}, {"status", to_string(r.status)}, {"reason", r.reason}});
    j["excluded"] = std::move(ex);
    j["overall"] = {{"full", arm_json(overall_full)},
                    {"retained", arm_json(overall_retained)},
                    {"random", arm_json(overall_random)},
                    {"prolong", arm_json(overall_prolong)}};
    return j;
}

}  // namespace longdep
