#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "longdep/corpus.hpp"
#include "longdep/errors.hpp"
#include "longdep/evalbench.hpp"
#include "longdep/external.hpp"
#include "longdep/hash.hpp"
#include "longdep/ngram.hpp"
#include "longdep/pipeline.hpp"
#include "longdep/viz.hpp"

namespace longdep::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::atomic<bool> g_cancel{false};

extern "C" void on_sigint(int) { g_cancel.store(true); }

// A usage-level failure detected after parsing (bad values, missing files).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw UsageError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, std::string_view data) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << data;
    if (!out) throw ConfigError("error writing " + p.string());
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Flags shared by the subcommands that configure scoring. Optionals stay
// empty unless given, so they only override what the config file set.
struct ScoringFlags {
    std::string config_file;
    std::optional<double> alpha, beta, gamma, tau, fraction;
    std::optional<std::string> mode, dsp_variant, tokenizer, backend;
    std::optional<std::size_t> samples, segment_len, max_tokens;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;

    void add_to(CLI::App& app, bool with_backend) {
        app.add_option("--config", config_file, "JSON config file (flags override it)");
        app.add_option("--alpha", alpha, "weight of dependency strength");
        app.add_option("--beta", beta, "weight of dependency distance");
        app.add_option("--gamma", gamma, "DSP weight for the additive variant");
        app.add_option("--tau", tau, "DST threshold gating accumulation");
        app.add_option("--mode", mode, "exact | sampled");
        app.add_option("-T,--samples", samples, "number of sampled pairs (sampled mode)");
        app.add_option("--seed", seed, "sampling seed");
        app.add_option("--dsp-variant", dsp_variant, "multiplicative | additive | none");
        app.add_option("-L,--segment-len", segment_len, "segment length in tokens");
        app.add_option("-M,--max-tokens", max_tokens, "truncation length in tokens");
        app.add_option("--tokenizer", tokenizer, "whitespace | byte");
        app.add_option("--workers", workers, "scoring worker threads");
        app.add_option("--fraction", fraction, "selection fraction");
        if (with_backend)
            app.add_option("--backend", backend,
                           "ngram:<model-file> | external[:<endpoint>] (endpoint also from " +
                               std::string(kScorerEndpointEnv) + ")");
    }

    RunConfig resolve() const {
        RunConfig cfg = default_profile();
        if (!config_file.empty()) {
            json j = json::parse(read_file(config_file), nullptr, false);
            if (j.is_discarded() || !j.is_object()) throw UsageError("config file " + config_file + " is not a JSON object");
            cfg.apply(j.contains("config") && j["config"].is_object() ? j["config"] : j);
        }
        if (alpha) cfg.lds.alpha = *alpha;
        if (beta) cfg.lds.beta = *beta;
        if (gamma) cfg.lds.gamma = *gamma;
        if (tau) cfg.lds.tau = *tau;
        if (mode) cfg.lds.mode = score_mode_from_string(*mode);
        if (samples) cfg.lds.sample_size = *samples;
        if (seed) cfg.lds.seed = *seed;
        if (dsp_variant) cfg.lds.dsp_variant = dsp_variant_from_string(*dsp_variant);
        if (segment_len) cfg.segmentation.segment_len = *segment_len;
        if (max_tokens) cfg.segmentation.max_tokens = *max_tokens;
        if (tokenizer) cfg.segmentation.tokenizer = tokenizer_kind_from_string(*tokenizer);
        if (workers) cfg.workers = *workers;
        if (fraction) cfg.fraction = *fraction;
        if (backend) cfg.backend = *backend;
        return cfg;
    }
};

void validate(const RunConfig& cfg) {
    cfg.lds.validate();
    if (cfg.segmentation.segment_len == 0) throw ConfigError("segment length must be >= 1");
    if (cfg.segmentation.max_tokens < 2 * cfg.segmentation.segment_len)
        throw ConfigError("max tokens M must be >= 2 * segment length L");
    if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
    if (!(cfg.fraction > 0.0 && cfg.fraction <= 1.0)) throw ConfigError("fraction must be in (0, 1]");
}

ordered_json show_config_json(const RunConfig& cfg) {
    ordered_json j;
    j["profile"] = kDefaultProfile;
    j["config"] = cfg.to_json();
    return j;
}

struct LoadedBackend {
    std::shared_ptr<const PerplexityBackend> backend;
    std::shared_ptr<Vocabulary> vocab;
};

LoadedBackend load_backend(const std::string& spec) {
    LoadedBackend lb;
    if (spec.rfind("ngram:", 0) == 0) {
        auto model = std::make_shared<const NGramModel>(NGramModel::load(spec.substr(6)));
        lb.vocab = std::make_shared<Vocabulary>(model->vocab());
        lb.backend = std::make_shared<NGramBackend>(model);
        return lb;
    }
    if (spec == "external" || spec.rfind("external:", 0) == 0) {
        std::string endpoint = spec.size() > 9 ? spec.substr(9) : std::string();
        if (endpoint.empty()) {
            const char* env = std::getenv(kScorerEndpointEnv);
            if (env == nullptr || *env == '\0')
                throw ConfigError(std::string("external backend needs an endpoint: use --backend external:<endpoint> or set ") +
                                  kScorerEndpointEnv);
            endpoint = env;
        }
        lb.vocab = std::make_shared<Vocabulary>();
        lb.backend = std::make_shared<ExternalBackend>(Endpoint::parse(endpoint));
        return lb;
    }
    if (spec.empty()) throw ConfigError("no backend selected: pass --backend ngram:<model-file> or external:<endpoint>");
    throw ConfigError("unknown backend '" + spec + "' (expected ngram:<model-file> or external[:<endpoint>])");
}

// ---- train-ngram -------------------------------------------------------------

struct TrainArgs {
    std::string input, format = "jsonl", out, tokenizer = "whitespace";
    int order = 3;
    double k = 0.01;
    double cache_weight = 0.5;
};

int cmd_train_ngram(const TrainArgs& a, std::ostream& out) {
    if (a.order < 1 || a.order > kMaxNGramOrder)
        throw UsageError("--order must be in [1, " + std::to_string(kMaxNGramOrder) + "]");
    if (!(a.k > 0.0)) throw UsageError("--k must be > 0");
    if (!fs::exists(a.input)) throw UsageError("input path does not exist: " + a.input);
    auto vocab = std::make_shared<Vocabulary>();
    auto tok = std::make_shared<const Tokenizer>(TokenizerSpec{tokenizer_kind_from_string(a.tokenizer)}, vocab);
    DocumentReader reader(a.input, input_format_from_string(a.format), tok);
    auto docs = read_all(reader);
    const NGramModel model = train_ngram(docs, a.order, a.k, vocab->snapshot(), a.cache_weight);
    model.save(a.out);
    out << "trained order-" << a.order << " model on " << docs.size() << " document(s), " << model.vocab_size()
        << " vocabulary entries, " << model.ngram_types() << " n-gram types";
    if (reader.skipped() > 0) out << "; skipped " << reader.skipped() << " malformed record(s)";
    out << "\nwrote " << a.out << " (sha: " << to_hex(fnv1a(model.to_json())) << ")\n";
    return kOk;
}

// ---- score -------------------------------------------------------------------

struct ScoreArgs {
    ScoringFlags flags;
    std::string input, format = "jsonl", out_dir;
    bool emit_pairs = false;
    bool show_config = false;
};

int cmd_score(const ScoreArgs& a, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = a.flags.resolve();
    if (a.show_config) {
        out << show_config_json(cfg).dump(2) << "\n";
        return kOk;
    }
    validate(cfg);
    if (a.input.empty() || !fs::exists(a.input)) throw UsageError("input path does not exist: " + a.input);
    if (a.out_dir.empty()) throw UsageError("--out-dir is required");
    const InputFormat format = input_format_from_string(a.format);

    LoadedBackend lb = load_backend(cfg.backend);
    lb.backend->check_available();  // BackendError -> unreachable exit code, before any output exists

    auto tokenizer = std::make_shared<const Tokenizer>(TokenizerSpec{cfg.segmentation.tokenizer}, lb.vocab);
    DocumentReader reader(a.input, format, tokenizer);

    const ordered_json canonical = scoring_config_json(cfg.lds, cfg.segmentation, lb.backend->identity());
    const std::string hash = config_hash(canonical);

    fs::create_directories(a.out_dir);
    const fs::path reports_path = fs::path(a.out_dir) / "reports.jsonl";
    const fs::path pairs_path = fs::path(a.out_dir) / "pairs.jsonl";
    std::ofstream reports(reports_path, std::ios::trunc);
    std::ofstream pairs;
    if (a.emit_pairs) pairs.open(pairs_path, std::ios::trunc);
    if (!reports || (a.emit_pairs && !pairs)) throw ConfigError("cannot write into " + a.out_dir);

    g_cancel = false;
    auto previous = std::signal(SIGINT, on_sigint);
    const std::string started = utc_now();

    ScoreCorpusOptions so;
    so.lds = cfg.lds;
    so.segmentation = cfg.segmentation;
    so.workers = cfg.workers;
    so.keep_pairs = a.emit_pairs;
    so.tokenizer = tokenizer.get();
    so.cancel = &g_cancel;
    DocumentSource source = [&] { return reader.next(); };
    const ScoreCounters c = score_corpus(source, *lb.backend, so, [&](DocOutcome&& o) {
        reports << to_json(to_record(o, hash)).dump() << "\n";
        if (a.emit_pairs && o.report) pairs << pairs_sidecar_json(*o.report, hash).dump() << "\n";
    });
    std::signal(SIGINT, previous);
    reports.close();
    if (pairs.is_open()) pairs.close();

    const bool complete = !c.cancelled;
    ordered_json summary;
    summary["format"] = "longdep-score-summary";
    summary["config_hash"] = hash;
    summary["config"] = canonical;
    summary["complete"] = complete;
    summary["documents"] = {{"read", c.read},         {"scored", c.scored},
                            {"excluded", c.excluded}, {"failed", c.failed},
                            {"skipped_records", reader.skipped()}};
    summary["pairs_evaluated"] = c.pairs_evaluated;
    write_file(fs::path(a.out_dir) / "score_summary.json", summary.dump(2) + "\n");

    ordered_json meta;
    meta["config_hash"] = hash;
    meta["workers"] = cfg.workers;
    meta["started_utc"] = started;
    meta["finished_utc"] = utc_now();
    meta["wall_seconds"] = c.wall_seconds;
    meta["docs_per_second"] = c.docs_per_second();
    meta["backend_calls"] = {{"unconditional", lb.backend->unconditional_calls()},
                             {"conditional", lb.backend->conditional_calls()}};
    meta["ingest_diagnostics"] = reader.diagnostics();
    write_file(fs::path(a.out_dir) / "run_meta.json", meta.dump(2) + "\n");

    out << "scored " << c.scored << ", excluded " << c.excluded << ", failed " << c.failed << " of " << c.read
        << " document(s) [config " << hash << "]\n";
    if (!complete) err << "interrupted: wrote a partial run marked incomplete\n";
    return (c.failed > 0 || !complete) ? kPartial : kOk;
}

// ---- select ------------------------------------------------------------------

struct SelectArgs {
    std::string reports, out_dir, strategy = "prolong", config_file;
    std::optional<double> fraction;
    std::uint64_t seed = 0;
    bool global = false;
    std::vector<std::string> passthrough;
};

int cmd_select(const SelectArgs& a, std::ostream& out) {
    if (a.reports.empty() || !fs::exists(a.reports)) throw UsageError("reports file does not exist: " + a.reports);
    if (a.out_dir.empty()) throw UsageError("--out-dir is required");
    double fraction = default_profile().fraction;
    if (!a.config_file.empty()) {
        json j = json::parse(read_file(a.config_file), nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw UsageError("config file " + a.config_file + " is not a JSON object");
        RunConfig cfg = default_profile();
        cfg.apply(j.contains("config") && j["config"].is_object() ? j["config"] : j);
        fraction = cfg.fraction;
    }
    if (a.fraction) fraction = *a.fraction;

    SelectionOptions opts;
    opts.strategy = selection_strategy_from_string(a.strategy);
    opts.fraction = fraction;
    opts.per_source = !a.global;
    opts.seed = a.seed;
    opts.passthrough_sources = a.passthrough;
    std::sort(opts.passthrough_sources.begin(), opts.passthrough_sources.end());

    const auto records = read_reports(a.reports);
    SelectionManifest m = select(records, opts);
    const fs::path summary = fs::path(a.reports).parent_path() / "score_summary.json";
    if (fs::exists(summary)) {
        json s = json::parse(read_file(summary), nullptr, false);
        if (!s.is_discarded() && s.value("complete", true) == false) m.complete = false;
    }

    fs::create_directories(a.out_dir);
    write_file(fs::path(a.out_dir) / "manifest.json", m.to_json().dump(2) + "\n");
    std::string ids;
    for (const auto& id : m.retained_ids()) ids += id + "\n";
    write_file(fs::path(a.out_dir) / "retained_ids.txt", ids);

    out << "strategy " << to_string(m.options.strategy) << ", fraction " << m.options.fraction << ": retained "
        << m.overall_retained.count << " of " << m.overall_full.count << " scored document(s); mean LDS full "
        << m.overall_full.mean << ", retained " << m.overall_retained.mean << " [config " << m.config_hash << "]\n";
    if (!m.complete) out << "note: the scoring run was incomplete\n";
    return kOk;
}

// ---- heatmap -----------------------------------------------------------------

struct HeatmapArgs {
    std::string sidecar, doc, out, scale = "linear", value = "dst";
    std::size_t cell_size = 1;
};

int cmd_heatmap(const HeatmapArgs& a, std::ostream& out) {
    if (a.sidecar.empty() || !fs::exists(a.sidecar))
        throw UsageError("pair sidecar '" + a.sidecar +
                         "' not found; it is written by `longdep score --emit-pairs` as pairs.jsonl in the output directory");
    if (a.out.empty()) throw UsageError("--out is required");
    if (a.cell_size == 0) throw UsageError("--cell-size must be >= 1");
    const SidecarEntry e = read_sidecar(a.sidecar, a.doc);
    const HeatmapValue value = heatmap_value_from_string(a.value);
    const HeatmapMatrix m = HeatmapMatrix::from_pairs(e.doc_id, e.n_segments, e.pairs, value);
    HeatmapSpec spec;
    spec.scale = color_scale_from_string(a.scale);
    spec.value = value;
    spec.cell_size = a.cell_size;
    const Raster r = render_heatmap(m, spec);
    const fs::path base(a.out);
    if (base.has_parent_path()) fs::create_directories(base.parent_path());
    write_ppm(r, base.string() + ".ppm");
    write_file(base.string() + ".csv", heatmap_csv(m, value));
    out << "doc " << e.doc_id << " (" << e.mode << ", N=" << e.n_segments << ", " << m.defined_cells()
        << " cells): wrote " << base.string() << ".ppm (" << r.width << "x" << r.height << ") and " << base.string()
        << ".csv\n";
    return kOk;
}

// ---- bench -------------------------------------------------------------------

struct BenchArgs {
    ScoringFlags flags;
    std::size_t positives = 100, negatives = 100, doc_len = 32768;
    std::uint64_t synth_seed = 7;
    std::vector<std::string> backends{"ngram"};
    std::vector<std::size_t> ts{5000, 500};
    int order = 3;
    double k = 0.01, cache_weight = 0.5;
    std::string csv, out_dir;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
    RunConfig cfg = a.flags.resolve();
    validate(cfg);
    if (a.ts.empty()) throw UsageError("-T/--samples-list needs at least one value");
    SynthSpec spec;
    spec.n_positive = a.positives;
    spec.n_negative = a.negatives;
    spec.doc_token_len = a.doc_len;
    spec.seed = a.synth_seed;
    auto testset = generate_testset(spec);

    std::vector<BenchBackend> backends;
    std::shared_ptr<Vocabulary> vocab;
    std::shared_ptr<const NGramModel> trained;
    for (const auto& name : a.backends) {
        if (name == "ngram" || name.rfind("ngram-o", 0) == 0) {
            int order = a.order;
            if (name != "ngram") order = std::stoi(name.substr(7));
            if (!vocab) {
                vocab = std::make_shared<Vocabulary>();
                tokenize_all(testset, Tokenizer({cfg.segmentation.tokenizer}, vocab));
            }
            std::vector<Document> plain;
            for (const auto& d : testset) plain.push_back(d.doc);
            auto model = std::make_shared<const NGramModel>(train_ngram(plain, order, a.k, vocab->snapshot(), a.cache_weight));
            backends.push_back({name == "ngram" ? "ngram-o" + std::to_string(order) : name,
                                std::make_shared<NGramBackend>(model)});
        } else if (name == "oracle") {
            if (!vocab) {
                vocab = std::make_shared<Vocabulary>();
                tokenize_all(testset, Tokenizer({cfg.segmentation.tokenizer}, vocab));
            }
            backends.push_back({"oracle", std::make_shared<OracleBackend>(testset, cfg.segmentation.segment_len)});
        } else if (name.rfind("ngram:", 0) == 0 || name.rfind("external", 0) == 0) {
            LoadedBackend lb = load_backend(name);
            if (!vocab) {
                vocab = lb.vocab;
                tokenize_all(testset, Tokenizer({cfg.segmentation.tokenizer}, vocab));
            }
            backends.push_back({name, lb.backend});
        } else {
            throw UsageError("unknown bench backend '" + name + "' (ngram, ngram-o<order>, oracle, ngram:<file>, external:<endpoint>)");
        }
    }

    BenchOptions bo;
    bo.segmentation = cfg.segmentation;
    bo.lds = cfg.lds;
    bo.workers = cfg.workers;
    const auto results = run_bench(testset, backends, a.ts, bo);
    out << bench_table(results);
    const std::string csv = bench_csv(results);
    if (!a.csv.empty()) write_file(a.csv, csv);
    if (!a.out_dir.empty()) {
        fs::create_directories(a.out_dir);
        write_file(fs::path(a.out_dir) / "bench.csv", csv);
    }
    const bool any_failed = std::any_of(results.begin(), results.end(), [](const BenchResult& r) { return r.failed; });
    return any_failed ? kPartial : kOk;
}

}  // namespace

ordered_json RunConfig::to_json() const {
    ordered_json j;
    j["alpha"] = lds.alpha;
    j["beta"] = lds.beta;
    j["gamma"] = lds.gamma;
    j["tau"] = lds.tau;
    j["mode"] = to_string(lds.mode);
    j["sample_size"] = lds.sample_size;
    j["seed"] = lds.seed;
    j["dsp_variant"] = to_string(lds.dsp_variant);
    j["segment_len"] = segmentation.segment_len;
    j["max_tokens"] = segmentation.max_tokens;
    j["tokenizer"] = to_string(segmentation.tokenizer);
    j["workers"] = workers;
    j["fraction"] = fraction;
    j["backend"] = backend;
    return j;
}

void RunConfig::apply(const json& j) {
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "alpha") lds.alpha = v.get<double>();
            else if (key == "beta") lds.beta = v.get<double>();
            else if (key == "gamma") lds.gamma = v.get<double>();
            else if (key == "tau") lds.tau = v.get<double>();
            else if (key == "mode") lds.mode = score_mode_from_string(v.get<std::string>());
            else if (key == "sample_size") lds.sample_size = v.get<std::size_t>();
            else if (key == "seed") lds.seed = v.get<std::uint64_t>();
            else if (key == "dsp_variant") lds.dsp_variant = dsp_variant_from_string(v.get<std::string>());
            else if (key == "segment_len") segmentation.segment_len = v.get<std::size_t>();
            else if (key == "max_tokens") segmentation.max_tokens = v.get<std::size_t>();
            else if (key == "tokenizer") segmentation.tokenizer = tokenizer_kind_from_string(v.get<std::string>());
            else if (key == "workers") workers = v.get<int>();
            else if (key == "fraction") fraction = v.get<double>();
            else if (key == "backend") backend = v.get<std::string>();
            else if (key == "profile") continue;
            else throw ConfigError("unknown config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

RunConfig default_profile() {
    RunConfig cfg;
    cfg.lds.alpha = 1.0;
    cfg.lds.beta = 1.0;
    cfg.lds.gamma = 1.0;
    cfg.lds.tau = 0.05;
    cfg.lds.mode = ScoreMode::sampled;
    cfg.lds.sample_size = 5000;
    cfg.lds.seed = 0;
    cfg.lds.dsp_variant = DspVariant::multiplicative;
    cfg.segmentation.segment_len = 128;
    cfg.segmentation.max_tokens = 32768;
    cfg.segmentation.tokenizer = TokenizerKind::whitespace;
    cfg.workers = 1;
    cfg.fraction = 0.5;
    return cfg;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"longdep: long-dependency scoring and selection of long-context training data"};
    app.require_subcommand(0, 1);
    bool show_config = false;
    app.add_flag("--show-config", show_config, "print the built-in default profile and exit");

    TrainArgs train;
    auto* t = app.add_subcommand("train-ngram", "train the built-in n-gram scorer");
    t->add_option("--input", train.input, "corpus path")->required();
    t->add_option("--format", train.format, "jsonl | plain-dir");
    t->add_option("--order", train.order, "n-gram order (1-5)");
    t->add_option("--k", train.k, "add-k smoothing constant");
    t->add_option("--cache-weight", train.cache_weight, "history-cache interpolation weight in [0, 1)");
    t->add_option("--tokenizer", train.tokenizer, "whitespace | byte");
    t->add_option("--out", train.out, "model file")->required();

    ScoreArgs score;
    auto* s = app.add_subcommand("score", "score documents and write per-document reports");
    s->add_option("--input", score.input, "corpus path");
    s->add_option("--format", score.format, "jsonl | plain-dir");
    s->add_option("--out-dir", score.out_dir, "output directory");
    s->add_flag("--emit-pairs", score.emit_pairs, "also write pairs.jsonl with every scored pair (for heatmap)");
    s->add_flag("--show-config", score.show_config, "print the effective configuration and exit");
    score.flags.add_to(*s, true);

    SelectArgs sel;
    auto* se = app.add_subcommand("select", "rank scored documents and write a selection manifest");
    se->add_option("--reports", sel.reports, "reports.jsonl from `score`")->required();
    se->add_option("--out-dir", sel.out_dir, "output directory")->required();
    se->add_option("--strategy", sel.strategy, "prolong | random | full");
    se->add_option("--fraction", sel.fraction, "retained fraction per source, in (0, 1]");
    se->add_option("--seed", sel.seed, "seed for the random strategy and arm");
    se->add_flag("--global", sel.global, "rank all sources together instead of per source");
    se->add_option("--passthrough-source", sel.passthrough, "source retained in full (repeatable)");
    se->add_option("--config", sel.config_file, "JSON config file");

    HeatmapArgs hm;
    auto* h = app.add_subcommand("heatmap", "render a document's dependency-strength matrix");
    h->add_option("--sidecar", hm.sidecar, "pairs.jsonl written by `score --emit-pairs`");
    h->add_option("--doc", hm.doc, "document id (default: first in sidecar)");
    h->add_option("--out", hm.out, "output path prefix; writes <prefix>.ppm and <prefix>.csv")->required();
    h->add_option("--scale", hm.scale, "linear | diverging");
    h->add_option("--value", hm.value, "dst | lds_pair");
    h->add_option("--cell-size", hm.cell_size, "pixels per cell");

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "accuracy and throughput on a synthetic labeled test set");
    b->add_option("--positives", bench.positives, "positive documents");
    b->add_option("--negatives", bench.negatives, "negative documents");
    b->add_option("--doc-len", bench.doc_len, "tokens per document");
    b->add_option("--synth-seed", bench.synth_seed, "test set seed");
    b->add_option("--backends", bench.backends, "ngram, ngram-o<order>, oracle, ngram:<file>, external:<endpoint>")
        ->delimiter(',');
    b->add_option("--samples-list", bench.ts, "comma-separated sample sizes T")->delimiter(',');
    b->add_option("--order", bench.order, "order of the trained n-gram backend");
    b->add_option("--k", bench.k, "add-k constant of the trained n-gram backend");
    b->add_option("--cache-weight", bench.cache_weight, "cache weight of the trained n-gram backend");
    b->add_option("--csv", bench.csv, "write the result table as CSV");
    b->add_option("--out-dir", bench.out_dir, "directory for bench.csv");
    bench.flags.add_to(*b, false);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "longdep: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (show_config) {
            out << show_config_json(default_profile()).dump(2) << "\n";
            return kOk;
        }
        if (*t) return cmd_train_ngram(train, out);
        if (*s) return cmd_score(score, out, err);
        if (*se) return cmd_select(sel, out);
        if (*h) return cmd_heatmap(hm, out);
        if (*b) return cmd_bench(bench, out);
        out << app.help();
        return kUsage;
    } catch (const UsageError& e) {
        err << "longdep: " << e.what() << "\n";
        return kUsage;
    } catch (const ConfigError& e) {
        err << "longdep: " << e.what() << "\n";
        return kUsage;
    } catch (const IngestError& e) {
        err << "longdep: " << e.what() << "\n";
        return kUsage;
    } catch (const BackendError& e) {
        err << "longdep: scorer unreachable: " << e.what() << "\n";
        return kBackendUnreachable;
    } catch (const std::exception& e) {
        err << "longdep: " << e.what() << "\n";
        return kFatal;
    }
}

}  // namespace longdep::cli
