#include "longdep/lds.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <stdexcept>
#include <unordered_set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "longdep/errors.hpp"
#include "longdep/random.hpp"

namespace longdep {

std::string_view to_string(ScoreMode m) { return m == ScoreMode::exact ? "exact" : "sampled"; }

std::string_view to_string(DspVariant v) {
    switch (v) {
        case DspVariant::multiplicative: return "multiplicative";
        case DspVariant::additive: return "additive";
        case DspVariant::none: return "none";
    }
    return "?";
}

ScoreMode score_mode_from_string(std::string_view s) {
    if (s == "exact") return ScoreMode::exact;
    if (s == "sampled") return ScoreMode::sampled;
    throw ConfigError("unknown mode '" + std::string(s) + "' (expected exact|sampled)");
}

DspVariant dsp_variant_from_string(std::string_view s) {
    if (s == "multiplicative") return DspVariant::multiplicative;
    if (s == "additive") return DspVariant::additive;
    if (s == "none") return DspVariant::none;
    throw ConfigError("unknown DSP variant '" + std::string(s) + "' (expected multiplicative|additive|none)");
}

void LdsConfig::validate() const {
    auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!finite_nonneg(alpha)) throw ConfigError("alpha must be finite and >= 0");
    if (!finite_nonneg(beta)) throw ConfigError("beta must be finite and >= 0");
    if (!finite_nonneg(gamma)) throw ConfigError("gamma must be finite and >= 0");
    if (!std::isfinite(tau)) throw ConfigError("tau must be finite");
    if (sample_size == 0) throw ConfigError("sample size T must be >= 1");
}

double dst(double ppl_i, double ppl_i_given_j) {
    if (!std::isfinite(ppl_i) || !std::isfinite(ppl_i_given_j) || !(ppl_i > 0.0) || !(ppl_i_given_j > 0.0))
        throw ScoringError("dst: perplexities must be positive and finite");
    return (ppl_i - ppl_i_given_j) / ppl_i;
}

double ddi(std::size_t i, std::size_t j, std::size_t n_segments) {
    if (n_segments < 2 || j < 1 || j >= i || i > n_segments)
        throw std::invalid_argument("ddi: requires 1 <= j < i <= N and N >= 2");
    return static_cast<double>(i - j) / static_cast<double>(n_segments - 1);
}

double dsp(std::span<const double> delta_ppls) {
    if (delta_ppls.empty()) throw std::invalid_argument("dsp: empty delta-PPL row");
    for (double d : delta_ppls)
        if (!std::isfinite(d)) throw ScoringError("dsp: non-finite delta-PPL");
    const std::size_t m = delta_ppls.size();
    if (m == 1) return 0.0;

    const double top = *std::max_element(delta_ppls.begin(), delta_ppls.end());
    double z = 0.0;
    for (double d : delta_ppls) z += std::exp(d - top);
    // H = -sum p log p with log p = (d - top) - log z, i.e. H = log z - sum p (d - top).
    double weighted = 0.0;
    for (double d : delta_ppls) {
        const double shifted = d - top;
        if (std::isinf(shifted)) continue;  // exp underflows to 0; the term is 0
        weighted += std::exp(shifted) / z * shifted;
    }
    const double entropy = std::log(z) - weighted;
    const double e_max = std::log(static_cast<double>(m));
    return std::clamp((e_max - entropy) / e_max, 0.0, 1.0);
}

double lds_pair(const PairScore& pair, double dsp_i, const LdsConfig& cfg) {
    const double base = cfg.alpha * pair.dst + cfg.beta * pair.ddi;
    switch (cfg.dsp_variant) {
        case DspVariant::multiplicative: return base * dsp_i;
        case DspVariant::additive: return base + cfg.gamma * dsp_i;
        case DspVariant::none: return base;
    }
    throw ConfigError("unknown DSP variant");
}

std::size_t pair_count(std::size_t n_segments) {
    return n_segments < 2 ? 0 : n_segments * (n_segments - 1) / 2;
}

namespace {

// Target-major linear index: pairs (j, i) ordered by i, then j.
std::pair<std::size_t, std::size_t> decode_pair(std::uint64_t idx) {
    // a = i - 1 satisfies a(a-1)/2 <= idx < a(a+1)/2
    auto a = static_cast<std::uint64_t>((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(idx))) / 2.0);
    while (a * (a - 1) / 2 > idx) --a;
    while ((a + 1) * a / 2 <= idx) ++a;
    const std::uint64_t j0 = idx - a * (a - 1) / 2;
    return {static_cast<std::size_t>(j0 + 1), static_cast<std::size_t>(a + 1)};
}

struct RowView {
    std::size_t target;     // 1-based i
    std::size_t begin, end; // range into the pair list
};

// Groups a target-major pair list into rows sharing the same target.
std::vector<RowView> rows_of(std::span<const std::pair<std::size_t, std::size_t>> pairs) {
    std::vector<RowView> rows;
    std::size_t b = 0;
    while (b < pairs.size()) {
        std::size_t e = b;
        while (e < pairs.size() && pairs[e].second == pairs[b].second) ++e;
        rows.push_back({pairs[b].second, b, e});
        b = e;
    }
    return rows;
}

// Shared reduction: given unconditional and conditional perplexities for a
// target-major pair list, computes DST/DDI/DSP and accumulates LDS in list order.
void accumulate(ScoreReport& report, std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> pairs,
                std::span<const double> uncond, std::span<const double> cond, const LdsConfig& cfg, bool keep_pairs) {
    double total = 0.0;
    std::vector<double> row;
    for (const RowView& r : rows_of(pairs)) {
        const double u = uncond[r.target - 1];
        row.clear();
        for (std::size_t p = r.begin; p < r.end; ++p) row.push_back(u - cond[p]);
        const double dsp_i = dsp(row);
        report.dsp_per_target.emplace_back(r.target, dsp_i);
        for (std::size_t p = r.begin; p < r.end; ++p) {
            PairScore ps;
            ps.i = r.target;
            ps.j = pairs[p].first;
            ps.delta_ppl = row[p - r.begin];
            ps.dst = dst(u, cond[p]);
            ps.ddi = ddi(ps.i, ps.j, n);
            ps.indicator = ps.dst > cfg.tau ? 1 : 0;
            ps.lds_pair = lds_pair(ps, dsp_i, cfg);
            if (ps.indicator) total += ps.lds_pair;
            if (keep_pairs) report.pairs.push_back(ps);
        }
    }
    if (!std::isfinite(total)) throw ScoringError("non-finite LDS for document '" + report.doc_id + "'");
    report.lds = total;
    report.pairs_evaluated = pairs.size();
}

std::vector<std::pair<std::size_t, std::size_t>> all_pairs(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(pair_count(n));
    for (std::size_t i = 2; i <= n; ++i)
        for (std::size_t j = 1; j < i; ++j) pairs.emplace_back(j, i);
    return pairs;
}

ScoreReport make_report(const SegmentGrid& grid, const LdsConfig& cfg, ScoreMode mode) {
    ScoreReport r;
    r.doc_id = grid.doc_id();
    r.source = grid.source();
    r.mode = mode;
    r.n_segments = grid.size();
    r.config = cfg;
    r.config.mode = mode;
    return r;
}

}  // namespace

SampledPairSet sample_pairs(std::size_t n_segments, std::size_t sample_size, std::uint64_t seed) {
    if (n_segments < 2) throw std::invalid_argument("sample_pairs: N must be >= 2");
    if (sample_size == 0) throw std::invalid_argument("sample_pairs: T must be >= 1");
    SampledPairSet out;
    out.seed = seed;
    const std::uint64_t total = pair_count(n_segments);
    if (sample_size >= total) {
        out.pairs = all_pairs(n_segments);
        return out;
    }
    // Floyd's algorithm: T distinct indices from [0, total).
    std::mt19937_64 rng(seed);
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(sample_size * 2);
    for (std::uint64_t r = total - sample_size; r < total; ++r) {
        const std::uint64_t t = uniform_upto(rng, r);
        if (!chosen.insert(t).second) chosen.insert(r);
    }
    std::vector<std::uint64_t> idx(chosen.begin(), chosen.end());
    std::sort(idx.begin(), idx.end());
    out.pairs.reserve(idx.size());
    for (std::uint64_t v : idx) out.pairs.push_back(decode_pair(v));
    return out;
}

std::vector<double> conditional_ppls(const SegmentGrid& grid, const PerplexityBackend& backend,
                                     std::span<const std::pair<std::size_t, std::size_t>> pairs, int threads) {
    std::vector<double> out(pairs.size());
    std::exception_ptr failure;
    std::mutex failure_mu;
    const auto count = static_cast<std::int64_t>(pairs.size());
#ifdef _OPENMP
    const int team = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 32) num_threads(team)
#endif
    for (std::int64_t p = 0; p < count; ++p) {
        {
            std::lock_guard lock(failure_mu);
            if (failure) continue;
        }
        try {
            const auto [j, i] = pairs[static_cast<std::size_t>(p)];
            out[static_cast<std::size_t>(p)] = ppl_given(backend, grid.segment(i - 1), grid.segment(j - 1));
        } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
        }
    }
    (void)threads;
    if (failure) std::rethrow_exception(failure);
    return out;
}

ScoreReport lds_exact(const SegmentGrid& grid, const PerplexityBackend& backend, const LdsConfig& cfg,
                      PplCache& cache, const ScoreOptions& opts) {
    cfg.validate();
    ScoreReport report = make_report(grid, cfg, ScoreMode::exact);
    const auto uncond = cached_unconditional(backend, grid, cache);
    const auto pairs = all_pairs(grid.size());
    const auto cond = conditional_ppls(grid, backend, pairs, opts.threads);
    accumulate(report, grid.size(), pairs, uncond, cond, cfg, opts.keep_pairs);
    return report;
}

ScoreReport lds_sampled(const SegmentGrid& grid, const PerplexityBackend& backend, const LdsConfig& cfg,
                        PplCache& cache, const ScoreOptions& opts) {
    cfg.validate();
    ScoreReport report = make_report(grid, cfg, ScoreMode::sampled);
    const auto uncond = cached_unconditional(backend, grid, cache);
    const auto sample = sample_pairs(grid.size(), cfg.sample_size, cfg.seed);
    const auto cond = conditional_ppls(grid, backend, sample.pairs, opts.threads);
    accumulate(report, grid.size(), sample.pairs, uncond, cond, cfg, opts.keep_pairs);
    return report;
}

ScoreReport score_document(const SegmentGrid& grid, const PerplexityBackend& backend, const LdsConfig& cfg,
                           PplCache& cache, const ScoreOptions& opts) {
    return cfg.mode == ScoreMode::exact ? lds_exact(grid, backend, cfg, cache, opts)
                                        : lds_sampled(grid, backend, cfg, cache, opts);
}

namespace reference {

namespace {

ScoreReport serial_over(const SegmentGrid& grid, const PerplexityBackend& backend, const LdsConfig& cfg,
                        ScoreMode mode, std::span<const std::pair<std::size_t, std::size_t>> pairs) {
    cfg.validate();
    ScoreReport report = make_report(grid, cfg, mode);
    const std::size_t n = grid.size();
    std::vector<double> uncond(n);
    for (std::size_t s = 0; s < n; ++s) uncond[s] = ppl(backend, grid.segment(s));

    double total = 0.0;
    std::size_t p = 0;
    while (p < pairs.size()) {
        const std::size_t i = pairs[p].second;
        std::vector<std::size_t> js;
        std::vector<double> deltas;
        std::vector<double> given;
        for (; p < pairs.size() && pairs[p].second == i; ++p) {
            const std::size_t j = pairs[p].first;
            const double c = ppl_given(backend, grid.segment(i - 1), grid.segment(j - 1));
            js.push_back(j);
            given.push_back(c);
            deltas.push_back(uncond[i - 1] - c);
        }
        const double dsp_i = dsp(deltas);
        report.dsp_per_target.emplace_back(i, dsp_i);
        for (std::size_t k = 0; k < js.size(); ++k) {
            PairScore ps{i, js[k], deltas[k], dst(uncond[i - 1], given[k]), ddi(i, js[k], n), 0, 0.0};
            ps.indicator = ps.dst > cfg.tau ? 1 : 0;
            ps.lds_pair = lds_pair(ps, dsp_i, cfg);
            if (ps.indicator) total += ps.lds_pair;
            report.pairs.push_back(ps);
        }
    }
    report.lds = total;
    report.pairs_evaluated = pairs.size();
    return report;
}

}  // namespace

ScoreReport lds_exact_serial(const SegmentGrid& grid, const PerplexityBackend& backend, const LdsConfig& cfg) {
    const auto pairs = all_pairs(grid.size());
    return serial_over(grid, backend, cfg, ScoreMode::exact, pairs);
}

ScoreReport lds_sampled_serial(const SegmentGrid& grid, const PerplexityBackend& backend, const LdsConfig& cfg) {
    const auto sample = sample_pairs(grid.size(), cfg.sample_size, cfg.seed);
    return serial_over(grid, backend, cfg, ScoreMode::sampled, sample.pairs);
}

}  // namespace reference

}  // namespace longdep
