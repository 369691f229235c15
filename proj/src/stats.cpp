#include "longdep/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace longdep::stats {

double mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double median(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double stddev(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double subset_mean_stderr(std::span<const double> population, std::size_t k) {
    const std::size_t n = population.size();
    if (k == 0 || n < 2 || k >= n) return 0.0;
    const double fpc = std::sqrt(static_cast<double>(n - k) / static_cast<double>(n - 1));
    return stddev(population) / std::sqrt(static_cast<double>(k)) * fpc;
}

std::vector<double> ranks(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson: need two equal-length samples");
    const double ma = mean(a), mb = mean(b);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

double spearman(std::span<const double> a, std::span<const double> b) {
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    return pearson(ra, rb);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

RankSumResult rank_sum_greater(std::span<const double> a, std::span<const double> b) {
    const std::size_t n1 = a.size(), n2 = b.size();
    if (n1 == 0 || n2 == 0) throw std::invalid_argument("rank_sum_greater: empty sample");
    std::vector<double> all(a.begin(), a.end());
    all.insert(all.end(), b.begin(), b.end());
    const auto r = ranks(all);
    double r1 = 0.0;
    for (std::size_t i = 0; i < n1; ++i) r1 += r[i];
    RankSumResult res;
    res.u = r1 - static_cast<double>(n1) * static_cast<double>(n1 + 1) / 2.0;

    // Tie correction: sum over tie groups of (t^3 - t).
    std::vector<double> sorted = all;
    std::sort(sorted.begin(), sorted.end());
    double ties = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const auto t = static_cast<double>(j - i);
        ties += t * t * t - t;
        i = j;
    }
    const double n = static_cast<double>(n1 + n2);
    const double mu = static_cast<double>(n1) * static_cast<double>(n2) / 2.0;
    const double var = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if (var <= 0.0) {
        res.z = 0.0;
        res.p_greater = 1.0;
        return res;
    }
    res.z = (res.u - mu - 0.5) / std::sqrt(var);
    res.p_greater = normal_sf(res.z);
    return res;
}

namespace {

double log_choose(double n, double k) { return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1); }

}  // namespace

double hypergeometric_upper_tail(std::size_t population, std::size_t successes, std::size_t draws, std::size_t k) {
    if (successes > population || draws > population) throw std::invalid_argument("hypergeometric: bad parameters");
    const std::size_t hi = std::min(successes, draws);
    const double denom = log_choose(static_cast<double>(population), static_cast<double>(draws));
    double p = 0.0;
    for (std::size_t x = k; x <= hi; ++x) {
        if (draws - x > population - successes) continue;
        p += std::exp(log_choose(static_cast<double>(successes), static_cast<double>(x)) +
                      log_choose(static_cast<double>(population - successes), static_cast<double>(draws - x)) - denom);
    }
    return std::min(p, 1.0);
}

double binomial_upper_tail(std::size_t n, double p, std::size_t k) {
    if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
    if (p >= 1.0) return k <= n ? 1.0 : 0.0;
    double tail = 0.0;
    for (std::size_t x = k; x <= n; ++x)
        tail += std::exp(log_choose(static_cast<double>(n), static_cast<double>(x)) + static_cast<double>(x) * std::log(p) +
                         static_cast<double>(n - x) * std::log1p(-p));
    return std::min(tail, 1.0);
}

}  // namespace longdep::stats
