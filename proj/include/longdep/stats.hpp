#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace longdep::stats {

double mean(std::span<const double> xs);
double median(std::span<const double> xs);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> xs);

/// Standard error of the mean of a k-subset drawn without replacement from
/// `population`, including the finite-population correction.
double subset_mean_stderr(std::span<const double> population, std::size_t k);

/// Average ranks (1-based), ties share the mean rank.
std::vector<double> ranks(std::span<const double> xs);

double pearson(std::span<const double> a, std::span<const double> b);
double spearman(std::span<const double> a, std::span<const double> b);

struct RankSumResult {
    double u = 0.0;        // Mann-Whitney U of the first sample
    double z = 0.0;
    double p_greater = 1.0;  // one-sided: first sample stochastically larger
};

/// Mann-Whitney U with normal approximation, tie-corrected variance and
/// continuity correction.
RankSumResult rank_sum_greater(std::span<const double> a, std::span<const double> b);

/// P(X >= k) for X ~ Hypergeometric(population, successes, draws).
double hypergeometric_upper_tail(std::size_t population, std::size_t successes, std::size_t draws, std::size_t k);

/// P(X >= k) for X ~ Binomial(n, p).
double binomial_upper_tail(std::size_t n, double p, std::size_t k);

/// Standard normal upper tail.
double normal_sf(double z);

}  // namespace longdep::stats
