#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "geh/error.hpp"

namespace geh::stats {

/// Linear-interpolation quantile (Hyndman-Fan type 7), p in [0, 1].
double quantile(std::span<const double> values, double p);

double mean(std::span<const double> values);
/// Sample standard deviation (n - 1 denominator).
double stddev(std::span<const double> values);

struct MannWhitneyResult {
    double u = 0.0;  // U of the first group: sum over pairs of [a > b] + 0.5 [a == b]
    double p = 1.0;  // two-sided
    bool exact = false;
};

/// Exact permutation p-value when n1 + n2 <= kMannWhitneyExactLimit,
/// otherwise normal approximation with tie and continuity correction.
inline constexpr std::size_t kMannWhitneyExactLimit = 16;
MannWhitneyResult mann_whitney(std::span<const double> a, std::span<const double> b);

/// 2x2 counts, rows = groups, columns = present/absent.
using Table2x2 = std::array<std::array<std::int64_t, 2>, 2>;

struct ChiSquareResult {
    double statistic = 0.0;
    double p = 1.0;
};

/// Yates-corrected Pearson chi-square with 1 degree of freedom.
ChiSquareResult chi_square_2x2(const Table2x2& table);

/// Two-sided Fisher exact test (sums tables no more likely than observed).
double fisher_exact_2x2(const Table2x2& table);

/// Smallest expected cell count under independence.
double min_expected_count(const Table2x2& table);

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
};

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// Upper tail of chi-square with one degree of freedom.
double chi_square_1df_sf(double x);

}  // namespace geh::stats
