#include "geh/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

namespace geh::stats {
namespace {

/// Midranks of the pooled sample, doubled so ties stay integral.
std::vector<std::int64_t> doubled_midranks(const std::vector<double>& pooled) {
    const auto n = pooled.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return pooled[i] < pooled[j]; });
    std::vector<std::int64_t> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        auto j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        // positions i..j (0-based) share rank ((i+1) + (j+1)) / 2
        const auto doubled = static_cast<std::int64_t>(i + j + 2);
        for (auto k = i; k <= j; ++k) ranks[order[k]] = doubled;
        i = j + 1;
    }
    return ranks;
}

double exact_two_sided(const std::vector<std::int64_t>& ranks, std::size_t n1, std::int64_t observed_2u) {
    const auto n = ranks.size();
    const auto n2 = n - n1;
    const std::int64_t max_sum = std::accumulate(ranks.begin(), ranks.end(), std::int64_t{0});
    // counts[k][s]: subsets of size k with doubled rank sum s
    std::vector<std::vector<double>> counts(n1 + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
    counts[0][0] = 1.0;
    for (auto r : ranks) {
        for (auto k = std::min(n1, n); k >= 1; --k) {
            auto& row = counts[k];
            const auto& prev = counts[k - 1];
            for (auto s = static_cast<std::int64_t>(max_sum); s >= r; --s) {
                row[static_cast<std::size_t>(s)] += prev[static_cast<std::size_t>(s - r)];
            }
        }
    }
    const auto center = static_cast<std::int64_t>(n1 * n2);  // 2 * E[U]
    const auto offset = static_cast<std::int64_t>(n1 * (n1 + 1));
    const auto observed_dev = std::llabs(observed_2u - center);
    double total = 0.0;
    double extreme = 0.0;
    for (std::int64_t s = 0; s <= max_sum; ++s) {
        const double c = counts[n1][static_cast<std::size_t>(s)];
        if (c == 0.0) continue;
        total += c;
        if (std::llabs(s - offset - center) >= observed_dev) extreme += c;
    }
    return std::min(1.0, extreme / total);
}

double log_choose(std::int64_t n, std::int64_t k) {
    return std::lgamma(static_cast<double>(n + 1)) - std::lgamma(static_cast<double>(k + 1)) -
           std::lgamma(static_cast<double>(n - k + 1));
}

void check_table(const Table2x2& t) {
    for (const auto& row : t) {
        for (auto c : row) {
            if (c < 0) throw Error(ErrorKind::DegenerateTable, "negative count");
        }
    }
    const auto r0 = t[0][0] + t[0][1];
    const auto r1 = t[1][0] + t[1][1];
    const auto c0 = t[0][0] + t[1][0];
    const auto c1 = t[0][1] + t[1][1];
    if (r0 == 0 || r1 == 0 || c0 == 0 || c1 == 0) {
        throw Error(ErrorKind::DegenerateTable, "a row or column sum is zero");
    }
}

}  // namespace

double quantile(std::span<const double> values, double p) {
    if (values.empty()) throw Error(ErrorKind::EmptyGroup, "quantile of an empty sample");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double mean(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorKind::EmptyGroup, "mean of an empty sample");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
    if (values.size() < 2) throw Error(ErrorKind::EmptyGroup, "standard deviation needs two values");
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

MannWhitneyResult mann_whitney(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw Error(ErrorKind::EmptyGroup, "Mann-Whitney needs two non-empty groups");
    const auto n1 = a.size();
    const auto n2 = b.size();
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = doubled_midranks(pooled);

    const std::int64_t r1 = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n1),
                                            std::int64_t{0});
    const auto doubled_u = r1 - static_cast<std::int64_t>(n1 * (n1 + 1));

    MannWhitneyResult result;
    result.u = 0.5 * static_cast<double>(doubled_u);
    const auto n = n1 + n2;
    if (n <= kMannWhitneyExactLimit) {
        result.exact = true;
        result.p = exact_two_sided(ranks, n1, doubled_u);
        return result;
    }

    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && sorted[j] == sorted[i]) ++j;
        const auto t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double dn = static_cast<double>(n);
    const double var = static_cast<double>(n1 * n2) / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    if (!(var > 0.0)) {
        result.p = 1.0;
        return result;
    }
    const double dev = std::abs(result.u - 0.5 * static_cast<double>(n1 * n2));
    const double z = std::max(0.0, dev - 0.5) / std::sqrt(var);
    result.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    return result;
}

double chi_square_1df_sf(double x) {
    if (x <= 0.0) return 1.0;
    return std::erfc(std::sqrt(x / 2.0));
}

ChiSquareResult chi_square_2x2(const Table2x2& t) {
    check_table(t);
    const double a = static_cast<double>(t[0][0]);
    const double b = static_cast<double>(t[0][1]);
    const double c = static_cast<double>(t[1][0]);
    const double d = static_cast<double>(t[1][1]);
    const double n = a + b + c + d;
    const double corrected = std::max(0.0, std::abs(a * d - b * c) - n / 2.0);
    ChiSquareResult r;
    r.statistic = n * corrected * corrected / ((a + b) * (c + d) * (a + c) * (b + d));
    r.p = chi_square_1df_sf(r.statistic);
    return r;
}

double min_expected_count(const Table2x2& t) {
    check_table(t);
    const double n = static_cast<double>(t[0][0] + t[0][1] + t[1][0] + t[1][1]);
    double lowest = n;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const double row = static_cast<double>(t[i][0] + t[i][1]);
            const double col = static_cast<double>(t[0][j] + t[1][j]);
            lowest = std::min(lowest, row * col / n);
        }
    }
    return lowest;
}

double fisher_exact_2x2(const Table2x2& t) {
    check_table(t);
    const auto r0 = t[0][0] + t[0][1];
    const auto r1 = t[1][0] + t[1][1];
    const auto c0 = t[0][0] + t[1][0];
    const auto n = r0 + r1;
    const auto log_prob = [&](std::int64_t x) {
        return log_choose(r0, x) + log_choose(r1, c0 - x) - log_choose(n, c0);
    };
    const double observed = log_prob(t[0][0]);
    const auto lo = std::max<std::int64_t>(0, c0 - r1);
    const auto hi = std::min(r0, c0);
    double p = 0.0;
    for (auto x = lo; x <= hi; ++x) {
        const double lp = log_prob(x);
        if (lp <= observed + 1e-7) p += std::exp(lp);
    }
    return std::min(1.0, p);
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw Error(ErrorKind::EmptyGroup, "Welch test needs two values per group");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double va = std::pow(stddev(a), 2) / na;
    const double vb = std::pow(stddev(b), 2) / nb;
    WelchResult r;
    if (!(va + vb > 0.0)) {
        r.p = mean(a) == mean(b) ? 1.0 : 0.0;
        return r;
    }
    r.t = (mean(a) - mean(b)) / std::sqrt(va + vb);
    r.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    const boost::math::students_t dist(r.df);
    r.p = std::min(1.0, 2.0 * boost::math::cdf(dist, -std::abs(r.t)));
    return r;
}

}  // namespace geh::stats
