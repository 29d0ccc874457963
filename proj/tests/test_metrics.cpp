#include <doctest.h>

#include <cmath>
#include <random>

#include "geh/metrics.hpp"
#include "geh/stats.hpp"
#include "support.hpp"

using namespace geh;
using namespace geh::metrics;

namespace {

struct Case {
    std::vector<int> labels;
    std::vector<double> scores;
};

Case random_case(std::mt19937_64& rng, std::size_t n, int levels) {
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> level(0, levels - 1);
    Case c;
    do {
        c.labels.clear();
        c.scores.clear();
        for (std::size_t i = 0; i < n; ++i) {
            c.labels.push_back(coin(rng));
            c.scores.push_back(level(rng) / static_cast<double>(levels));
        }
    } while (std::count(c.labels.begin(), c.labels.end(), 1) == 0 ||
             std::count(c.labels.begin(), c.labels.end(), 0) == 0);
    return c;
}

/// Scan every observed score as an inclusive cut in the given orientation.
ThresholdChoice scan_thresholds(const Case& c, double min_sens) {
    std::vector<double> pos;
    std::vector<double> neg;
    for (std::size_t i = 0; i < c.labels.size(); ++i) (c.labels[i] ? pos : neg).push_back(c.scores[i]);
    const double auc = oracle::auc_pairs(c.labels, c.scores);
    const bool high = auc >= 0.5;
    ThresholdChoice best;
    bool have = false;
    for (double t : c.scores) {
        double tp = 0, tn = 0;
        for (double s : pos) tp += high ? s >= t : s <= t;
        for (double s : neg) tn += high ? s < t : s > t;
        const double sens = tp / pos.size();
        const double spec = tn / neg.size();
        if (sens + 1e-12 < min_sens) continue;
        if (!have || spec > best.specificity || (spec == best.specificity && sens > best.sensitivity)) {
            best.threshold = t;
            best.sensitivity = sens;
            best.specificity = spec;
            have = true;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("ROC AUC anchors") {
    CHECK(roc_auc(std::vector<int>{0, 0, 1, 1}, std::vector<double>{0.1, 0.2, 0.8, 0.9}).auc == 1.0);
    CHECK(roc_auc(std::vector<int>{0, 1, 0, 1}, std::vector<double>{0.5, 0.5, 0.5, 0.5}).auc == 0.5);
    CHECK(roc_auc(std::vector<int>{1, 0, 1, 0}, std::vector<double>{0.9, 0.8, 0.7, 0.1}).auc == 0.75);
    CHECK_THROWS_AS(roc_auc(std::vector<int>{1, 1}, std::vector<double>{0.1, 0.2}), Error);
}

TEST_CASE("AUC equals pair counting and the Mann-Whitney U bridge") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        const auto c = random_case(rng, 2 + trial % 29, 2 + trial % 7);
        const auto roc = roc_auc(c.labels, c.scores);
        CHECK(std::abs(roc.auc - oracle::auc_pairs(c.labels, c.scores)) <= 1e-12);
        std::vector<double> pos;
        std::vector<double> neg;
        for (std::size_t i = 0; i < c.labels.size(); ++i) (c.labels[i] ? pos : neg).push_back(c.scores[i]);
        const double u = stats::mann_whitney(pos, neg).u;
        CHECK(std::abs(roc.auc - u / static_cast<double>(pos.size() * neg.size())) <= 1e-12);

        for (std::size_t k = 1; k < roc.points.size(); ++k) {
            CHECK(roc.points[k].fpr >= roc.points[k - 1].fpr);
            CHECK(roc.points[k].tpr >= roc.points[k - 1].tpr);
        }
        CHECK(roc.points.front().fpr == 0.0);
        CHECK(roc.points.back().tpr == 1.0);

        auto transformed = c.scores;
        for (auto& s : transformed) s = std::exp(3.0 * s) - 2.0;
        CHECK(roc_auc(c.labels, transformed).auc == roc.auc);
    }
}

TEST_CASE("average precision anchors and brute force") {
    CHECK(pr_aucpr(std::vector<int>{0, 0, 1, 1}, std::vector<double>{0.1, 0.2, 0.8, 0.9}).average_precision == 1.0);
    std::vector<int> labels(10, 0);
    labels[9] = 1;
    std::vector<double> scores;
    for (int i = 0; i < 10; ++i) scores.push_back(1.0 - i / 10.0);
    CHECK(pr_aucpr(labels, scores).average_precision == doctest::Approx(0.1));
    CHECK_THROWS_AS(pr_aucpr(std::vector<int>{0, 0}, std::vector<double>{0.1, 0.2}), Error);

    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 500; ++trial) {
        const auto c = random_case(rng, 2 + trial % 19, 2 + trial % 9);
        const auto pr = pr_aucpr(c.labels, c.scores);
        const auto exact = oracle::average_precision_exact(c.labels, c.scores);
        CHECK(pr.average_precision == boost::rational_cast<double>(exact));
        for (std::size_t k = 1; k < pr.points.size(); ++k) CHECK(pr.points[k].recall >= pr.points[k - 1].recall);
    }
}

TEST_CASE("threshold rule") {
    SUBCASE("perfect separation") {
        const auto t = choose_threshold(std::vector<int>{0, 0, 1, 1}, std::vector<double>{0.1, 0.2, 0.8, 0.9});
        CHECK(t.sensitivity == 1.0);
        CHECK(t.specificity == 1.0);
    }
    SUBCASE("seventeen positives reach 16/17") {
        std::mt19937_64 rng(12);
        std::normal_distribution<double> n;
        std::vector<int> labels;
        std::vector<double> scores;
        for (int i = 0; i < 17; ++i) {
            labels.push_back(1);
            scores.push_back(n(rng) + 0.5);
        }
        for (int i = 0; i < 65; ++i) {
            labels.push_back(0);
            scores.push_back(n(rng));
        }
        const auto t = choose_threshold(labels, scores);
        CHECK(t.confusion.tp == 16);
        CHECK(t.sensitivity == 16.0 / 17.0);
        CHECK(std::round(t.sensitivity * 10000.0) / 100.0 == 94.12);
    }
    SUBCASE("matches an exhaustive scan") {
        std::mt19937_64 rng(13);
        for (int trial = 0; trial < 300; ++trial) {
            const auto c = random_case(rng, 20, 2 + trial % 15);
            const auto got = choose_threshold(c.labels, c.scores);
            const auto want = scan_thresholds(c, 0.9);
            CHECK(got.sensitivity == want.sensitivity);
            CHECK(got.specificity == want.specificity);
            const auto conf = confusion_at(c.labels, c.scores, got.threshold, got.orientation);
            CHECK(conf.sensitivity() == got.sensitivity);
            CHECK(conf.specificity() == got.specificity);
        }
    }
    SUBCASE("low-is-positive orientation") {
        const auto t = choose_threshold(std::vector<int>{1, 1, 0, 0}, std::vector<double>{0.1, 0.2, 0.8, 0.9});
        CHECK(t.orientation == Orientation::LowIsPositive);
        CHECK(t.specificity == 1.0);
        CHECK(predicts_positive(0.2, t.threshold, t.orientation));
    }
}

TEST_CASE("achieved sensitivity is k/P with k >= ceil(0.9 P)") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n;
    for (int positives = 5; positives <= 40; ++positives) {
        std::vector<int> labels;
        std::vector<double> scores;
        for (int i = 0; i < positives; ++i) {
            labels.push_back(1);
            scores.push_back(n(rng) + 0.8);
        }
        for (int i = 0; i < 4 * positives; ++i) {
            labels.push_back(0);
            scores.push_back(n(rng));
        }
        const auto t = choose_threshold(labels, scores);
        const auto k = t.confusion.tp;
        CHECK(k >= static_cast<std::int64_t>(std::ceil(0.9 * positives - 1e-9)));
        CHECK(t.sensitivity == static_cast<double>(k) / positives);
    }
}

TEST_CASE("F2 identities") {
    CHECK(f2({10, 0, 5, 0}) == 1.0);
    // precision 0.5, recall 1.0
    CHECK(f2({4, 4, 0, 0}) == doctest::Approx(2.5 / 3.0));
    CHECK(f2({16, 45, 20, 1}) == doctest::Approx(0.6202).epsilon(1e-4));
    CHECK(f2({0, 3, 4, 2}) == 0.0);
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> count(0, 60);
    for (int trial = 0; trial < 1000; ++trial) {
        const Confusion c{count(rng) + 1, count(rng), count(rng), count(rng)};
        const double p = static_cast<double>(c.tp) / (c.tp + c.fp);
        const double r = static_cast<double>(c.tp) / (c.tp + c.fn);
        CHECK(f2(c) == doctest::Approx(5 * p * r / (4 * p + r)).epsilon(1e-12));
    }
}
