#include <doctest.h>

#include <numeric>
#include <random>

#include "geh/gbt.hpp"
#include "tree_oracle.hpp"

using namespace geh;
using namespace geh::gbt;

namespace {

struct Dataset {
    std::vector<double> x;
    std::vector<int> y;
    std::size_t cols = 0;
    DataView view() const { return {x, cols, y}; }
    std::vector<std::string> names() const {
        std::vector<std::string> n;
        for (std::size_t c = 0; c < cols; ++c) n.push_back("f" + std::to_string(c));
        return n;
    }
};

Dataset random_dataset(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::normal_distribution<double> n;
    Dataset d;
    d.cols = cols;
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double v = n(rng);
            d.x.push_back(v);
            s += (c % 2 ? -0.7 : 1.0) * v * (c < 3 ? 1.0 : 0.2);
        }
        d.y.push_back(s + n(rng) > 0.3 ? 1 : 0);
    }
    return d;
}

}  // namespace

TEST_CASE("gain and leaf weight formulas on a toy node") {
    const std::vector<double> g = {0.4, -0.6, 0.2, -0.5, 0.3, 0.1};
    const std::vector<double> h = {0.24, 0.24, 0.16, 0.25, 0.21, 0.09};
    for (std::size_t k = 1; k < g.size(); ++k) {
        double gl = 0, hl = 0, gr = 0, hr = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            (i < k ? gl : gr) += g[i];
            (i < k ? hl : hr) += h[i];
        }
        const double hand = 0.5 * (gl * gl / (hl + 1.0) + gr * gr / (hr + 1.0) - (gl + gr) * (gl + gr) / (hl + hr + 1.0)) - 0.1;
        CHECK(std::abs(split_gain(gl, hl, gr, hr, 1.0, 0.1) - hand) <= 1e-12);
    }
    CHECK(leaf_weight(2.0, 3.0, 1.0) == -0.5);
    CHECK(gain_improves(1e-300, 0.0));
    CHECK_FALSE(gain_improves(0.0, 0.0));
    CHECK_FALSE(gain_improves(1.0 + 1e-15, 1.0));
    CHECK(gain_improves(1.0 + 1e-9, 1.0));
}

TEST_CASE("separable step is split between -1 and 1") {
    Dataset d{{-2, -1, 1, 2}, {0, 0, 1, 1}, 1};
    TrainConfig cfg;
    cfg.num_rounds = 1;
    cfg.min_child_hessian = 0.0;
    const auto m = fit(d.view(), {"x"}, cfg);
    REQUIRE(m.trees.size() == 1);
    const auto& root = m.trees[0].nodes[0];
    CHECK(root.feature == 0);
    CHECK(root.threshold == 0.0);
    const auto p = predict(m, d.x, 1);
    for (std::size_t i = 0; i < 4; ++i) CHECK((p[i] > 0.5) == (d.y[i] == 1));
}

TEST_CASE("huge lambda keeps predictions at the base rate") {
    std::mt19937_64 rng(1);
    const auto d = random_dataset(rng, 100, 3);
    TrainConfig cfg;
    cfg.lambda = 1e12;
    cfg.num_rounds = 5;
    const auto m = fit(d.view(), d.names(), cfg);
    const double base = sigmoid(m.base_score);
    const double prevalence = std::accumulate(d.y.begin(), d.y.end(), 0.0) / 100.0;
    CHECK(base == doctest::Approx(prevalence));
    for (double p : predict(m, d.x, 3)) CHECK(p == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("first tree equals the exhaustive split search") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const auto d = random_dataset(rng, 200, 5);
        TrainConfig cfg;
        cfg.num_rounds = 1;
        const auto m = fit(d.view(), d.names(), cfg);

        const double p0 = sigmoid(m.base_score);
        std::vector<double> g;
        std::vector<double> h;
        for (int y : d.y) {
            g.push_back(p0 - y);
            h.push_back(p0 * (1 - p0));
        }
        oracle::SplitProblem problem{d.x, d.cols, g, h};
        std::vector<std::size_t> rows(200);
        std::iota(rows.begin(), rows.end(), 0);
        const auto expected = oracle::exhaustive_tree(problem, rows, 0);
        CHECK(oracle::same_tree(m.trees[0], 0, *expected));
    }
}

TEST_CASE("training loss does not increase") {
    std::mt19937_64 rng(5);
    for (double eta : {0.01, 0.1, 0.3}) {
        const auto d = random_dataset(rng, 150, 4);
        TrainConfig cfg;
        cfg.eta = eta;
        Trainer trainer(d.view(), d.names(), cfg);
        double previous = mean_log_loss(trainer.ensemble(), d.view());
        for (int r = 0; r < 60; ++r) {
            trainer.add_round();
            const double loss = mean_log_loss(trainer.ensemble(), d.view());
            CHECK(loss <= previous + 1e-12);
            previous = loss;
        }
    }
}

TEST_CASE("trainer margins match a fresh prediction") {
    std::mt19937_64 rng(6);
    const auto d = random_dataset(rng, 80, 3);
    Trainer trainer(d.view(), d.names(), TrainConfig{});
    for (int r = 0; r < 10; ++r) trainer.add_round();
    for (std::size_t i = 0; i < 80; ++i) {
        CHECK(trainer.margins()[i] ==
              doctest::Approx(trainer.ensemble().margin(std::span<const double>(d.x).subspan(i * 3, 3))));
    }
}

TEST_CASE("monotone transform of a feature keeps the partition") {
    std::mt19937_64 rng(7);
    const auto d = random_dataset(rng, 120, 3);
    auto t = d;
    for (std::size_t r = 0; r < 120; ++r) t.x[r * 3 + 1] = std::exp(2.0 * d.x[r * 3 + 1]) + 5.0;
    TrainConfig cfg;
    cfg.num_rounds = 15;
    const auto a = fit(d.view(), d.names(), cfg);
    const auto b = fit(t.view(), t.names(), cfg);
    const auto pa = predict(a, d.x, 3);
    const auto pb = predict(b, t.x, 3);
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == doctest::Approx(pb[i]).epsilon(1e-12));
    for (std::size_t k = 0; k < a.trees.size(); ++k) {
        REQUIRE(a.trees[k].nodes.size() == b.trees[k].nodes.size());
        for (std::size_t n = 0; n < a.trees[k].nodes.size(); ++n) CHECK(a.trees[k].nodes[n].feature == b.trees[k].nodes[n].feature);
    }
}

TEST_CASE("predictions of degenerate models") {
    Ensemble empty;
    empty.base_score = 0.4;
    empty.manifest = {"a"};
    const std::vector<double> row = {1.0};
    CHECK(predict_one(empty, row) == doctest::Approx(1.0 / (1.0 + std::exp(-0.4))));

    Ensemble leaf = empty;
    leaf.eta = 0.3;
    Tree t;
    t.nodes.push_back(Node{});
    t.nodes[0].weight = 2.0;
    leaf.trees.push_back(t);
    CHECK(predict_one(leaf, row) == doctest::Approx(sigmoid(0.4 + 0.6)));

    CHECK(sigmoid(1000.0) < 1.0);
    CHECK(sigmoid(-1000.0) > 0.0);
    CHECK_THROWS_AS(predict_one(leaf, std::vector<double>{1.0, 2.0}), Error);
}

TEST_CASE("gain importance") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n;
    Dataset d;
    d.cols = 4;
    for (int r = 0; r < 300; ++r) {
        double informative = 0.0;
        for (int c = 0; c < 4; ++c) {
            const double v = n(rng);
            d.x.push_back(v);
            if (c == 2) informative = v;
        }
        d.y.push_back(informative > 0.2 ? 1 : 0);
    }
    TrainConfig cfg;
    cfg.num_rounds = 20;
    const auto m = fit(d.view(), d.names(), cfg);
    const auto imp = importance_gain(m);
    REQUIRE(imp.has_splits);
    double total = 0.0;
    for (const auto& e : imp.entries) total += e.percent;
    CHECK(total == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(imp.entries[2].percent >= 90.0);

    // hand ledger of recorded gains
    std::vector<double> ledger(4, 0.0);
    for (const auto& t : m.trees) {
        for (const auto& node : t.nodes) {
            if (!node.is_leaf()) ledger[static_cast<std::size_t>(node.feature)] += node.gain;
        }
    }
    const double sum = std::accumulate(ledger.begin(), ledger.end(), 0.0);
    for (std::size_t f = 0; f < 4; ++f) CHECK(imp.entries[f].percent == doctest::Approx(100.0 * ledger[f] / sum));

    Ensemble stump;
    stump.manifest = {"a", "b"};
    Tree leaf_only;
    leaf_only.nodes.push_back(Node{});
    stump.trees.push_back(leaf_only);
    const auto none = importance_gain(stump);
    CHECK_FALSE(none.has_splits);
    CHECK(none.entries.empty());
}

TEST_CASE("serialization round-trips bit for bit and training is deterministic") {
    std::mt19937_64 rng(10);
    const auto d = random_dataset(rng, 90, 4);
    TrainConfig cfg;
    cfg.num_rounds = 12;
    const auto a = fit(d.view(), d.names(), cfg);
    const auto b = fit(d.view(), d.names(), cfg);
    const auto text = serialize(a);
    CHECK(text == serialize(b));
    const auto back = deserialize(text);
    CHECK(serialize(back) == text);
    CHECK(predict(back, d.x, 4) == predict(a, d.x, 4));
    CHECK_THROWS_AS(deserialize("{\"format\": \"other\"}"), Error);
}

TEST_CASE("trainer input errors") {
    Dataset one_class{{1, 2, 3}, {1, 1, 1}, 1};
    CHECK_THROWS_AS(fit(one_class.view(), {"x"}, TrainConfig{}), Error);
    Dataset empty{{}, {}, 1};
    CHECK_THROWS_AS(fit(empty.view(), {"x"}, TrainConfig{}), Error);
    Dataset ok{{1, 2, 3, 4}, {0, 1}, 2};
    CHECK_THROWS_AS(fit(ok.view(), {"x"}, TrainConfig{}), Error);
    TrainConfig bad;
    bad.eta = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}
