#include "geh/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace geh::gbt {
namespace {

using ordered_json = nlohmann::ordered_json;

struct NodeStats {
    double g = 0.0;
    double h = 0.0;
};

struct Candidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    double g_left = 0.0;
    double h_left = 0.0;
};

struct ScanState {
    double g = 0.0;
    double h = 0.0;
    double last = 0.0;
    bool has_last = false;
};

double midpoint(double lo, double hi) {
    const double m = lo + (hi - lo) / 2.0;
    return m > lo ? m : hi;
}

ordered_json node_json(const Tree& tree, int id) {
    const auto& n = tree.nodes[static_cast<std::size_t>(id)];
    ordered_json j;
    if (n.is_leaf()) {
        j["leaf"] = n.weight;
        j["hessian"] = n.hessian;
        return j;
    }
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["gain"] = n.gain;
    j["default_left"] = n.default_left;
    j["hessian"] = n.hessian;
    j["left"] = node_json(tree, n.left);
    j["right"] = node_json(tree, n.right);
    return j;
}

int node_from_json(const nlohmann::json& j, Tree& tree) {
    const auto id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    Node n;
    n.hessian = j.value("hessian", 0.0);
    if (j.contains("leaf")) {
        n.weight = j.at("leaf").get<double>();
        tree.nodes[static_cast<std::size_t>(id)] = n;
        return id;
    }
    n.feature = j.at("feature").get<int>();
    n.threshold = j.at("threshold").get<double>();
    n.gain = j.at("gain").get<double>();
    n.default_left = j.value("default_left", true);
    n.left = node_from_json(j.at("left"), tree);
    n.right = node_from_json(j.at("right"), tree);
    tree.nodes[static_cast<std::size_t>(id)] = n;
    return id;
}

int subtree_depth(const Tree& t, int id) {
    const auto& n = t.nodes[static_cast<std::size_t>(id)];
    if (n.is_leaf()) return 0;
    return 1 + std::max(subtree_depth(t, n.left), subtree_depth(t, n.right));
}

}  // namespace

void TrainConfig::validate() const {
    if (!(eta > 0.0 && eta <= 1.0)) throw Error(ErrorKind::InvalidConfig, "eta must be in (0, 1]");
    if (num_rounds < 1) throw Error(ErrorKind::InvalidConfig, "num_rounds must be >= 1");
    if (max_depth < 1) throw Error(ErrorKind::InvalidConfig, "max_depth must be >= 1");
    if (!(lambda >= 0.0)) throw Error(ErrorKind::InvalidConfig, "lambda must be >= 0");
    if (!(gamma >= 0.0)) throw Error(ErrorKind::InvalidConfig, "gamma must be >= 0");
    if (!(min_child_hessian >= 0.0)) throw Error(ErrorKind::InvalidConfig, "min_child_hessian must be >= 0");
}

double sigmoid(double x) noexcept {
    const double p = 1.0 / (1.0 + std::exp(-x));
    return std::clamp(p, 1e-300, std::nextafter(1.0, 0.0));
}

double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) noexcept {
    const double g = gl + gr;
    const double h = hl + hr;
    return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda)) - gamma;
}

double leaf_weight(double g, double h, double lambda) noexcept { return -g / (h + lambda); }

bool gain_improves(double gain, double incumbent) noexcept {
    return gain > incumbent + kGainTieTolerance * std::abs(incumbent);
}

double Tree::predict(std::span<const double> row) const noexcept {
    int id = 0;
    while (true) {
        const auto& n = nodes[static_cast<std::size_t>(id)];
        if (n.is_leaf()) return n.weight;
        const double v = row[static_cast<std::size_t>(n.feature)];
        if (std::isnan(v)) {
            id = n.default_left ? n.left : n.right;
        } else {
            id = v < n.threshold ? n.left : n.right;
        }
    }
}

int Tree::depth() const noexcept { return nodes.empty() ? 0 : subtree_depth(*this, 0); }

double Ensemble::margin(std::span<const double> row) const noexcept {
    double m = base_score;
    for (const auto& t : trees) m += eta * t.predict(row);
    return m;
}

Trainer::Trainer(DataView data, std::vector<std::string> manifest, TrainConfig config)
    : data_(data), config_(config) {
    config_.validate();
    const auto n = data_.rows();
    if (n == 0 || data_.cols == 0) throw Error(ErrorKind::EmptyMatrix, "no training rows or columns");
    if (data_.values.size() != n * data_.cols) throw Error(ErrorKind::WidthMismatch, "values do not match rows x cols");
    if (manifest.size() != data_.cols) throw Error(ErrorKind::WidthMismatch, "manifest length differs from width");
    const auto positives = std::count(data_.labels.begin(), data_.labels.end(), 1);
    if (positives == 0 || static_cast<std::size_t>(positives) == n) {
        throw Error(ErrorKind::SingleClass, "training labels contain a single class");
    }

    const double prevalence = static_cast<double>(positives) / static_cast<double>(n);
    model_.base_score = std::log(prevalence / (1.0 - prevalence));
    model_.eta = config_.eta;
    model_.manifest = std::move(manifest);

    sorted_.resize(data_.cols);
    for (std::size_t f = 0; f < data_.cols; ++f) {
        auto& order = sorted_[f];
        order.resize(n);
        std::iota(order.begin(), order.end(), 0u);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return data_.at(a, f) < data_.at(b, f); });
    }
    margins_.assign(n, model_.base_score);
    grad_.resize(n);
    hess_.resize(n);
}

const Tree& Trainer::add_round() {
    for (std::size_t i = 0; i < data_.rows(); ++i) {
        const double p = sigmoid(margins_[i]);
        grad_[i] = p - static_cast<double>(data_.labels[i]);
        hess_[i] = p * (1.0 - p);
    }
    model_.trees.push_back(grow_tree());
    return model_.trees.back();
}

Tree Trainer::grow_tree() {
    const auto n = data_.rows();
    const double lambda = config_.lambda;
    const double min_h = config_.min_child_hessian;

    Tree tree;
    std::vector<NodeStats> stats(1);
    for (std::size_t i = 0; i < n; ++i) {
        stats[0].g += grad_[i];
        stats[0].h += hess_[i];
    }
    tree.nodes.emplace_back();
    std::vector<int> row_node(n, 0);
    std::vector<int> frontier = {0};

    for (int depth = 0; depth < config_.max_depth && !frontier.empty(); ++depth) {
        std::vector<int> slot_of(tree.nodes.size(), -1);
        for (std::size_t s = 0; s < frontier.size(); ++s) slot_of[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
        std::vector<Candidate> best(frontier.size());
        std::vector<ScanState> scan(frontier.size());

        for (std::size_t f = 0; f < data_.cols; ++f) {
            std::fill(scan.begin(), scan.end(), ScanState{});
            for (const auto idx : sorted_[f]) {
                const int slot = slot_of[static_cast<std::size_t>(row_node[idx])];
                if (slot < 0) continue;
                auto& st = scan[static_cast<std::size_t>(slot)];
                const double v = data_.at(idx, f);
                if (st.has_last && v > st.last) {
                    const auto& total = stats[static_cast<std::size_t>(frontier[static_cast<std::size_t>(slot)])];
                    const double hr = total.h - st.h;
                    if (st.h >= min_h && hr >= min_h) {
                        const double gain = split_gain(st.g, st.h, total.g - st.g, hr, lambda, config_.gamma);
                        auto& b = best[static_cast<std::size_t>(slot)];
                        if (gain_improves(gain, b.gain)) {
                            b = Candidate{gain, static_cast<int>(f), midpoint(st.last, v), st.g, st.h};
                        }
                    }
                }
                st.g += grad_[idx];
                st.h += hess_[idx];
                st.last = v;
                st.has_last = true;
            }
        }

        std::vector<int> next;
        bool any_split = false;
        for (std::size_t s = 0; s < frontier.size(); ++s) {
            const auto& b = best[s];
            if (b.feature < 0) continue;
            any_split = true;
            const auto parent = static_cast<std::size_t>(frontier[s]);
            const auto left = static_cast<int>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            auto& node = tree.nodes[parent];
            node.feature = b.feature;
            node.threshold = b.threshold;
            node.gain = b.gain;
            node.left = left;
            node.right = left + 1;
            const auto total = stats[parent];
            stats.push_back({b.g_left, b.h_left});
            stats.push_back({total.g - b.g_left, total.h - b.h_left});
            next.push_back(left);
            next.push_back(left + 1);
        }
        if (!any_split) break;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& node = tree.nodes[static_cast<std::size_t>(row_node[i])];
            if (node.is_leaf()) continue;
            row_node[i] = data_.at(i, static_cast<std::size_t>(node.feature)) < node.threshold ? node.left : node.right;
        }
        frontier = std::move(next);
    }

    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
        auto& node = tree.nodes[id];
        node.hessian = stats[id].h;
        if (node.is_leaf()) node.weight = leaf_weight(stats[id].g, stats[id].h, lambda);
    }
    for (std::size_t i = 0; i < n; ++i) {
        margins_[i] += model_.eta * tree.nodes[static_cast<std::size_t>(row_node[i])].weight;
    }
    return tree;
}

Ensemble fit(DataView data, std::vector<std::string> manifest, const TrainConfig& config) {
    Trainer trainer(data, std::move(manifest), config);
    for (int r = 0; r < config.num_rounds; ++r) trainer.add_round();
    return std::move(trainer).release();
}

double predict_one(const Ensemble& model, std::span<const double> row) {
    if (row.size() != model.manifest.size()) {
        throw Error(ErrorKind::WidthMismatch, "row width " + std::to_string(row.size()) + " vs manifest " +
                                                  std::to_string(model.manifest.size()));
    }
    return sigmoid(model.margin(row));
}

std::vector<double> predict(const Ensemble& model, std::span<const double> rows, std::size_t cols) {
    if (cols != model.manifest.size() || (cols > 0 && rows.size() % cols != 0)) {
        throw Error(ErrorKind::WidthMismatch, "row width " + std::to_string(cols) + " vs manifest " +
                                                  std::to_string(model.manifest.size()));
    }
    std::vector<double> out;
    if (cols == 0) return out;
    out.reserve(rows.size() / cols);
    for (std::size_t off = 0; off < rows.size(); off += cols) out.push_back(sigmoid(model.margin(rows.subspan(off, cols))));
    return out;
}

double mean_log_loss(const Ensemble& model, DataView data) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const double p = predict_one(model, data.values.subspan(i * data.cols, data.cols));
        total -= data.labels[i] ? std::log(p) : std::log1p(-p);
    }
    return total / static_cast<double>(data.rows());
}

ImportanceTable importance_gain(const Ensemble& model) {
    std::vector<double> gains(model.manifest.size(), 0.0);
    bool any = false;
    for (const auto& tree : model.trees) {
        for (const auto& node : tree.nodes) {
            if (node.is_leaf()) continue;
            gains[static_cast<std::size_t>(node.feature)] += node.gain;
            any = true;
        }
    }
    ImportanceTable table;
    table.has_splits = any;
    if (!any) return table;
    const double total = std::accumulate(gains.begin(), gains.end(), 0.0);
    for (std::size_t f = 0; f < gains.size(); ++f) {
        table.entries.push_back({model.manifest[f], gains[f], total > 0.0 ? 100.0 * gains[f] / total : 0.0});
    }
    return table;
}

std::string serialize(const Ensemble& model) {
    ordered_json doc;
    doc["format"] = "geh-ensemble";
    doc["version"] = 1;
    doc["objective"] = "binary:logistic";
    doc["base_score"] = model.base_score;
    doc["eta"] = model.eta;
    doc["manifest"] = model.manifest;
    auto trees = ordered_json::array();
    for (const auto& t : model.trees) trees.push_back(t.nodes.empty() ? ordered_json(nullptr) : node_json(t, 0));
    doc["trees"] = std::move(trees);
    return doc.dump(2) + "\n";
}

Ensemble deserialize(std::string_view text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        if (doc.at("format").get<std::string>() != "geh-ensemble" || doc.at("version").get<int>() != 1) {
            throw Error(ErrorKind::SchemaError, "unsupported ensemble format");
        }
        Ensemble m;
        m.base_score = doc.at("base_score").get<double>();
        m.eta = doc.at("eta").get<double>();
        m.manifest = doc.at("manifest").get<std::vector<std::string>>();
        for (const auto& t : doc.at("trees")) {
            Tree tree;
            if (!t.is_null()) node_from_json(t, tree);
            m.trees.push_back(std::move(tree));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("ensemble document: ") + e.what());
    }
}

}  // namespace geh::gbt
