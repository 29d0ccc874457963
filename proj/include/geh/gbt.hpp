#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "geh/error.hpp"

namespace geh::gbt {

struct TrainConfig {
    double eta = 0.3;  // learning factor (shrinkage)
    int num_rounds = 100;
    int max_depth = 6;
    double min_child_hessian = 1.0;
    double lambda = 1.0;  // L2 on leaf weights
    double gamma = 0.0;   // minimum split loss reduction
    std::uint64_t seed = 0;

    void validate() const;
};

struct Node {
    int feature = -1;  // -1 for a leaf
    double threshold = 0.0;
    bool default_left = true;  // missing values route left
    int left = -1;
    int right = -1;
    double weight = 0.0;  // leaf output
    double gain = 0.0;    // split gain recorded at internal nodes
    double hessian = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
};

struct Tree {
    std::vector<Node> nodes;  // nodes[0] is the root

    double predict(std::span<const double> row) const noexcept;
    int depth() const noexcept;
};

struct Ensemble {
    double base_score = 0.0;  // log-odds
    double eta = 0.3;
    std::vector<std::string> manifest;
    std::vector<Tree> trees;

    double margin(std::span<const double> row) const noexcept;
};

/// Dense row-major training data. Labels are 0/1.
struct DataView {
    std::span<const double> values;
    std::size_t cols = 0;
    std::span<const int> labels;

    std::size_t rows() const noexcept { return labels.size(); }
    double at(std::size_t r, std::size_t c) const noexcept { return values[r * cols + c]; }
};

/// Round-by-round booster; fit() is a loop over add_round().
class Trainer {
public:
    Trainer(DataView data, std::vector<std::string> manifest, TrainConfig config);

    /// Grows one tree on the current gradients and updates the training margins.
    const Tree& add_round();
    const Ensemble& ensemble() const noexcept { return model_; }
    Ensemble release() && { return std::move(model_); }
    std::span<const double> margins() const noexcept { return margins_; }

private:
    Tree grow_tree();

    DataView data_;
    TrainConfig config_;
    Ensemble model_;
    std::vector<std::vector<std::uint32_t>> sorted_;  // per feature, row order by value
    std::vector<double> margins_;
    std::vector<double> grad_;
    std::vector<double> hess_;
};

Ensemble fit(DataView data, std::vector<std::string> manifest, const TrainConfig& config);

/// Probabilities for row-major rows of width manifest.size().
std::vector<double> predict(const Ensemble& model, std::span<const double> rows, std::size_t cols);
double predict_one(const Ensemble& model, std::span<const double> row);

double sigmoid(double x) noexcept;

/// Second-order split gain, including the -gamma penalty.
double split_gain(double g_left, double h_left, double g_right, double h_right, double lambda,
                  double gamma) noexcept;
double leaf_weight(double g, double h, double lambda) noexcept;

/// Candidate order is feature, then threshold; a later candidate replaces the
/// incumbent only when its gain is larger by more than 1e-12 relative, so
/// summation-order rounding cannot break a tie between equal partitions.
inline constexpr double kGainTieTolerance = 1e-12;
bool gain_improves(double gain, double incumbent) noexcept;

/// Mean logistic loss of the model on the data.
double mean_log_loss(const Ensemble& model, DataView data);

struct ImportanceEntry {
    std::string feature;
    double gain = 0.0;
    double percent = 0.0;
};

struct ImportanceTable {
    bool has_splits = false;
    std::vector<ImportanceEntry> entries;  // manifest order; empty when no split exists
};

ImportanceTable importance_gain(const Ensemble& model);

std::string serialize(const Ensemble& model);
Ensemble deserialize(std::string_view text);

}  // namespace geh::gbt
