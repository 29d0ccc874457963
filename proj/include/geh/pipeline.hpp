#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "geh/cohort.hpp"
#include "geh/gbt.hpp"
#include "geh/metrics.hpp"

namespace geh::pipeline {

struct SplitPlan {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    std::uint64_t seed = 0;
    bool stratified = true;
    double ratio = 0.7;
};

struct IndexSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Per class (or over everything when not stratified) the first
/// round-half-up(ratio * n) shuffled rows go to training.
IndexSplit split_indices(std::span<const int> labels, std::uint64_t seed, double ratio = 0.7, bool stratified = true);

/// Splits the patients that carry an outcome.
SplitPlan split(const cohort::Cohort& cohort, std::uint64_t seed, double ratio = 0.7, bool stratified = true);

/// Majority undersampled without replacement and minority kept whole plus
/// bootstrap draws, both to floor(n / 2). Returns indices into `labels`.
std::vector<std::size_t> rebalance(std::span<const int> labels, std::uint64_t seed);

struct CvOptions {
    std::vector<double> eta_grid = {0.01, 0.05, 0.1, 0.2, 0.3};
    int folds = 5;
    int patience = 20;
    int max_rounds = 500;
};

struct FoldLog {
    double best_aucpr = 0.0;
    int best_round = 0;  // number of trees at the best validation AUCPR
};

struct EtaResult {
    double eta = 0.0;
    std::vector<FoldLog> folds;
    double mean_aucpr = 0.0;
    double std_aucpr = 0.0;  // sample standard deviation across folds
    int rounds = 0;          // rounded median of per-fold best rounds
};

struct CvResult {
    std::vector<EtaResult> per_eta;  // ascending eta
    double best_eta = 0.0;
    int best_rounds = 0;
};

/// Stratified k-fold tuning of eta with early stopping on validation AUCPR.
/// Training folds are rebalanced; validation folds keep the original mix.
CvResult cv_tune(const cohort::FeatureMatrix& train, const gbt::TrainConfig& base, const CvOptions& options,
                 std::uint64_t seed);

/// Selection rule over finished per-eta logs: argmax(mean - std), ties to the
/// smaller eta then fewer rounds.
void select_best(CvResult& result);

std::uint64_t instance_seed(std::uint64_t master_seed, std::size_t instance);

/// One instance: rebalance with `seed` (unless resample is false), then fit.
gbt::Ensemble train_instance(const cohort::FeatureMatrix& train, const gbt::TrainConfig& config,
                             std::uint64_t seed, bool resample = true);

struct InstanceLog {
    std::size_t index = 0;  // 1-based
    std::uint64_t seed = 0;
    double auc = 0.0;
};

struct Representative {
    gbt::Ensemble model;
    std::size_t chosen = 0;  // 1-based index into log
    std::vector<InstanceLog> log;
};

/// Trains n instances and keeps the one with the highest AUC on `selection`
/// (lowest index on ties).
Representative train_representative(const cohort::FeatureMatrix& train, const cohort::FeatureMatrix& selection,
                                    const gbt::TrainConfig& config, std::size_t n_instances,
                                    std::uint64_t master_seed, bool resample = true);

struct EvalOptions {
    std::uint64_t master_seed = 0;
    double train_ratio = 0.7;
    bool stratify = true;
    bool holdout_selection = false;
    CvOptions cv;
    std::size_t n_instances = 50;
    double min_sensitivity = 0.90;
    gbt::TrainConfig tree;  // eta and num_rounds are replaced by the tuner
    double max_drop_fraction = 0.5;
    std::string aggregation = "median";  // recorded for provenance only

    std::string canonical() const;
    std::uint64_t hash() const;
};

struct EvalReport {
    cohort::ModelLabel label = cohort::ModelLabel::SRG;
    std::vector<std::string> manifest;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::size_t n_dropped = 0;
    double auc = 0.0;
    double aucpr = 0.0;
    double f2 = 0.0;
    metrics::ThresholdChoice threshold;
    metrics::RocCurve roc;
    metrics::PrCurve pr;
    gbt::ImportanceTable importance;
    CvResult cv;
    Representative representative;
    std::string selection_set;  // "test" or "holdout"
    EvalOptions options;
    std::uint64_t split_seed = 0;
};

EvalReport evaluate_model(const cohort::ModelSpec& spec, const cohort::Cohort& cohort, const SplitPlan& plan,
                          const EvalOptions& options);
EvalReport evaluate_model(const cohort::ModelSpec& spec, const cohort::Cohort& cohort, const EvalOptions& options);

/// Split used by evaluate_model for these options.
SplitPlan plan_for(const cohort::Cohort& cohort, const EvalOptions& options);

std::string report_json(const EvalReport& report);
void write_roc_table(std::ostream& out, const metrics::RocCurve& roc);
void write_pr_table(std::ostream& out, const metrics::PrCurve& pr);
void write_importance_table(std::ostream& out, const gbt::ImportanceTable& table);

}  // namespace geh::pipeline
