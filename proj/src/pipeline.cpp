#include "geh/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "geh/random.hpp"
#include "geh/stats.hpp"

namespace geh::pipeline {
namespace {

using ordered_json = nlohmann::ordered_json;

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

std::vector<int> labels_of(const cohort::FeatureMatrix& m, std::span<const std::size_t> rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(m.labels[r]);
    return out;
}

gbt::DataView view_of(const cohort::FeatureMatrix& m) { return {m.values, m.cols(), m.labels}; }

double test_auc(const gbt::Ensemble& model, const cohort::FeatureMatrix& data) {
    const auto scores = gbt::predict(model, data.values, data.cols());
    return metrics::roc_auc(data.labels, scores).auc;
}

void require_both_classes(std::span<const int> labels, std::string_view what) {
    const auto pos = std::count(labels.begin(), labels.end(), 1);
    if (pos == 0 || static_cast<std::size_t>(pos) == labels.size()) {
        throw Error(ErrorKind::SingleClass, std::string(what) + " contains a single class");
    }
}

ordered_json confusion_json(const metrics::Confusion& c) {
    return ordered_json{{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

}  // namespace

IndexSplit split_indices(std::span<const int> labels, std::uint64_t seed, double ratio, bool stratified) {
    if (!(ratio > 0.0 && ratio <= 1.0)) throw Error(ErrorKind::InvalidConfig, "split ratio must be in (0, 1]");
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty()) throw Error(ErrorKind::SingleClass, "labels contain a single class");
    if (pos.size() < 2 || neg.size() < 2) throw Error(ErrorKind::TooSmall, "need at least two patients per class");

    Rng rng(seed);
    IndexSplit out;
    const auto take = [&](std::vector<std::size_t> group) {
        std::shuffle(group.begin(), group.end(), rng);
        const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(group.size()) + 0.5));
        out.train.insert(out.train.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.test.insert(out.test.end(), group.begin() + static_cast<std::ptrdiff_t>(n_train), group.end());
        return n_train;
    };
    if (stratified) {
        const auto pos_train = take(pos);
        const auto neg_train = take(neg);
        if (pos_train == 0 || neg_train == 0 || pos_train == pos.size() || neg_train == neg.size()) {
            throw Error(ErrorKind::TooSmall, "stratified split leaves a class out of train or test");
        }
    } else {
        std::vector<std::size_t> all(labels.size());
        std::iota(all.begin(), all.end(), 0);
        take(std::move(all));
        if (out.test.empty() || out.train.empty()) throw Error(ErrorKind::TooSmall, "split leaves an empty part");
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

SplitPlan split(const cohort::Cohort& cohort, std::uint64_t seed, double ratio, bool stratified) {
    std::vector<std::string> ids;
    std::vector<int> labels;
    for (const auto& p : cohort) {
        if (!p.outcome) continue;
        ids.push_back(p.id);
        labels.push_back(*p.outcome == cohort::Outcome::Positive ? 1 : 0);
    }
    const auto parts = split_indices(labels, seed, ratio, stratified);
    SplitPlan plan;
    plan.seed = seed;
    plan.stratified = stratified;
    plan.ratio = ratio;
    for (auto i : parts.train) plan.train_ids.push_back(ids[i]);
    for (auto i : parts.test) plan.test_ids.push_back(ids[i]);
    return plan;
}

std::vector<std::size_t> rebalance(std::span<const int> labels, std::uint64_t seed) {
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty()) throw Error(ErrorKind::SingleClass, "rebalance needs both classes");

    const auto target = labels.size() / 2;
    auto& majority = pos.size() > neg.size() ? pos : neg;
    auto& minority = pos.size() > neg.size() ? neg : pos;

    Rng rng(seed);
    std::vector<std::size_t> out;
    out.reserve(2 * target);
    // partial Fisher-Yates: first `target` slots become a sample without replacement
    for (std::size_t i = 0; i < target; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, majority.size() - 1);
        std::swap(majority[i], majority[pick(rng)]);
        out.push_back(majority[i]);
    }
    const auto kept = std::min(minority.size(), target);
    out.insert(out.end(), minority.begin(), minority.begin() + static_cast<std::ptrdiff_t>(kept));
    std::uniform_int_distribution<std::size_t> draw(0, minority.size() - 1);
    for (auto i = kept; i < target; ++i) out.push_back(minority[draw(rng)]);
    return out;
}

void select_best(CvResult& result) {
    std::sort(result.per_eta.begin(), result.per_eta.end(),
              [](const EtaResult& a, const EtaResult& b) { return a.eta < b.eta; });
    bool have = false;
    double best_score = 0.0;
    for (const auto& e : result.per_eta) {
        const double score = e.mean_aucpr - e.std_aucpr;
        const bool better = !have || score > best_score ||
                            (score == best_score && e.eta == result.best_eta && e.rounds < result.best_rounds);
        if (better) {
            have = true;
            best_score = score;
            result.best_eta = e.eta;
            result.best_rounds = e.rounds;
        }
    }
}

CvResult cv_tune(const cohort::FeatureMatrix& train, const gbt::TrainConfig& base, const CvOptions& options,
                 std::uint64_t seed) {
    if (options.eta_grid.empty()) throw Error(ErrorKind::InvalidConfig, "empty eta grid");
    if (options.folds < 2) throw Error(ErrorKind::InvalidConfig, "need at least two folds");
    if (options.patience < 1 || options.max_rounds < 1) {
        throw Error(ErrorKind::InvalidConfig, "patience and max_rounds must be >= 1");
    }
    const auto k = static_cast<std::size_t>(options.folds);
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < train.rows(); ++i) (train.labels[i] ? pos : neg).push_back(i);
    if (pos.size() < k || neg.size() < k) {
        throw Error(ErrorKind::TooFewPerClass, "cross-validation needs at least " + std::to_string(k) +
                                                   " patients of each class");
    }

    Rng rng(derive_seed(seed, seed_purpose::kFolds, 0));
    std::vector<std::size_t> fold_of(train.rows());
    for (auto* group : {&pos, &neg}) {
        std::shuffle(group->begin(), group->end(), rng);
        for (std::size_t i = 0; i < group->size(); ++i) fold_of[(*group)[i]] = i % k;
    }

    struct Fold {
        cohort::FeatureMatrix fit;
        cohort::FeatureMatrix validation;
    };
    std::vector<Fold> folds;
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::size_t> fit_rows;
        std::vector<std::size_t> val_rows;
        for (std::size_t i = 0; i < train.rows(); ++i) (fold_of[i] == f ? val_rows : fit_rows).push_back(i);
        const auto fit_labels = labels_of(train, fit_rows);
        const auto picks = rebalance(fit_labels, derive_seed(seed, seed_purpose::kFoldRebalance, f));
        std::vector<std::size_t> balanced;
        balanced.reserve(picks.size());
        for (auto p : picks) balanced.push_back(fit_rows[p]);
        folds.push_back({train.subset(balanced), train.subset(val_rows)});
    }

    std::vector<double> grid = options.eta_grid;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    CvResult result;
    for (double eta : grid) {
        EtaResult er;
        er.eta = eta;
        gbt::TrainConfig config = base;
        config.eta = eta;
        for (const auto& fold : folds) {
            gbt::Trainer trainer(view_of(fold.fit), fold.fit.columns, config);
            const auto& val = fold.validation;
            std::vector<double> margins(val.rows(), trainer.ensemble().base_score);
            FoldLog log{-1.0, 0};
            int since_best = 0;
            for (int round = 1; round <= options.max_rounds; ++round) {
                const auto& tree = trainer.add_round();
                for (std::size_t i = 0; i < val.rows(); ++i) margins[i] += eta * tree.predict(val.row(i));
                const double ap = metrics::pr_aucpr(val.labels, margins).average_precision;
                if (ap > log.best_aucpr) {
                    log = {ap, round};
                    since_best = 0;
                } else if (++since_best >= options.patience) {
                    break;
                }
            }
            er.folds.push_back(log);
        }
        std::vector<double> aps;
        std::vector<double> rounds;
        for (const auto& f : er.folds) {
            aps.push_back(f.best_aucpr);
            rounds.push_back(static_cast<double>(f.best_round));
        }
        er.mean_aucpr = stats::mean(aps);
        er.std_aucpr = stats::stddev(aps);
        er.rounds = std::max(1, static_cast<int>(std::floor(stats::quantile(rounds, 0.5) + 0.5)));
        result.per_eta.push_back(std::move(er));
    }
    select_best(result);
    return result;
}

std::uint64_t instance_seed(std::uint64_t master_seed, std::size_t instance) {
    return derive_seed(master_seed, seed_purpose::kInstance, instance);
}

gbt::Ensemble train_instance(const cohort::FeatureMatrix& train, const gbt::TrainConfig& config, std::uint64_t seed,
                             bool resample) {
    if (!resample) return gbt::fit(view_of(train), train.columns, config);
    const auto picks = rebalance(train.labels, seed);
    const auto balanced = train.subset(picks);
    return gbt::fit(view_of(balanced), balanced.columns, config);
}

Representative train_representative(const cohort::FeatureMatrix& train, const cohort::FeatureMatrix& selection,
                                    const gbt::TrainConfig& config, std::size_t n_instances,
                                    std::uint64_t master_seed, bool resample) {
    if (n_instances < 1) throw Error(ErrorKind::InvalidConfig, "n_instances must be >= 1");
    require_both_classes(selection.labels, "selection set");
    Representative rep;
    double best_auc = -1.0;
    for (std::size_t i = 1; i <= n_instances; ++i) {
        const auto seed = instance_seed(master_seed, i);
        auto model = train_instance(train, config, seed, resample);
        const double auc = test_auc(model, selection);
        rep.log.push_back({i, seed, auc});
        if (auc > best_auc) {
            best_auc = auc;
            rep.chosen = i;
            rep.model = std::move(model);
        }
    }
    return rep;
}

std::string EvalOptions::canonical() const {
    std::ostringstream s;
    s << std::setprecision(17) << "master_seed=" << master_seed << ";train_ratio=" << train_ratio
      << ";stratify=" << stratify << ";holdout_selection=" << holdout_selection << ";eta_grid=";
    for (double e : cv.eta_grid) s << e << ',';
    s << ";folds=" << cv.folds << ";patience=" << cv.patience << ";max_rounds=" << cv.max_rounds
      << ";n_instances=" << n_instances << ";min_sensitivity=" << min_sensitivity << ";max_depth=" << tree.max_depth
      << ";min_child_hessian=" << tree.min_child_hessian << ";lambda=" << tree.lambda << ";gamma=" << tree.gamma
      << ";max_drop_fraction=" << max_drop_fraction << ";aggregation=" << aggregation;
    return s.str();
}

std::uint64_t EvalOptions::hash() const { return fnv1a(canonical()); }

SplitPlan plan_for(const cohort::Cohort& cohort, const EvalOptions& options) {
    return split(cohort, derive_seed(options.master_seed, seed_purpose::kSplit, 0), options.train_ratio,
                 options.stratify);
}

EvalReport evaluate_model(const cohort::ModelSpec& spec, const cohort::Cohort& cohort, const EvalOptions& options) {
    return evaluate_model(spec, cohort, plan_for(cohort, options), options);
}

EvalReport evaluate_model(const cohort::ModelSpec& spec, const cohort::Cohort& cohort, const SplitPlan& plan,
                          const EvalOptions& options) {
    const auto matrix = cohort::assemble_features(cohort, spec, options.max_drop_fraction);
    require_both_classes(matrix.labels, "cohort");

    const std::set<std::string> train_ids(plan.train_ids.begin(), plan.train_ids.end());
    const std::set<std::string> test_ids(plan.test_ids.begin(), plan.test_ids.end());
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        if (train_ids.count(matrix.ids[i])) train_rows.push_back(i);
        if (test_ids.count(matrix.ids[i])) test_rows.push_back(i);
    }
    auto train = matrix.subset(train_rows);
    const auto test = matrix.subset(test_rows);
    require_both_classes(train.labels, "training split");
    require_both_classes(test.labels, "test split");

    EvalReport report;
    report.label = spec.label;
    report.manifest = matrix.columns;
    report.n_train = train.rows();
    report.n_test = test.rows();
    report.n_dropped = matrix.dropped;
    report.options = options;
    report.split_seed = plan.seed;

    cohort::FeatureMatrix selection = test;
    report.selection_set = "test";
    if (options.holdout_selection) {
        const auto parts = split_indices(train.labels, derive_seed(options.master_seed, seed_purpose::kHoldout, 0),
                                         0.8, true);
        selection = train.subset(parts.test);
        train = train.subset(parts.train);
        report.selection_set = "holdout";
    }

    report.cv = cv_tune(train, options.tree, options.cv, options.master_seed);
    gbt::TrainConfig config = options.tree;
    config.eta = report.cv.best_eta;
    config.num_rounds = report.cv.best_rounds;
    report.representative =
        train_representative(train, selection, config, options.n_instances, options.master_seed);

    const auto scores = gbt::predict(report.representative.model, test.values, test.cols());
    report.roc = metrics::roc_auc(test.labels, scores);
    report.pr = metrics::pr_aucpr(test.labels, scores);
    report.auc = report.roc.auc;
    report.aucpr = report.pr.average_precision;
    report.threshold = metrics::choose_threshold(test.labels, scores, options.min_sensitivity);
    report.f2 = metrics::f2(report.threshold.confusion);
    report.importance = gbt::importance_gain(report.representative.model);
    return report;
}

std::string report_json(const EvalReport& r) {
    ordered_json doc;
    doc["format"] = "geh-eval-report";
    doc["version"] = 1;
    doc["model"] = std::string(cohort::to_string(r.label));
    doc["features"] = r.manifest;
    doc["n_train"] = r.n_train;
    doc["n_test"] = r.n_test;
    doc["n_dropped_missing"] = r.n_dropped;
    doc["auc"] = r.auc;
    doc["aucpr"] = r.aucpr;
    doc["f2"] = r.f2;
    doc["sensitivity"] = r.threshold.sensitivity;
    doc["specificity"] = r.threshold.specificity;
    doc["threshold"] = r.threshold.threshold;
    doc["orientation"] = std::string(metrics::to_string(r.threshold.orientation));
    doc["min_sensitivity"] = r.options.min_sensitivity;
    doc["confusion"] = confusion_json(r.threshold.confusion);

    ordered_json cv;
    cv["selection_rule"] = "argmax(mean_aucpr - std_aucpr); ties: smaller eta, fewer rounds";
    cv["folds"] = r.options.cv.folds;
    cv["patience"] = r.options.cv.patience;
    cv["max_rounds"] = r.options.cv.max_rounds;
    auto per_eta = ordered_json::array();
    for (const auto& e : r.cv.per_eta) {
        ordered_json j;
        j["eta"] = e.eta;
        j["mean_aucpr"] = e.mean_aucpr;
        j["std_aucpr"] = e.std_aucpr;
        j["rounds"] = e.rounds;
        auto folds = ordered_json::array();
        for (const auto& f : e.folds) folds.push_back({{"best_aucpr", f.best_aucpr}, {"best_round", f.best_round}});
        j["folds"] = std::move(folds);
        per_eta.push_back(std::move(j));
    }
    cv["per_eta"] = std::move(per_eta);
    cv["chosen_eta"] = r.cv.best_eta;
    cv["chosen_rounds"] = r.cv.best_rounds;
    doc["tuning"] = std::move(cv);

    ordered_json inst;
    inst["n_instances"] = r.representative.log.size();
    inst["chosen_instance"] = r.representative.chosen;
    inst["selection_metric"] = "auc";
    inst["selection_set"] = r.selection_set;
    inst["selection_on_test"] = r.selection_set == "test";
    auto log = ordered_json::array();
    for (const auto& l : r.representative.log) {
        log.push_back({{"instance", l.index}, {"seed", l.seed}, {"auc", l.auc}});
    }
    inst["log"] = std::move(log);
    doc["instances"] = std::move(inst);

    ordered_json imp;
    imp["has_splits"] = r.importance.has_splits;
    auto entries = ordered_json::array();
    for (const auto& e : r.importance.entries) {
        entries.push_back({{"feature", e.feature}, {"gain", e.gain}, {"percent", e.percent}});
    }
    imp["entries"] = std::move(entries);
    doc["importance"] = std::move(imp);

    auto roc = ordered_json::array();
    for (const auto& p : r.roc.points) roc.push_back({p.fpr, p.tpr});
    doc["roc"] = std::move(roc);
    auto pr = ordered_json::array();
    for (const auto& p : r.pr.points) pr.push_back({p.recall, p.precision});
    doc["pr"] = std::move(pr);

    ordered_json prov;
    prov["master_seed"] = r.options.master_seed;
    prov["split_seed"] = r.split_seed;
    prov["config_hash"] = hex(r.options.hash());
    prov["config"] = r.options.canonical();
    prov["qtc_formula"] = "bazett";
    prov["beat_aggregation"] = r.options.aggregation;
    prov["stratified_split"] = r.options.stratify;
    doc["provenance"] = std::move(prov);
    return doc.dump(2) + "\n";
}

void write_roc_table(std::ostream& out, const metrics::RocCurve& roc) {
    out << "fpr,tpr\n" << std::setprecision(17);
    for (const auto& p : roc.points) out << p.fpr << ',' << p.tpr << '\n';
}

void write_pr_table(std::ostream& out, const metrics::PrCurve& pr) {
    out << "recall,precision\n" << std::setprecision(17);
    for (const auto& p : pr.points) out << p.recall << ',' << p.precision << '\n';
}

void write_importance_table(std::ostream& out, const gbt::ImportanceTable& table) {
    out << "name,gain,percent\n";
    if (!table.has_splits) {
        out << "# no splits\n";
        return;
    }
    out << std::setprecision(17);
    for (const auto& e : table.entries) out << e.feature << ',' << e.gain << ',' << e.percent << '\n';
}

}  // namespace geh::pipeline
