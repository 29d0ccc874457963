#include "geh/commands.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <istream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "geh/features.hpp"
#include "geh/vcg.hpp"

namespace geh::app {
namespace {

namespace fs = std::filesystem;

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw Error(ErrorKind::InvalidConfig, "bad value '" + value + "' for " + key);
}

double parse_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value);
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value);
    return v;
}

int parse_int(const std::string& key, const std::string& value) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value);
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    bad_value(key, value);
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << text;
}

template <typename Fn>
void write_with(const fs::path& path, Fn&& fn) {
    std::ostringstream s;
    fn(s);
    write_text(path, s.str());
}

fs::path feature_table_path(const RunConfig& config) { return config.output_dir / "cohort_features.csv"; }

}  // namespace

void RunConfig::validate() const {
    if (!(min_sensitivity > 0.0 && min_sensitivity <= 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "min_sensitivity must be in (0, 1]");
    }
    if (n_instances < 1) throw Error(ErrorKind::InvalidConfig, "n_instances must be >= 1");
    if (k_folds < 2) throw Error(ErrorKind::InvalidConfig, "k_folds must be >= 2");
    if (eta_grid.empty()) throw Error(ErrorKind::InvalidConfig, "eta_grid is empty");
    for (double eta : eta_grid) {
        if (!(eta > 0.0 && eta <= 1.0)) throw Error(ErrorKind::InvalidConfig, "eta values must be in (0, 1]");
    }
    if (specs.empty()) throw Error(ErrorKind::InvalidConfig, "no model specs selected");
    if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw Error(ErrorKind::InvalidConfig, "train_ratio must be in (0, 1)");
    if (patience < 1 || max_rounds < 1) throw Error(ErrorKind::InvalidConfig, "patience and max_rounds must be >= 1");
    if (!(pre_ms > 0.0 && post_ms > 0.0)) throw Error(ErrorKind::InvalidConfig, "beat window must be positive");
    if (!(min_wave_amplitude_mv >= 0.0 && min_t_to_qrs_ratio >= 0.0 && min_t_to_qrs_ratio < 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "wave amplitude thresholds out of range");
    }
    gbt::TrainConfig probe = tree;
    probe.validate();
    synth.validate();
}

pipeline::EvalOptions RunConfig::eval_options() const {
    pipeline::EvalOptions o;
    o.master_seed = master_seed;
    o.train_ratio = train_ratio;
    o.stratify = stratify;
    o.holdout_selection = holdout_selection;
    o.cv.eta_grid = eta_grid;
    o.cv.folds = k_folds;
    o.cv.patience = patience;
    o.cv.max_rounds = max_rounds;
    o.n_instances = n_instances;
    o.min_sensitivity = min_sensitivity;
    o.tree = tree;
    o.aggregation = beat_aggregation == ecg::Aggregation::Median ? "median" : "mean";
    return o;
}

std::vector<cohort::ModelLabel> parse_specs(std::string_view list) {
    std::vector<cohort::ModelLabel> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        const auto comma = list.find(',', start);
        const auto item = trim(list.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (!item.empty()) out.push_back(cohort::parse_model_label(item));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw Error(ErrorKind::InvalidConfig, "empty spec list");
    return out;
}

RunConfig parse_run_config(std::istream& in, const fs::path& base_dir) {
    RunConfig c;
    const auto path = [&](const std::string& v) {
        const fs::path p(v);
        return p.is_absolute() ? p : base_dir / p;
    };
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(line_no) + ": expected key=value");
        }
        const auto key = trim(std::string_view(line).substr(0, eq));
        const auto value = trim(std::string_view(line).substr(eq + 1));

        if (key == "ecg_dir") c.ecg_dir = path(value);
        else if (key == "fiducial_dir") c.fiducial_dir = path(value);
        else if (key == "cohort_table") c.cohort_table = path(value);
        else if (key == "output_dir") c.output_dir = path(value);
        else if (key == "master_seed") c.master_seed = parse_u64(key, value);
        else if (key == "eta_grid") {
            c.eta_grid.clear();
            std::stringstream items(value);
            std::string item;
            while (std::getline(items, item, ',')) c.eta_grid.push_back(parse_double(key, trim(item)));
        }
        else if (key == "k_folds") c.k_folds = parse_int(key, value);
        else if (key == "patience") c.patience = parse_int(key, value);
        else if (key == "max_rounds") c.max_rounds = parse_int(key, value);
        else if (key == "n_instances") c.n_instances = parse_u64(key, value);
        else if (key == "min_sensitivity") c.min_sensitivity = parse_double(key, value);
        else if (key == "train_ratio") c.train_ratio = parse_double(key, value);
        else if (key == "specs") c.specs = parse_specs(value);
        else if (key == "stratify") c.stratify = parse_bool(key, value);
        else if (key == "holdout_selection") c.holdout_selection = parse_bool(key, value);
        else if (key == "beat_aggregation") {
            if (value == "median") c.beat_aggregation = ecg::Aggregation::Median;
            else if (value == "mean") c.beat_aggregation = ecg::Aggregation::Mean;
            else bad_value(key, value);
        }
        else if (key == "pre_ms") c.pre_ms = parse_double(key, value);
        else if (key == "post_ms") c.post_ms = parse_double(key, value);
        else if (key == "min_wave_amplitude_mv") c.min_wave_amplitude_mv = parse_double(key, value);
        else if (key == "min_t_to_qrs_ratio") c.min_t_to_qrs_ratio = parse_double(key, value);
        else if (key == "dump_vcg") c.dump_vcg = parse_bool(key, value);
        else if (key == "max_depth") c.tree.max_depth = parse_int(key, value);
        else if (key == "lambda") c.tree.lambda = parse_double(key, value);
        else if (key == "gamma") c.tree.gamma = parse_double(key, value);
        else if (key == "min_child_hessian") c.tree.min_child_hessian = parse_double(key, value);
        else if (key == "synth_n_patients") c.synth.n_patients = parse_u64(key, value);
        else if (key == "synth_positive_fraction") c.synth.positive_fraction = parse_double(key, value);
        else if (key == "synth_seed") c.synth.seed = parse_u64(key, value);
        else if (key == "synth_qrst_angle_shift_deg") c.synth.qrst_angle_shift_deg = parse_double(key, value);
        else if (key == "synth_svg_scale") c.synth.svg_scale = parse_double(key, value);
        else if (key == "synth_risk_effect") c.synth.risk_effect = parse_double(key, value);
        else if (key == "synth_base_qrst_angle_deg") c.synth.base_qrst_angle_deg = parse_double(key, value);
        else if (key == "synth_qrst_angle_sd_deg") c.synth.qrst_angle_sd_deg = parse_double(key, value);
        else if (key == "synth_amplitude_sd") c.synth.amplitude_sd = parse_double(key, value);
        else if (key == "synth_noise_sd_mv") c.synth.noise_sd_mv = parse_double(key, value);
        else if (key == "synth_zero_t_patients") c.synth.zero_t_patients = parse_u64(key, value);
        else throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidConfig, "cannot read config " + path.string());
    return parse_run_config(in, path.parent_path());
}

Extraction extract_patient(const ecg::EcgRecord& record, const ecg::FiducialSet& fiducials,
                           const ExtractOptions& options) {
    const auto beat = ecg::median_beat(record, fiducials, options.window, options.aggregation);
    Extraction out;
    out.standard = ecg::standard_measures(beat);
    out.vcg = vcg::kors_transform(vcg::baseline_correct(beat));

    const auto& f = out.vcg.fiducials;
    const auto peak_qrs = features::peak_vector(out.vcg, {f.qrs.onset, f.qrs.offset});
    const auto peak_t = features::peak_vector(out.vcg, {f.qrs.offset, f.t.offset});
    if (peak_qrs.magnitude() < options.min_wave_amplitude_mv) {
        out.status = "degenerate:flat QRS";
        return out;
    }
    if (peak_t.magnitude() < std::max(options.min_wave_amplitude_mv, options.min_t_to_qrs_ratio * peak_qrs.magnitude())) {
        out.status = "degenerate:flat T wave";
        return out;
    }
    try {
        out.geh = features::compute_geh(out.vcg);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::ZeroVector) throw;
        out.status = "degenerate:" + std::string(e.what());
    }
    return out;
}

cohort::Cohort extract_cohort(const cohort::Cohort& covariates, const RunConfig& config) {
    ExtractOptions options;
    options.window = {config.pre_ms, config.post_ms};
    options.aggregation = config.beat_aggregation;
    options.min_wave_amplitude_mv = config.min_wave_amplitude_mv;
    options.min_t_to_qrs_ratio = config.min_t_to_qrs_ratio;

    cohort::Cohort out = covariates;
    for (auto& p : out) {
        p.standard = {};
        p.geh = {};
        try {
            const auto record = ecg::parse_ecg(config.ecg_dir / (p.id + ".csv"));
            const auto fiducials = ecg::parse_fiducials(config.fiducial_dir / (p.id + ".json"));
            const auto ex = extract_patient(record, fiducials, options);
            p.standard = cohort::to_values(ex.standard);
            if (ex.geh) p.geh = cohort::to_values(*ex.geh);
            p.status = ex.status;
            if (config.dump_vcg) {
                write_with(config.output_dir / "vcg" / (p.id + ".csv"),
                           [&](std::ostream& s) { vcg::write_vcg_table(s, ex.vcg); });
            }
        } catch (const Error& e) {
            p.status = "error:" + std::string(to_string(e.kind()));
        }
    }
    return out;
}

TrainEvalResult train_eval(const cohort::Cohort& cohort, const RunConfig& config) {
    config.validate();
    const auto options = config.eval_options();
    TrainEvalResult result;
    result.plan = pipeline::plan_for(cohort, options);
    for (auto label : config.specs) {
        result.reports.push_back(pipeline::evaluate_model(cohort::ModelSpec{label}, cohort, result.plan, options));
    }
    return result;
}

std::string summary_table(const std::vector<pipeline::EvalReport>& reports) {
    std::ostringstream s;
    s << "model,f2,auc_pct,aucpr,sensitivity_pct,specificity_pct,threshold,n_test\n";
    for (const auto& r : reports) {
        s << cohort::to_string(r.label) << ',' << fixed(r.f2, 4) << ',' << fixed(100.0 * r.auc, 1) << ','
          << fixed(r.aucpr, 4) << ',' << fixed(100.0 * r.threshold.sensitivity, 2) << ','
          << fixed(100.0 * r.threshold.specificity, 2) << ',' << fixed(r.threshold.threshold, 6) << ','
          << r.n_test << '\n';
    }
    return s.str();
}

void cmd_extract(const RunConfig& config) {
    const auto covariates = cohort::load_cohort(config.cohort_table);
    const auto table = extract_cohort(covariates, config);
    write_with(feature_table_path(config), [&](std::ostream& s) { cohort::write_cohort(s, table); });
    std::size_t flagged = 0;
    for (const auto& p : table) flagged += p.status != "ok";
    std::cout << "extract: " << table.size() << " patients, " << flagged << " flagged -> "
              << feature_table_path(config).string() << '\n';
}

void cmd_table_one(const RunConfig& config) {
    const auto table = cohort::summarize_table_one(cohort::load_cohort(feature_table_path(config)));
    const auto path = config.output_dir / "table_one.json";
    write_with(path, [&](std::ostream& s) { cohort::write_table_one(s, table); });
    std::cout << "table-one: " << table.rows.size() << " rows -> " << path.string() << '\n';
}

void cmd_train_eval(const RunConfig& config) {
    const auto cohort = cohort::load_cohort(feature_table_path(config));
    const auto result = train_eval(cohort, config);
    const auto& out = config.output_dir;

    nlohmann::ordered_json split;
    split["seed"] = result.plan.seed;
    split["stratified"] = result.plan.stratified;
    split["ratio"] = result.plan.ratio;
    split["train_ids"] = result.plan.train_ids;
    split["test_ids"] = result.plan.test_ids;
    write_text(out / "split.json", split.dump(2) + "\n");

    const pipeline::EvalReport* winner = nullptr;
    for (const auto& r : result.reports) {
        const auto label = std::string(cohort::to_string(r.label));
        write_text(out / "reports" / (label + ".json"), pipeline::report_json(r));
        write_text(out / "models" / (label + ".json"), gbt::serialize(r.representative.model));
        write_with(out / "plots" / (label + "_roc.csv"), [&](std::ostream& s) { pipeline::write_roc_table(s, r.roc); });
        write_with(out / "plots" / (label + "_pr.csv"), [&](std::ostream& s) { pipeline::write_pr_table(s, r.pr); });
        write_with(out / "plots" / (label + "_importance.csv"),
                   [&](std::ostream& s) { pipeline::write_importance_table(s, r.importance); });
        if (!winner || r.f2 > winner->f2 || (r.f2 == winner->f2 && r.auc > winner->auc)) winner = &r;
    }
    write_text(out / "summary.csv", summary_table(result.reports));
    if (winner) {
        write_with(out / "winner_importance.csv",
                   [&](std::ostream& s) { pipeline::write_importance_table(s, winner->importance); });
    }
    std::cout << summary_table(result.reports);
}

void cmd_synth(const RunConfig& config) {
    const auto patients = synth::generate(config.synth);
    synth::write_cohort_files(patients, config.synth, config.output_dir);
    std::size_t positives = 0;
    for (const auto& p : patients) positives += *p.record.outcome == cohort::Outcome::Positive;
    std::cout << "synth: " << patients.size() << " patients (" << patients.size() - positives << " negative, "
              << positives << " positive) -> " << config.output_dir.string() << '\n';
}

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidConfig:
            return 2;
        case ErrorKind::SingleClass:
        case ErrorKind::DegenerateTable:
        case ErrorKind::EmptyGroup:
        case ErrorKind::NoPositives:
        case ErrorKind::TooFewPerClass:
        case ErrorKind::TooSmall:
            return 4;
        default:
            return 3;
    }
}

}  // namespace geh::app
