#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "geh/cohort.hpp"
#include "geh/pipeline.hpp"
#include "geh/synth.hpp"

namespace geh::app {

struct RunConfig {
    std::filesystem::path ecg_dir = "ecg";
    std::filesystem::path fiducial_dir = "fiducials";
    std::filesystem::path cohort_table = "cohort.csv";
    std::filesystem::path output_dir = "results";
    std::uint64_t master_seed = 0;
    std::vector<double> eta_grid = {0.01, 0.05, 0.1, 0.2, 0.3};
    int k_folds = 5;
    int patience = 20;
    int max_rounds = 500;
    std::size_t n_instances = 50;
    double min_sensitivity = 0.90;
    double train_ratio = 0.7;
    std::vector<cohort::ModelLabel> specs = {cohort::kAllModels.begin(), cohort::kAllModels.end()};
    bool stratify = true;
    bool holdout_selection = false;
    ecg::Aggregation beat_aggregation = ecg::Aggregation::Median;
    double pre_ms = 300.0;
    double post_ms = 500.0;
    double min_wave_amplitude_mv = 0.05;
    double min_t_to_qrs_ratio = 0.05;
    bool dump_vcg = false;
    gbt::TrainConfig tree;
    synth::SynthConfig synth;

    void validate() const;
    pipeline::EvalOptions eval_options() const;
};

/// Flat key=value text; '#' starts a comment. Relative paths resolve against
/// `base_dir` (the config file's directory).
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

std::vector<cohort::ModelLabel> parse_specs(std::string_view list);

struct ExtractOptions {
    ecg::BeatWindow window;
    ecg::Aggregation aggregation = ecg::Aggregation::Median;
    double min_wave_amplitude_mv = 0.05;
    double min_t_to_qrs_ratio = 0.05;  // T peak below this share of the QRS peak counts as flat
};

struct Extraction {
    ecg::StandardEcgMeasures standard;
    std::optional<features::GehMeasures> geh;
    vcg::Vcg vcg;
    std::string status = "ok";  // "degenerate:<why>" keeps standard measures but no GEH
};

/// Median beat, baseline, Kors, GEH and interval measures for one patient.
Extraction extract_patient(const ecg::EcgRecord& record, const ecg::FiducialSet& fiducials,
                           const ExtractOptions& options);

/// Fills feature columns of `covariates`; failures mark the row's status.
cohort::Cohort extract_cohort(const cohort::Cohort& covariates, const RunConfig& config);

struct TrainEvalResult {
    pipeline::SplitPlan plan;
    std::vector<pipeline::EvalReport> reports;
};

TrainEvalResult train_eval(const cohort::Cohort& cohort, const RunConfig& config);
std::string summary_table(const std::vector<pipeline::EvalReport>& reports);

// Subcommands; each writes only under config.output_dir.
void cmd_extract(const RunConfig& config);
void cmd_table_one(const RunConfig& config);
void cmd_train_eval(const RunConfig& config);
void cmd_synth(const RunConfig& config);

/// 0 success, 2 config error, 3 data error, 4 degenerate statistics.
int exit_code_for(ErrorKind kind) noexcept;

inline constexpr std::string_view kVersion = "1.0.0";

}  // namespace geh::app
