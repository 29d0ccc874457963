#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "geh/commands.hpp"

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string specs;
    bool no_stratify = false;
    bool holdout_selection = false;
    std::optional<double> min_sens;
};

geh::app::RunConfig resolve(const Flags& flags) {
    geh::app::RunConfig config;
    if (!flags.config.empty()) config = geh::app::load_run_config(flags.config);
    if (flags.seed) {
        config.master_seed = *flags.seed;
        config.synth.seed = *flags.seed;
    }
    if (!flags.out.empty()) config.output_dir = flags.out;
    if (!flags.specs.empty()) config.specs = geh::app::parse_specs(flags.specs);
    if (flags.no_stratify) config.stratify = false;
    if (flags.holdout_selection) config.holdout_selection = true;
    if (flags.min_sens) config.min_sensitivity = *flags.min_sens;
    config.validate();
    config.synth.validate();
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Outcome triage from 12-lead ECG heterogeneity features and risk factors"};
    app.require_subcommand(1);

    Flags flags;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config, "run configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", flags.seed, "master seed (overrides config)");
        sub->add_option("--out", flags.out, "output directory (overrides config)");
    };

    auto* extract = app.add_subcommand("extract", "median beats, VCG and GEH features for every patient");
    add_common(extract);
    auto* table_one = app.add_subcommand("table-one", "baseline characteristics by outcome");
    add_common(table_one);
    auto* train_eval = app.add_subcommand("train-eval", "tune, train and evaluate the model family");
    add_common(train_eval);
    train_eval->add_option("--specs", flags.specs, "comma-separated subset of S,R,G,SRG");
    train_eval->add_flag("--no-stratify", flags.no_stratify, "plain random train/test split");
    train_eval->add_flag("--holdout-selection", flags.holdout_selection,
                         "pick the representative instance on a holdout carved from training");
    train_eval->add_option("--min-sens", flags.min_sens, "minimum sensitivity for the threshold");
    auto* synth = app.add_subcommand("synth", "write a synthetic cohort with ECG and fiducial files");
    add_common(synth);
    app.add_subcommand("version", "print version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("version")) {
            std::cout << "geh-triage " << geh::app::kVersion << '\n';
            return 0;
        }
        const auto config = resolve(flags);
        if (app.got_subcommand(extract)) geh::app::cmd_extract(config);
        else if (app.got_subcommand(table_one)) geh::app::cmd_table_one(config);
        else if (app.got_subcommand(train_eval)) geh::app::cmd_train_eval(config);
        else if (app.got_subcommand(synth)) geh::app::cmd_synth(config);
        return 0;
    } catch (const geh::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return geh::app::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
