#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "geh/commands.hpp"
#include "geh/synth.hpp"

using namespace geh;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("geh_app_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("synthesis matrix inverts the Kors map") {
    const auto s = synth::synthesis_matrix();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            double v = 0.0;
            for (int k = 0; k < 8; ++k) v += vcg::kKorsMatrix[r][k] * s[k][c];
            CHECK(v == doctest::Approx(r == c ? 1.0 : 0.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("generator is reproducible and well-formed") {
    synth::SynthConfig cfg;
    cfg.n_patients = 40;
    cfg.seed = 3;
    CHECK(synth::positive_count(cfg) == 7);
    cfg.n_patients = 300;
    CHECK(synth::positive_count(cfg) == 56);
    cfg.n_patients = 40;
    const auto a = synth::generate(cfg);
    const auto b = synth::generate(cfg);
    REQUIRE(a.size() == 40);
    std::size_t positives = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].ecg.leads == b[i].ecg.leads);
        CHECK_NOTHROW(a[i].fiducials.validate(a[i].ecg.length()));
        CHECK_NOTHROW(a[i].ecg.validate());
        positives += *a[i].record.outcome == cohort::Outcome::Positive;
        // limb leads obey Einthoven
        const auto& l = a[i].ecg.leads;
        CHECK(l[2][100] == doctest::Approx(l[1][100] - l[0][100]));
    }
    CHECK(positives == 7);
    cfg.seed = 4;
    CHECK(synth::generate(cfg)[0].ecg.leads != a[0].ecg.leads);
    cfg.n_patients = 3;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("extraction recovers the generated QRS-T angle") {
    synth::SynthConfig cfg;
    cfg.n_patients = 20;
    cfg.noise_sd_mv = 0.0;
    const auto patients = synth::generate(cfg);
    for (const auto& p : patients) {
        const auto ex = app::extract_patient(p.ecg, p.fiducials, {});
        REQUIRE(ex.geh);
        CHECK(ex.status == "ok");
        CHECK(std::abs(ex.geh->peak_qrst_angle_deg - p.truth.qrst_angle_deg) <= 5.0);
        CHECK(ex.standard.qtc_ms > ex.standard.qt_ms * 0.8);
    }
}

TEST_CASE("flat T wave is flagged, not fatal") {
    synth::SynthConfig cfg;
    cfg.n_patients = 12;
    cfg.zero_t_patients = 2;
    const auto patients = synth::generate(cfg);
    std::size_t flagged = 0;
    for (const auto& p : patients) {
        const auto ex = app::extract_patient(p.ecg, p.fiducials, {});
        if (p.truth.zero_t) {
            CHECK_FALSE(ex.geh.has_value());
            CHECK(ex.status.rfind("degenerate:", 0) == 0);
            CHECK(ex.standard.qrs_ms > 0.0);
            ++flagged;
        }
    }
    CHECK(flagged == 2);
}

TEST_CASE("run configuration parsing") {
    std::istringstream in(
        "# comment\n"
        "ecg_dir = data/ecg\n"
        "output_dir=/abs/out\n"
        "master_seed=17\n"
        "eta_grid=0.05, 0.2\n"
        "specs=S,SRG\n"
        "stratify=false\n"
        "beat_aggregation=mean\n"
        "synth_n_patients=120\n");
    const auto c = app::parse_run_config(in, "/base");
    CHECK(c.ecg_dir == fs::path("/base/data/ecg"));
    CHECK(c.output_dir == fs::path("/abs/out"));
    CHECK(c.master_seed == 17);
    CHECK(c.eta_grid == std::vector<double>{0.05, 0.2});
    CHECK(c.specs == std::vector<cohort::ModelLabel>{cohort::ModelLabel::S, cohort::ModelLabel::SRG});
    CHECK_FALSE(c.stratify);
    CHECK(c.beat_aggregation == ecg::Aggregation::Mean);
    CHECK(c.synth.n_patients == 120);

    const auto kind = [](const std::string& text) {
        std::istringstream s(text);
        try {
            app::parse_run_config(s, ".").validate();
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::Io;
    };
    CHECK(kind("bogus=1\n") == ErrorKind::InvalidConfig);
    CHECK(kind("k_folds=x\n") == ErrorKind::InvalidConfig);
    CHECK(kind("min_sensitivity=1.5\n") == ErrorKind::InvalidConfig);
    CHECK(kind("specs=Q\n") == ErrorKind::InvalidConfig);
    CHECK(kind("no equals sign\n") == ErrorKind::InvalidConfig);
    CHECK(app::exit_code_for(ErrorKind::InvalidConfig) == 2);
    CHECK(app::exit_code_for(ErrorKind::MissingLead) == 3);
    CHECK(app::exit_code_for(ErrorKind::SingleClass) == 4);
}

TEST_CASE("synth, extract, table-one and train-eval write their outputs") {
    const auto dir = scratch("pipeline");
    app::RunConfig cfg;
    cfg.output_dir = dir;
    cfg.synth.n_patients = 120;
    cfg.synth.seed = 5;
    cfg.synth.zero_t_patients = 1;
    app::cmd_synth(cfg);
    CHECK(fs::exists(dir / "cohort.csv"));
    CHECK(fs::exists(dir / "run.cfg"));

    auto run = app::load_run_config(dir / "run.cfg");
    run.eta_grid = {0.1, 0.3};
    run.max_rounds = 60;
    run.n_instances = 3;
    app::cmd_extract(run);
    const auto features = cohort::load_cohort(run.output_dir / "cohort_features.csv");
    CHECK(features.size() == 120);
    CHECK(std::count_if(features.begin(), features.end(), [](const auto& p) { return p.status != "ok"; }) == 1);

    app::cmd_table_one(run);
    CHECK(fs::exists(run.output_dir / "table_one.json"));

    app::cmd_train_eval(run);
    for (auto label : {"S", "R", "G", "SRG"}) {
        CHECK(fs::exists(run.output_dir / "reports" / (std::string(label) + ".json")));
        CHECK(fs::exists(run.output_dir / "models" / (std::string(label) + ".json")));
        CHECK(fs::exists(run.output_dir / "plots" / (std::string(label) + "_roc.csv")));
    }
    const auto summary = slurp(run.output_dir / "summary.csv");
    CHECK(summary.rfind("model,f2,auc_pct", 0) == 0);
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 5);
    CHECK(fs::exists(run.output_dir / "winner_importance.csv"));

    const auto first = slurp(run.output_dir / "reports" / "SRG.json");
    app::cmd_train_eval(run);
    CHECK(slurp(run.output_dir / "reports" / "SRG.json") == first);

    const auto model = gbt::deserialize(slurp(run.output_dir / "models" / "SRG.json"));
    CHECK(model.manifest.size() == 24);
    fs::remove_all(dir);
}

TEST_CASE("extract marks unreadable patients") {
    const auto dir = scratch("broken");
    app::RunConfig cfg;
    cfg.output_dir = dir;
    cfg.synth.n_patients = 12;
    app::cmd_synth(cfg);
    auto run = app::load_run_config(dir / "run.cfg");
    fs::remove(run.ecg_dir / "P0003.csv");
    std::ofstream(run.fiducial_dir / "P0004.json") << "{\"beats\": []}";
    const auto out = app::extract_cohort(cohort::load_cohort(run.cohort_table), run);
    CHECK(out[2].status == "error:Io");
    CHECK(out[3].status == "error:TooFewBeats");
    CHECK(out[0].status == "ok");
    fs::remove_all(dir);
}
