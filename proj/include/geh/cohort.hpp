#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geh/ecg.hpp"
#include "geh/features.hpp"

namespace geh::cohort {

enum class Sex { F, M };
enum class Outcome { Negative, Positive };

inline constexpr std::size_t kStandardCount = 6;
inline constexpr std::size_t kRiskCount = 9;

inline constexpr std::array<std::string_view, kStandardCount> kStandardNames = {
    "p_dur_ms", "pr_ms", "qrs_ms", "qt_ms", "qtc_ms", "rr_ms"};

inline constexpr std::array<std::string_view, kRiskCount> kRiskNames = {
    "sex", "age_years", "bmi", "prev_cs", "prev_mi", "prev_pci", "prev_stroke", "htn", "dm"};

using StandardValues = std::array<std::optional<double>, kStandardCount>;
using GehValues = std::array<std::optional<double>, features::kGehCount>;

StandardValues to_values(const ecg::StandardEcgMeasures& m);
GehValues to_values(const features::GehMeasures& g);

struct PatientRecord {
    std::string id;
    Sex sex = Sex::F;
    double age_years = 0.0;
    double bmi_kg_m2 = 0.0;
    bool prev_cardiac_surgery = false;
    bool prev_mi = false;
    bool prev_pci = false;
    bool prev_stroke = false;
    bool hypertension = false;
    bool diabetes = false;
    StandardValues standard{};
    GehValues geh{};
    std::optional<Outcome> outcome;
    std::string status = "ok";  // extraction status; anything else flags the row

    /// Risk-factor block in kRiskNames order (sex F = 1).
    std::array<double, kRiskCount> risk_values() const;
};

using Cohort = std::vector<PatientRecord>;

enum class ModelLabel { S, R, G, SRG };

inline constexpr std::array<ModelLabel, 4> kAllModels = {ModelLabel::S, ModelLabel::R, ModelLabel::G,
                                                         ModelLabel::SRG};

std::string_view to_string(ModelLabel label) noexcept;
ModelLabel parse_model_label(std::string_view text);

struct ModelSpec {
    ModelLabel label = ModelLabel::SRG;

    /// S: 6 standard; R: 9 risk; G: 9 GEH; SRG: S, then R, then G.
    std::vector<std::string> feature_names() const;
};

struct FeatureMatrix {
    std::vector<std::string> columns;
    std::vector<std::string> ids;
    std::vector<double> values;  // row-major
    std::vector<int> labels;     // 1 = positive outcome
    std::size_t dropped = 0;     // patients removed by the missing-feature policy

    std::size_t rows() const noexcept { return ids.size(); }
    std::size_t cols() const noexcept { return columns.size(); }
    std::span<const double> row(std::size_t i) const noexcept {
        return {values.data() + i * cols(), cols()};
    }
    double at(std::size_t r, std::size_t c) const noexcept { return values[r * cols() + c]; }

    /// Row subset in the given order.
    FeatureMatrix subset(std::span<const std::size_t> rows) const;
};

/// Column order of the cohort table.
std::vector<std::string> cohort_table_columns();

Cohort load_cohort(const std::filesystem::path& path);
Cohort load_cohort(std::istream& in, std::string_view source = "<stream>");
void write_cohort(std::ostream& out, const Cohort& cohort);

/// Patients missing any active feature (or the outcome) are dropped. More than
/// `max_drop_fraction` of the cohort dropped raises MissingFeature.
FeatureMatrix assemble_features(const Cohort& cohort, const ModelSpec& spec, double max_drop_fraction = 0.5);

struct TableOneRow {
    std::string section;
    std::string variable;
    std::string kind;  // count | categorical | median_iqr | mean_sd
    std::string total;
    std::string negative;
    std::string positive;
    std::string p_value;  // formatted, "NA" when undefined
    std::string test;     // mann_whitney | welch_t | chi2_yates | fisher_exact | ""
};

struct TableOne {
    std::vector<TableOneRow> rows;
    std::size_t excluded_without_outcome = 0;
};

TableOne summarize_table_one(const Cohort& cohort);
void write_table_one(std::ostream& out, const TableOne& table);

std::string format_p_value(double p);

}  // namespace geh::cohort
