#include "geh/cohort.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include <json.hpp>

#include "geh/stats.hpp"

namespace geh::cohort {
namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_commas(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string fixed1(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    std::string s(buf);
    if (s == "-0.0") s = "0.0";
    return s;
}

bool is_missing(std::string_view cell) { return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN"; }

class RowParser {
public:
    RowParser(std::string_view source, std::size_t row, const std::vector<std::string>& cells,
              const std::map<std::string, std::size_t>& index)
        : source_(source), row_(row), cells_(cells), index_(index) {}

    [[noreturn]] void fail(std::string_view column, std::string_view why) const {
        throw Error(ErrorKind::SchemaError, std::string(source_) + ": row " + std::to_string(row_) + " column " +
                                                std::string(column) + ": " + std::string(why));
    }

    const std::string& cell(std::string_view column) const { return cells_[index_.at(std::string(column))]; }

    std::optional<double> optional_number(std::string_view column) const {
        const auto& text = cell(column);
        if (is_missing(text)) return std::nullopt;
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) fail(column, "not a number");
        return v;
    }

    double number(std::string_view column) const {
        const auto v = optional_number(column);
        if (!v) fail(column, "missing value");
        return *v;
    }

    bool flag(std::string_view column) const {
        const auto& text = cell(column);
        if (text == "1" || text == "true" || text == "yes") return true;
        if (text == "0" || text == "false" || text == "no") return false;
        fail(column, "expected 0 or 1");
    }

private:
    std::string_view source_;
    std::size_t row_;
    const std::vector<std::string>& cells_;
    const std::map<std::string, std::size_t>& index_;
};

struct Variable {
    std::string section;
    std::string label;
    std::string kind;
    std::function<std::optional<double>(const PatientRecord&)> value;
};

std::vector<Variable> table_one_variables() {
    std::vector<Variable> vars;
    const auto flag = [](bool PatientRecord::*member) {
        return [member](const PatientRecord& p) -> std::optional<double> { return p.*member ? 1.0 : 0.0; };
    };
    vars.push_back({"", "Sex = F", "categorical",
                    [](const PatientRecord& p) -> std::optional<double> { return p.sex == Sex::F ? 1.0 : 0.0; }});
    vars.push_back({"", "Age, y", "median_iqr",
                    [](const PatientRecord& p) -> std::optional<double> { return p.age_years; }});
    vars.push_back({"", "BMI, kg/m²", "median_iqr",
                    [](const PatientRecord& p) -> std::optional<double> { return p.bmi_kg_m2; }});
    const std::string risk = "Risk factors";
    vars.push_back({risk, "Previous cardiac surgery", "categorical", flag(&PatientRecord::prev_cardiac_surgery)});
    vars.push_back({risk, "Previous MI", "categorical", flag(&PatientRecord::prev_mi)});
    vars.push_back({risk, "Previous PCI", "categorical", flag(&PatientRecord::prev_pci)});
    vars.push_back({risk, "Previous stroke", "categorical", flag(&PatientRecord::prev_stroke)});
    vars.push_back({risk, "Hypertension", "categorical", flag(&PatientRecord::hypertension)});
    vars.push_back({risk, "Diabetes", "categorical", flag(&PatientRecord::diabetes)});

    const std::array<std::string, kStandardCount> standard_labels = {
        "P-wave interval, ms", "PR segment interval, ms", "QRS interval, ms",
        "QT interval, ms",     "Corrected QTi, ms",       "RR interval, ms"};
    for (std::size_t i = 0; i < kStandardCount; ++i) {
        vars.push_back({"Standard ECG parameters", standard_labels[i], i == 4 ? "mean_sd" : "median_iqr",
                        [i](const PatientRecord& p) { return p.standard[i]; }});
    }
    const std::array<std::string, features::kGehCount> geh_labels = {
        "Peak QRST angle,°",     "Area QRST angle,°",    "Peak SVG Azimuth,°",
        "Area SVG Azimuth,°",    "Peak SVG Elevation,°", "Area SVG Elevation,°",
        "Peak SVG, mV",               "VmQTI, mVms",               "SVG, mV*ms"};
    for (std::size_t i = 0; i < features::kGehCount; ++i) {
        vars.push_back({"GEH Parameters", geh_labels[i], "median_iqr",
                        [i](const PatientRecord& p) { return p.geh[i]; }});
    }
    return vars;
}

std::string describe(const std::string& kind, std::vector<double> values) {
    if (values.empty()) return "NA";
    std::sort(values.begin(), values.end());
    if (kind == "categorical") {
        const auto n = static_cast<double>(values.size());
        const auto count = std::count(values.begin(), values.end(), 1.0);
        return std::to_string(count) + " (" + fixed1(100.0 * static_cast<double>(count) / n) + ")";
    }
    if (kind == "mean_sd") {
        const double sd = values.size() > 1 ? stats::stddev(values) : 0.0;
        return fixed1(stats::mean(values)) + " (" + fixed1(sd) + ")";
    }
    return fixed1(stats::quantile(values, 0.5)) + " [" + fixed1(stats::quantile(values, 0.25)) + ", " +
           fixed1(stats::quantile(values, 0.75)) + "]";
}

}  // namespace

StandardValues to_values(const ecg::StandardEcgMeasures& m) {
    return {m.p_dur_ms, m.pr_ms, m.qrs_ms, m.qt_ms, m.qtc_ms, m.rr_ms};
}

GehValues to_values(const features::GehMeasures& g) {
    GehValues out{};
    const auto v = g.values();
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
    return out;
}

std::array<double, kRiskCount> PatientRecord::risk_values() const {
    const auto b = [](bool x) { return x ? 1.0 : 0.0; };
    return {sex == Sex::F ? 1.0 : 0.0, age_years,        bmi_kg_m2,       b(prev_cardiac_surgery), b(prev_mi),
            b(prev_pci),               b(prev_stroke),   b(hypertension), b(diabetes)};
}

std::string_view to_string(ModelLabel label) noexcept {
    switch (label) {
        case ModelLabel::S: return "S";
        case ModelLabel::R: return "R";
        case ModelLabel::G: return "G";
        case ModelLabel::SRG: return "SRG";
    }
    return "?";
}

ModelLabel parse_model_label(std::string_view text) {
    std::string upper(text);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    for (auto label : kAllModels) {
        if (to_string(label) == upper) return label;
    }
    throw Error(ErrorKind::InvalidConfig, "unknown model spec '" + std::string(text) + "'");
}

std::vector<std::string> ModelSpec::feature_names() const {
    std::vector<std::string> names;
    const bool s = label == ModelLabel::S || label == ModelLabel::SRG;
    const bool r = label == ModelLabel::R || label == ModelLabel::SRG;
    const bool g = label == ModelLabel::G || label == ModelLabel::SRG;
    if (s) names.insert(names.end(), kStandardNames.begin(), kStandardNames.end());
    if (r) names.insert(names.end(), kRiskNames.begin(), kRiskNames.end());
    if (g) names.insert(names.end(), features::kGehNames.begin(), features::kGehNames.end());
    return names;
}

FeatureMatrix FeatureMatrix::subset(std::span<const std::size_t> rows) const {
    FeatureMatrix out;
    out.columns = columns;
    out.values.reserve(rows.size() * cols());
    for (auto r : rows) {
        out.ids.push_back(ids[r]);
        out.labels.push_back(labels[r]);
        const auto src = row(r);
        out.values.insert(out.values.end(), src.begin(), src.end());
    }
    return out;
}

std::vector<std::string> cohort_table_columns() {
    std::vector<std::string> cols = {"id",      "sex",    "age_years",   "bmi", "prev_cs", "prev_mi",
                                     "prev_pci", "prev_stroke", "htn", "dm",  "outcome"};
    cols.insert(cols.end(), kStandardNames.begin(), kStandardNames.end());
    cols.insert(cols.end(), features::kGehNames.begin(), features::kGehNames.end());
    return cols;
}

Cohort load_cohort(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    return load_cohort(in, path.string());
}

Cohort load_cohort(std::istream& in, std::string_view source) {
    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) {
        throw Error(ErrorKind::SchemaError, std::string(source) + ": empty cohort table");
    }
    const auto header = split_commas(line);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < header.size(); ++i) index[header[i]] = i;
    for (const auto& col : cohort_table_columns()) {
        if (!index.count(col)) {
            throw Error(ErrorKind::SchemaError, std::string(source) + ": row 0 column " + col + ": missing column");
        }
    }
    const bool has_status = index.count("status") > 0;

    Cohort cohort;
    std::set<std::string> seen;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto cells = split_commas(line);
        const RowParser p(source, row, cells, index);
        if (cells.size() != header.size()) p.fail("*", "expected " + std::to_string(header.size()) + " cells");

        PatientRecord r;
        r.id = p.cell("id");
        if (r.id.empty()) p.fail("id", "empty id");
        if (!seen.insert(r.id).second) {
            throw Error(ErrorKind::DuplicateId, std::string(source) + ": row " + std::to_string(row) + " id " + r.id);
        }
        const auto& sex = p.cell("sex");
        if (sex == "F") {
            r.sex = Sex::F;
        } else if (sex == "M") {
            r.sex = Sex::M;
        } else {
            p.fail("sex", "expected F or M");
        }
        r.age_years = p.number("age_years");
        if (!(r.age_years > 0.0)) p.fail("age_years", "must be > 0");
        r.bmi_kg_m2 = p.number("bmi");
        if (!(r.bmi_kg_m2 > 0.0)) p.fail("bmi", "must be > 0");
        r.prev_cardiac_surgery = p.flag("prev_cs");
        r.prev_mi = p.flag("prev_mi");
        r.prev_pci = p.flag("prev_pci");
        r.prev_stroke = p.flag("prev_stroke");
        r.hypertension = p.flag("htn");
        r.diabetes = p.flag("dm");
        const auto& outcome = p.cell("outcome");
        if (outcome == "positive" || outcome == "1") {
            r.outcome = Outcome::Positive;
        } else if (outcome == "negative" || outcome == "0") {
            r.outcome = Outcome::Negative;
        } else if (!is_missing(outcome)) {
            p.fail("outcome", "expected positive or negative");
        }
        for (std::size_t i = 0; i < kStandardCount; ++i) r.standard[i] = p.optional_number(kStandardNames[i]);
        for (std::size_t i = 0; i < features::kGehCount; ++i) r.geh[i] = p.optional_number(features::kGehNames[i]);
        if (has_status && !p.cell("status").empty()) r.status = p.cell("status");
        cohort.push_back(std::move(r));
    }
    if (cohort.empty()) throw Error(ErrorKind::SchemaError, std::string(source) + ": no data rows");
    return cohort;
}

void write_cohort(std::ostream& out, const Cohort& cohort) {
    const auto cols = cohort_table_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << ",status\n";
    const auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    for (const auto& r : cohort) {
        out << r.id << ',' << (r.sex == Sex::F ? "F" : "M") << ',' << format_number(r.age_years) << ','
            << format_number(r.bmi_kg_m2) << ',' << int(r.prev_cardiac_surgery) << ',' << int(r.prev_mi) << ','
            << int(r.prev_pci) << ',' << int(r.prev_stroke) << ',' << int(r.hypertension) << ','
            << int(r.diabetes) << ','
            << (r.outcome ? (*r.outcome == Outcome::Positive ? "positive" : "negative") : "");
        for (const auto& v : r.standard) out << ',' << opt(v);
        for (const auto& v : r.geh) out << ',' << opt(v);
        out << ',' << r.status << '\n';
    }
}

FeatureMatrix assemble_features(const Cohort& cohort, const ModelSpec& spec, double max_drop_fraction) {
    FeatureMatrix m;
    m.columns = spec.feature_names();
    const bool s = spec.label == ModelLabel::S || spec.label == ModelLabel::SRG;
    const bool r = spec.label == ModelLabel::R || spec.label == ModelLabel::SRG;
    const bool g = spec.label == ModelLabel::G || spec.label == ModelLabel::SRG;

    std::vector<double> row;
    for (const auto& p : cohort) {
        row.clear();
        bool complete = p.outcome.has_value();
        if (s) {
            for (const auto& v : p.standard) {
                complete = complete && v.has_value();
                row.push_back(v.value_or(0.0));
            }
        }
        if (r) {
            const auto risk = p.risk_values();
            row.insert(row.end(), risk.begin(), risk.end());
        }
        if (g) {
            for (const auto& v : p.geh) {
                complete = complete && v.has_value();
                row.push_back(v.value_or(0.0));
            }
        }
        if (!complete) {
            ++m.dropped;
            continue;
        }
        m.ids.push_back(p.id);
        m.labels.push_back(*p.outcome == Outcome::Positive ? 1 : 0);
        m.values.insert(m.values.end(), row.begin(), row.end());
    }
    if (!cohort.empty() &&
        static_cast<double>(m.dropped) > max_drop_fraction * static_cast<double>(cohort.size())) {
        throw Error(ErrorKind::MissingFeature, std::to_string(m.dropped) + " of " + std::to_string(cohort.size()) +
                                                   " patients lack features for spec " +
                                                   std::string(to_string(spec.label)));
    }
    return m;
}

std::string format_p_value(double p) {
    if (!std::isfinite(p)) return "NA";
    if (p < 0.001) return "<0.001";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", p);
    return buf;
}

TableOne summarize_table_one(const Cohort& cohort) {
    TableOne table;
    std::vector<const PatientRecord*> neg;
    std::vector<const PatientRecord*> pos;
    for (const auto& p : cohort) {
        if (!p.outcome) {
            ++table.excluded_without_outcome;
            continue;
        }
        (*p.outcome == Outcome::Positive ? pos : neg).push_back(&p);
    }
    const bool contrast = !neg.empty() && !pos.empty();

    table.rows.push_back({"", "N", "count", std::to_string(neg.size() + pos.size()), std::to_string(neg.size()),
                          std::to_string(pos.size()), "", ""});

    for (const auto& var : table_one_variables()) {
        const auto collect = [&](const std::vector<const PatientRecord*>& group) {
            std::vector<double> out;
            for (const auto* p : group) {
                if (auto v = var.value(*p)) out.push_back(*v);
            }
            std::sort(out.begin(), out.end());
            return out;
        };
        const auto a = collect(neg);
        const auto b = collect(pos);
        auto all = a;
        all.insert(all.end(), b.begin(), b.end());

        TableOneRow row{var.section, var.label, var.kind, describe(var.kind, all), describe(var.kind, a),
                        describe(var.kind, b), "NA", ""};
        if (contrast) {
            try {
                if (var.kind == "categorical") {
                    const auto yes = [](const std::vector<double>& v) {
                        return static_cast<std::int64_t>(std::count(v.begin(), v.end(), 1.0));
                    };
                    const stats::Table2x2 t = {{{yes(a), static_cast<std::int64_t>(a.size()) - yes(a)},
                                                {yes(b), static_cast<std::int64_t>(b.size()) - yes(b)}}};
                    if (stats::min_expected_count(t) < 5.0) {
                        row.test = "fisher_exact";
                        row.p_value = format_p_value(stats::fisher_exact_2x2(t));
                    } else {
                        row.test = "chi2_yates";
                        row.p_value = format_p_value(stats::chi_square_2x2(t).p);
                    }
                } else if (var.kind == "mean_sd") {
                    row.test = "welch_t";
                    row.p_value = format_p_value(stats::welch_t_test(a, b).p);
                } else {
                    row.test = "mann_whitney";
                    row.p_value = format_p_value(stats::mann_whitney(a, b).p);
                }
            } catch (const Error&) {
                row.p_value = "NA";
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_table_one(std::ostream& out, const TableOne& table) {
    nlohmann::ordered_json doc;
    doc["format"] = "geh-table-one";
    doc["version"] = 1;
    doc["columns"] = {"variable", "total", "negative", "positive", "p_value"};
    doc["tests"] = {{"categorical", "chi2_yates, fisher_exact when an expected cell < 5"},
                    {"median_iqr", "mann_whitney"},
                    {"mean_sd", "welch_t"},
                    {"quantiles", "linear interpolation (type 7)"}};
    doc["excluded_without_outcome"] = table.excluded_without_outcome;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : table.rows) {
        nlohmann::ordered_json j;
        j["section"] = r.section;
        j["variable"] = r.variable;
        j["kind"] = r.kind;
        j["total"] = r.total;
        j["negative"] = r.negative;
        j["positive"] = r.positive;
        j["p_value"] = r.p_value;
        j["test"] = r.test;
        rows.push_back(std::move(j));
    }
    doc["rows"] = std::move(rows);
    out << doc.dump(2) << '\n';
}

}  // namespace geh::cohort
