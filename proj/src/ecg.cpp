#include "geh/ecg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace geh::ecg {
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

std::optional<double> to_double(std::string_view text) {
    double value = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

struct Header {
    double sampling_rate_hz = 0.0;
    double gain_uv_per_unit = 0.0;
};

Header parse_header(const std::string& line, std::string_view source) {
    Header header;
    bool have_rate = false;
    bool have_gain = false;
    std::istringstream tokens(line);
    std::string token;
    while (tokens >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::BadHeader, std::string(source) + ": malformed token '" + token + "'");
        }
        const auto key = token.substr(0, eq);
        const auto value = to_double(std::string_view(token).substr(eq + 1));
        if (!value || !std::isfinite(*value)) {
            throw Error(ErrorKind::BadHeader, std::string(source) + ": bad value for '" + key + "'");
        }
        if (key == "sample_rate_hz") {
            header.sampling_rate_hz = *value;
            have_rate = true;
        } else if (key == "gain_uv_per_unit") {
            header.gain_uv_per_unit = *value;
            have_gain = true;
        } else {
            throw Error(ErrorKind::BadHeader, std::string(source) + ": unknown key '" + key + "'");
        }
    }
    if (!have_rate || !have_gain) {
        throw Error(ErrorKind::BadHeader,
                    std::string(source) + ": header needs sample_rate_hz and gain_uv_per_unit");
    }
    if (header.sampling_rate_hz < 100.0) {
        throw Error(ErrorKind::BadHeader, std::string(source) + ": sample_rate_hz must be >= 100");
    }
    if (header.gain_uv_per_unit <= 0.0) {
        throw Error(ErrorKind::BadHeader, std::string(source) + ": gain_uv_per_unit must be > 0");
    }
    return header;
}

bool is_lead_name_row(const std::vector<std::string>& cells) {
    return std::any_of(cells.begin(), cells.end(), [](const std::string& c) {
        return std::find(kLeadNames.begin(), kLeadNames.end(), c) != kLeadNames.end();
    });
}

void check_wave(const Wave& w, std::string_view name, std::size_t beat, std::size_t length) {
    const auto tag = "beat " + std::to_string(beat) + " " + std::string(name);
    if (w.onset < 0 || static_cast<std::size_t>(w.offset) >= length) {
        throw Error(ErrorKind::BadFiducials, tag + ": index outside record");
    }
    if (!(w.onset <= w.peak && w.peak <= w.offset)) {
        throw Error(ErrorKind::BadFiducials, tag + ": onset <= peak <= offset violated");
    }
}

int beat_start(const BeatAnnotation& b) {
    return std::min(b.baseline, b.p ? b.p->onset : b.qrs.onset);
}

int beat_end(const BeatAnnotation& b) { return std::max(b.baseline, b.t.offset); }

nlohmann::json wave_json(const Wave& w) {
    return {{"onset", w.onset}, {"peak", w.peak}, {"offset", w.offset}};
}

Wave wave_from_json(const nlohmann::json& j) {
    return Wave{j.at("onset").get<int>(), j.at("peak").get<int>(), j.at("offset").get<int>()};
}

double median_of(std::vector<double>& values) {
    const auto n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (n % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

int median_landmark(std::vector<double> offsets) {
    return static_cast<int>(std::floor(median_of(offsets) + 0.5));
}

}  // namespace

void EcgRecord::validate() const {
    if (!(sampling_rate_hz > 0.0) || !std::isfinite(sampling_rate_hz)) {
        throw Error(ErrorKind::BadHeader, "sampling rate must be positive");
    }
    const auto n = leads[0].size();
    for (std::size_t l = 0; l < kLeadCount; ++l) {
        if (leads[l].size() != n) {
            throw Error(ErrorKind::LengthMismatch, "lead " + std::string(kLeadNames[l]) + " has " +
                                                       std::to_string(leads[l].size()) +
                                                       " samples, expected " + std::to_string(n));
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(leads[l][i])) {
                throw Error(ErrorKind::NonFiniteSample,
                            "lead " + std::string(kLeadNames[l]) + " row " + std::to_string(i));
            }
        }
    }
    if (static_cast<std::size_t>(std::llround(duration_s * sampling_rate_hz)) != n) {
        throw Error(ErrorKind::LengthMismatch, "duration does not match sample count");
    }
}

void FiducialSet::validate(std::size_t record_length) const {
    if (beats.size() < 3) {
        throw Error(ErrorKind::TooFewBeats,
                    "need at least 3 annotated beats, got " + std::to_string(beats.size()));
    }
    for (std::size_t i = 0; i < beats.size(); ++i) {
        const auto& b = beats[i];
        if (b.baseline < 0 || static_cast<std::size_t>(b.baseline) >= record_length) {
            throw Error(ErrorKind::BadFiducials, "beat " + std::to_string(i) + ": baseline outside record");
        }
        if (b.p) {
            check_wave(*b.p, "P", i, record_length);
            if (b.p->offset > b.qrs.onset) {
                throw Error(ErrorKind::BadFiducials, "beat " + std::to_string(i) + ": P overlaps QRS");
            }
        }
        check_wave(b.qrs, "QRS", i, record_length);
        check_wave(b.t, "T", i, record_length);
        if (b.qrs.offset > b.t.onset) {
            throw Error(ErrorKind::BadFiducials, "beat " + std::to_string(i) + ": QRS overlaps T");
        }
        if (i > 0 && beat_start(b) <= beat_end(beats[i - 1])) {
            throw Error(ErrorKind::BadFiducials,
                        "beat " + std::to_string(i) + " overlaps or precedes beat " + std::to_string(i - 1));
        }
    }
}

EcgRecord parse_ecg(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    return parse_ecg(in, path.string());
}

EcgRecord parse_ecg(std::istream& in, std::string_view source) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorKind::BadHeader, std::string(source) + ": empty file");
    }
    const Header header = parse_header(line, source);

    // Column c of the file feeds lead column_lead[c].
    std::vector<std::size_t> column_lead(kLeadCount);
    for (std::size_t c = 0; c < kLeadCount; ++c) column_lead[c] = c;
    bool named_columns = false;

    EcgRecord record;
    record.sampling_rate_hz = header.sampling_rate_hz;
    const double to_mv = header.gain_uv_per_unit / 1000.0;

    std::size_t row = 0;
    std::size_t expected_columns = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split_commas(line);
        if (row == 0 && !named_columns && is_lead_name_row(cells)) {
            column_lead.assign(cells.size(), kLeadCount);
            std::array<bool, kLeadCount> seen{};
            for (std::size_t c = 0; c < cells.size(); ++c) {
                const auto it = std::find(kLeadNames.begin(), kLeadNames.end(), cells[c]);
                if (it == kLeadNames.end()) {
                    throw Error(ErrorKind::BadHeader, std::string(source) + ": unknown lead '" + cells[c] + "'");
                }
                const auto l = static_cast<std::size_t>(it - kLeadNames.begin());
                if (seen[l]) {
                    throw Error(ErrorKind::BadHeader, std::string(source) + ": duplicate lead '" + cells[c] + "'");
                }
                seen[l] = true;
                column_lead[c] = l;
            }
            for (std::size_t l = 0; l < kLeadCount; ++l) {
                if (!seen[l]) throw Error(ErrorKind::MissingLead, std::string(kLeadNames[l]));
            }
            named_columns = true;
            continue;
        }
        if (row == 0) {
            expected_columns = named_columns ? column_lead.size() : kLeadCount;
            if (!named_columns && cells.size() < kLeadCount) {
                throw Error(ErrorKind::MissingLead, std::string(kLeadNames[cells.size()]));
            }
        }
        if (cells.size() != expected_columns) {
            const auto short_lead = cells.size() < expected_columns ? column_lead[cells.size()] : kLeadCount - 1;
            throw Error(ErrorKind::LengthMismatch, std::string(source) + ": row " + std::to_string(row) +
                                                       " has " + std::to_string(cells.size()) +
                                                       " columns (lead " +
                                                       std::string(kLeadNames[short_lead]) + ")");
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto value = to_double(cells[c]);
            const auto lead = column_lead[c];
            if (!value || !std::isfinite(*value)) {
                throw Error(ErrorKind::NonFiniteSample, std::string(source) + ": row " + std::to_string(row) +
                                                            " lead " + std::string(kLeadNames[lead]));
            }
            record.leads[lead].push_back(*value * to_mv);
        }
        ++row;
    }
    if (row == 0) throw Error(ErrorKind::LengthMismatch, std::string(source) + ": no samples");
    record.duration_s = static_cast<double>(row) / record.sampling_rate_hz;
    record.validate();
    return record;
}

void write_ecg(std::ostream& out, const EcgRecord& record, double gain_uv_per_unit) {
    out << "sample_rate_hz=" << record.sampling_rate_hz << " gain_uv_per_unit=" << gain_uv_per_unit << '\n';
    for (std::size_t l = 0; l < kLeadCount; ++l) out << (l ? "," : "") << kLeadNames[l];
    out << '\n';
    const double to_units = 1000.0 / gain_uv_per_unit;
    for (std::size_t i = 0; i < record.length(); ++i) {
        for (std::size_t l = 0; l < kLeadCount; ++l) {
            out << (l ? "," : "") << std::llround(record.leads[l][i] * to_units);
        }
        out << '\n';
    }
}

FiducialSet parse_fiducials(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    return parse_fiducials(in, path.string());
}

FiducialSet parse_fiducials(std::istream& in, std::string_view source) {
    FiducialSet set;
    try {
        const auto doc = nlohmann::json::parse(in);
        for (const auto& beat : doc.at("beats")) {
            BeatAnnotation b;
            b.baseline = beat.at("baseline").get<int>();
            if (beat.contains("p") && !beat.at("p").is_null()) b.p = wave_from_json(beat.at("p"));
            b.qrs = wave_from_json(beat.at("qrs"));
            b.t = wave_from_json(beat.at("t"));
            set.beats.push_back(b);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::BadFiducials, std::string(source) + ": " + e.what());
    }
    return set;
}

void write_fiducials(std::ostream& out, const FiducialSet& fiducials) {
    nlohmann::ordered_json beats = nlohmann::ordered_json::array();
    for (const auto& b : fiducials.beats) {
        nlohmann::ordered_json beat;
        beat["baseline"] = b.baseline;
        beat["p"] = b.p ? nlohmann::ordered_json(wave_json(*b.p)) : nlohmann::ordered_json(nullptr);
        beat["qrs"] = wave_json(b.qrs);
        beat["t"] = wave_json(b.t);
        beats.push_back(std::move(beat));
    }
    nlohmann::ordered_json doc;
    doc["beats"] = std::move(beats);
    out << doc.dump(2) << '\n';
}

MedianBeat median_beat(const EcgRecord& record, const FiducialSet& fiducials, BeatWindow window,
                       Aggregation aggregation) {
    const auto length = record.length();
    fiducials.validate(length);

    const double fs = record.sampling_rate_hz;
    const auto pre = static_cast<long>(std::lround(window.pre_ms * fs / 1000.0));
    const auto post = static_cast<long>(std::lround(window.post_ms * fs / 1000.0));
    if (pre < 0 || post < 0) throw Error(ErrorKind::WindowOutOfRange, "negative window");
    const auto width = static_cast<std::size_t>(pre + post + 1);

    std::vector<long> starts;
    starts.reserve(fiducials.beats.size());
    for (std::size_t i = 0; i < fiducials.beats.size(); ++i) {
        const long peak = fiducials.beats[i].qrs.peak;
        if (peak - pre < 0 || peak + post >= static_cast<long>(length)) {
            throw Error(ErrorKind::WindowOutOfRange,
                        "beat " + std::to_string(i) + " window exceeds the record");
        }
        starts.push_back(peak - pre);
    }

    MedianBeat beat;
    beat.sampling_rate_hz = fs;
    std::vector<double> column(starts.size());
    for (std::size_t l = 0; l < kLeadCount; ++l) {
        auto& out = beat.leads[l];
        out.resize(width);
        for (std::size_t s = 0; s < width; ++s) {
            for (std::size_t b = 0; b < starts.size(); ++b) {
                column[b] = record.leads[l][static_cast<std::size_t>(starts[b]) + s];
            }
            if (aggregation == Aggregation::Median) {
                out[s] = median_of(column);
            } else {
                double sum = 0.0;
                for (double v : column) sum += v;
                out[s] = sum / static_cast<double>(column.size());
            }
        }
    }

    const auto relative = [&](auto landmark) {
        std::vector<double> offsets;
        offsets.reserve(starts.size());
        for (std::size_t b = 0; b < starts.size(); ++b) {
            offsets.push_back(static_cast<double>(landmark(fiducials.beats[b]) - starts[b]));
        }
        return median_landmark(std::move(offsets));
    };
    auto& f = beat.fiducials;
    f.baseline = relative([](const BeatAnnotation& b) { return b.baseline; });
    const bool all_p = std::all_of(fiducials.beats.begin(), fiducials.beats.end(),
                                   [](const BeatAnnotation& b) { return b.p.has_value(); });
    if (all_p) {
        f.p = Wave{relative([](const BeatAnnotation& b) { return b.p->onset; }),
                   relative([](const BeatAnnotation& b) { return b.p->peak; }),
                   relative([](const BeatAnnotation& b) { return b.p->offset; })};
    }
    f.qrs = Wave{relative([](const BeatAnnotation& b) { return b.qrs.onset; }),
                 relative([](const BeatAnnotation& b) { return b.qrs.peak; }),
                 relative([](const BeatAnnotation& b) { return b.qrs.offset; })};
    f.t = Wave{relative([](const BeatAnnotation& b) { return b.t.onset; }),
               relative([](const BeatAnnotation& b) { return b.t.peak; }),
               relative([](const BeatAnnotation& b) { return b.t.offset; })};

    const auto inside = [&](int idx) { return idx >= 0 && static_cast<std::size_t>(idx) < width; };
    const int first = f.p ? f.p->onset : f.qrs.onset;
    if (!inside(f.baseline) || !inside(first) || !inside(f.t.offset)) {
        throw Error(ErrorKind::WindowOutOfRange, "consolidated landmarks fall outside the beat window");
    }

    std::vector<double> rr;
    for (std::size_t b = 1; b < fiducials.beats.size(); ++b) {
        rr.push_back(static_cast<double>(fiducials.beats[b].qrs.peak - fiducials.beats[b - 1].qrs.peak));
    }
    beat.rr_ms = median_of(rr) * 1000.0 / fs;
    return beat;
}

double bazett_qtc(double qt_ms, double rr_ms) { return qt_ms / std::sqrt(rr_ms / 1000.0); }

StandardEcgMeasures standard_measures(const MedianBeat& beat) {
    const auto& f = beat.fiducials;
    if (f.qrs.offset < f.qrs.onset) throw Error(ErrorKind::MissingFiducial, "QRS onset/offset");
    if (f.t.offset < f.qrs.offset) throw Error(ErrorKind::MissingFiducial, "T offset");
    if (!(beat.rr_ms > 0.0)) throw Error(ErrorKind::MissingFiducial, "RR interval");
    const double ms = 1000.0 / beat.sampling_rate_hz;

    StandardEcgMeasures m;
    if (f.p) {
        m.p_dur_ms = (f.p->offset - f.p->onset) * ms;
        m.pr_ms = (f.qrs.onset - f.p->onset) * ms;
    }
    m.qrs_ms = (f.qrs.offset - f.qrs.onset) * ms;
    m.qt_ms = (f.t.offset - f.qrs.onset) * ms;
    m.rr_ms = beat.rr_ms;
    m.qtc_ms = bazett_qtc(m.qt_ms, m.rr_ms);
    return m;
}

}  // namespace geh::ecg
