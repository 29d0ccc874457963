#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "geh/error.hpp"

namespace geh::ecg {

inline constexpr std::size_t kLeadCount = 12;

enum class Lead : std::size_t { I, II, III, aVR, aVL, aVF, V1, V2, V3, V4, V5, V6 };

/// Fixed file/column order of the 12 standard leads.
inline constexpr std::array<std::string_view, kLeadCount> kLeadNames = {
    "I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6"};

constexpr std::size_t index(Lead lead) noexcept { return static_cast<std::size_t>(lead); }

using LeadSet = std::array<std::vector<double>, kLeadCount>;

struct EcgRecord {
    LeadSet leads;  // mV
    double sampling_rate_hz = 240.0;
    double duration_s = 0.0;

    std::size_t length() const noexcept { return leads[0].size(); }
    const std::vector<double>& lead(Lead l) const noexcept { return leads[index(l)]; }

    /// Throws LengthMismatch / NonFiniteSample / BadHeader on a broken invariant.
    void validate() const;
};

struct Wave {
    int onset = 0;
    int peak = 0;
    int offset = 0;

    friend bool operator==(const Wave&, const Wave&) = default;
};

/// Landmarks of one annotated cardiac cycle, in record sample indices.
struct BeatAnnotation {
    int baseline = 0;
    std::optional<Wave> p;
    Wave qrs;
    Wave t;

    friend bool operator==(const BeatAnnotation&, const BeatAnnotation&) = default;
};

struct FiducialSet {
    std::vector<BeatAnnotation> beats;

    /// Ordering within and across beats, index range, and the >= 3 beat minimum.
    void validate(std::size_t record_length) const;
};

/// Same landmark layout as a beat annotation, relative to a median-beat window.
using ConsolidatedFiducials = BeatAnnotation;

struct MedianBeat {
    LeadSet leads;  // mV, one aligned beat per lead
    ConsolidatedFiducials fiducials;
    double rr_ms = 0.0;
    double sampling_rate_hz = 240.0;

    std::size_t length() const noexcept { return leads[0].size(); }
};

enum class Aggregation { Median, Mean };

struct BeatWindow {
    double pre_ms = 300.0;
    double post_ms = 500.0;
};

struct StandardEcgMeasures {
    std::optional<double> p_dur_ms;
    std::optional<double> pr_ms;
    double qrs_ms = 0.0;
    double qt_ms = 0.0;
    double qtc_ms = 0.0;
    double rr_ms = 0.0;
};

EcgRecord parse_ecg(const std::filesystem::path& path);
EcgRecord parse_ecg(std::istream& in, std::string_view source = "<stream>");
void write_ecg(std::ostream& out, const EcgRecord& record, double gain_uv_per_unit);

FiducialSet parse_fiducials(const std::filesystem::path& path);
FiducialSet parse_fiducials(std::istream& in, std::string_view source = "<stream>");
void write_fiducials(std::ostream& out, const FiducialSet& fiducials);

MedianBeat median_beat(const EcgRecord& record, const FiducialSet& fiducials,
                       BeatWindow window = {}, Aggregation aggregation = Aggregation::Median);

/// Heart-rate correction of QT (Bazett): qt / sqrt(rr in seconds).
double bazett_qtc(double qt_ms, double rr_ms);

StandardEcgMeasures standard_measures(const MedianBeat& beat);

}  // namespace geh::ecg
