#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "geh/ecg.hpp"

namespace geh::vcg {

/// Independent-lead inputs of the Kors regression, in column order.
inline constexpr std::array<ecg::Lead, 8> kKorsInputs = {
    ecg::Lead::I,  ecg::Lead::II, ecg::Lead::V1, ecg::Lead::V2,
    ecg::Lead::V3, ecg::Lead::V4, ecg::Lead::V5, ecg::Lead::V6};

using KorsMatrix = std::array<std::array<double, 8>, 3>;

/// Kors et al. (Eur Heart J 1990) regression matrix, rows X, Y, Z; columns
/// I, II, V1..V6. Transcription source and checksum are in docs/kors.md.
inline constexpr KorsMatrix kKorsMatrix = {{
    {0.38, -0.07, -0.13, 0.05, -0.01, 0.14, 0.06, 0.54},
    {-0.07, 0.93, 0.06, -0.02, -0.05, 0.06, -0.17, 0.13},
    {0.11, -0.23, -0.43, -0.06, -0.14, -0.20, -0.11, 0.31},
}};

struct Vcg {
    std::vector<double> x, y, z;  // mV
    double sampling_rate_hz = 240.0;
    ecg::ConsolidatedFiducials fiducials;

    std::size_t length() const noexcept { return x.size(); }
};

/// Subtracts each lead's amplitude at the consolidated baseline sample.
ecg::MedianBeat baseline_correct(const ecg::MedianBeat& beat);

/// Applies kKorsMatrix sample by sample; III, aVR, aVL and aVF are ignored.
Vcg kors_transform(const ecg::MedianBeat& beat);

/// Three-column x,y,z table (mV per sample) for plotting.
void write_vcg_table(std::ostream& out, const Vcg& vcg);

}  // namespace geh::vcg
