#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "geh/cohort.hpp"
#include "geh/ecg.hpp"

namespace geh::synth {

/// Generator for desk-scale cohorts: Gaussian-bump beats built in VCG space
/// and projected onto the 12 leads through the pseudo-inverse of the Kors matrix.
struct SynthConfig {
    std::size_t n_patients = 300;
    double positive_fraction = 0.186;
    std::uint64_t seed = 1;

    // class effects (applied to positives)
    double qrst_angle_shift_deg = 30.0;
    double svg_scale = 0.75;
    double risk_effect = 1.0;  // 0 = positives share negative risk profile, 1 = full reference gap

    // wave shape
    double base_qrst_angle_deg = 40.0;
    double qrst_angle_sd_deg = 35.0;
    double amplitude_sd = 0.45;  // log-scale SD of a per-patient gain shared by QRS and T
    double qrs_amplitude_mv = 1.4;
    double qrs_sigma_ms = 11.0;
    double t_amplitude_mv = 0.35;
    double t_sigma_ms = 45.0;
    double p_amplitude_mv = 0.12;
    double p_sigma_ms = 20.0;
    double noise_sd_mv = 0.01;

    double sampling_rate_hz = 240.0;
    double duration_s = 7.0;
    double gain_uv_per_unit = 1.0;
    std::size_t zero_t_patients = 0;  // failure injection: flat T wave

    void validate() const;
};

struct PatientTruth {
    double qrst_angle_deg = 0.0;  // angle between dominant QRS and T directions
    double amplitude_scale = 1.0;
    bool zero_t = false;
};

struct SynthPatient {
    cohort::PatientRecord record;  // covariates and outcome, features empty
    ecg::EcgRecord ecg;
    ecg::FiducialSet fiducials;
    PatientTruth truth;
};

/// 8x3 map from (x, y, z) to (I, II, V1..V6); Kors * synthesis = identity.
using SynthesisMatrix = std::array<std::array<double, 3>, 8>;
SynthesisMatrix synthesis_matrix();

/// Class counts: round-half-up(n * positive_fraction) positives.
std::size_t positive_count(const SynthConfig& config);

std::vector<SynthPatient> generate(const SynthConfig& config);

/// Writes ecg/<id>.csv, fiducials/<id>.json, cohort.csv, truth.csv and run.cfg.
void write_cohort_files(const std::vector<SynthPatient>& patients, const SynthConfig& config,
                        const std::filesystem::path& out_dir);

}  // namespace geh::synth
