#include "geh/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

#include "geh/random.hpp"
#include "geh/vcg.hpp"

namespace geh::synth {
namespace {

struct V3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    V3 operator+(const V3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    V3 operator-(const V3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    V3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const V3& o) const { return x * o.x + y * o.y + z * o.z; }
    V3 cross(const V3& o) const { return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x}; }
    V3 unit() const { return *this * (1.0 / std::sqrt(dot(*this))); }
};

constexpr double kRad = std::numbers::pi / 180.0;

/// Unit vector with azimuth from +x toward +z and elevation from +y.
V3 direction(double azimuth_deg, double elevation_deg) {
    const double az = azimuth_deg * kRad;
    const double el = elevation_deg * kRad;
    return {std::sin(el) * std::cos(az), std::cos(el), std::sin(el) * std::sin(az)};
}

struct RiskRates {
    double negative;
    double positive;
};

// Reference group rates: sex F, previous CS, MI, PCI, stroke, hypertension, diabetes.
constexpr std::array<RiskRates, 7> kRiskRates = {{{0.547, 0.412},
                                                  {0.085, 0.235},
                                                  {0.229, 0.510},
                                                  {0.090, 0.392},
                                                  {0.058, 0.098},
                                                  {0.677, 0.745},
                                                  {0.229, 0.490}}};

double lerp(double a, double b, double w) { return a + w * (b - a); }

double gauss(double t, double center, double sigma) {
    const double u = (t - center) / sigma;
    return std::exp(-0.5 * u * u);
}

struct BeatShape {
    V3 qrs_main;  // amplitude-weighted directions
    V3 qrs_late;
    V3 t_wave;
    V3 p_wave;
    double qrs_sigma;
    double late_center;
    double late_sigma;
    double t_center;
    double t_sigma;
    double p_center;
    double p_sigma;

    V3 at(double tau_ms) const {
        V3 v = qrs_main * gauss(tau_ms, 0.0, qrs_sigma) + qrs_late * gauss(tau_ms, late_center, late_sigma) +
               t_wave * gauss(tau_ms, t_center, t_sigma);
        return v + p_wave * gauss(tau_ms, p_center, p_sigma);
    }
};

int to_sample(double ms, double fs) { return static_cast<int>(std::lround(ms * fs / 1000.0)); }

}  // namespace

void SynthConfig::validate() const {
    if (n_patients < 10) throw Error(ErrorKind::InvalidConfig, "n_patients must be >= 10");
    if (!(positive_fraction > 0.0 && positive_fraction < 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "positive_fraction must be in (0, 1)");
    }
    if (!(noise_sd_mv >= 0.0)) throw Error(ErrorKind::InvalidConfig, "noise_sd_mv must be >= 0");
    if (!(amplitude_sd >= 0.0)) throw Error(ErrorKind::InvalidConfig, "amplitude_sd must be >= 0");
    if (!(svg_scale > 0.0)) throw Error(ErrorKind::InvalidConfig, "svg_scale must be > 0");
    if (sampling_rate_hz < 100.0) throw Error(ErrorKind::InvalidConfig, "sampling_rate_hz must be >= 100");
    if (duration_s < 4.0) throw Error(ErrorKind::InvalidConfig, "duration_s must be >= 4 to hold three beats");
    if (zero_t_patients > n_patients) throw Error(ErrorKind::InvalidConfig, "zero_t_patients exceeds n_patients");
    if (!(gain_uv_per_unit > 0.0)) throw Error(ErrorKind::InvalidConfig, "gain_uv_per_unit must be > 0");
}

SynthesisMatrix synthesis_matrix() {
    const auto& k = vcg::kKorsMatrix;
    // m = K K^T (3x3, symmetric)
    std::array<std::array<double, 3>, 3> m{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            for (int c = 0; c < 8; ++c) m[i][j] += k[i][c] * k[j][c];
        }
    }
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    std::array<std::array<double, 3>, 3> inv{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
            inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    SynthesisMatrix s{};
    for (int c = 0; c < 8; ++c) {
        for (int j = 0; j < 3; ++j) {
            for (int i = 0; i < 3; ++i) s[c][j] += k[i][c] * inv[i][j];
        }
    }
    return s;
}

std::size_t positive_count(const SynthConfig& config) {
    return static_cast<std::size_t>(
        std::floor(static_cast<double>(config.n_patients) * config.positive_fraction + 0.5));
}

std::vector<SynthPatient> generate(const SynthConfig& config) {
    config.validate();
    const double fs = config.sampling_rate_hz;
    const auto length = static_cast<std::size_t>(std::llround(config.duration_s * fs));
    const double ms_per_sample = 1000.0 / fs;
    const auto synthesis = synthesis_matrix();

    std::vector<std::size_t> order(config.n_patients);
    std::iota(order.begin(), order.end(), 0);
    Rng assign(derive_seed(config.seed, seed_purpose::kSynth, 0));
    std::shuffle(order.begin(), order.end(), assign);
    std::vector<bool> positive(config.n_patients, false);
    const auto n_pos = positive_count(config);
    for (std::size_t i = 0; i < n_pos; ++i) positive[order[i]] = true;
    std::shuffle(order.begin(), order.end(), assign);
    std::vector<bool> zero_t(config.n_patients, false);
    for (std::size_t i = 0; i < config.zero_t_patients; ++i) zero_t[order[i]] = true;

    std::vector<SynthPatient> patients;
    patients.reserve(config.n_patients);
    for (std::size_t idx = 0; idx < config.n_patients; ++idx) {
        Rng rng(derive_seed(config.seed, seed_purpose::kSynth, idx + 1));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        const bool pos = positive[idx];
        const double w = pos ? config.risk_effect : 0.0;

        SynthPatient p;
        auto& r = p.record;
        char id[16];
        std::snprintf(id, sizeof(id), "P%04zu", idx + 1);
        r.id = id;
        r.outcome = pos ? cohort::Outcome::Positive : cohort::Outcome::Negative;
        const auto bernoulli = [&](std::size_t k) {
            return uniform(rng) < lerp(kRiskRates[k].negative, kRiskRates[k].positive, w);
        };
        r.sex = bernoulli(0) ? cohort::Sex::F : cohort::Sex::M;
        r.age_years = std::clamp(std::round(lerp(57.0, 62.0, w) + 12.0 * normal(rng)), 25.0, 95.0);
        r.bmi_kg_m2 = std::clamp(std::round((lerp(26.8, 27.6, w) + 4.5 * normal(rng)) * 10.0) / 10.0, 16.0, 50.0);
        r.prev_cardiac_surgery = bernoulli(1);
        r.prev_mi = bernoulli(2);
        r.prev_pci = bernoulli(3);
        r.prev_stroke = bernoulli(4);
        r.hypertension = bernoulli(5);
        r.diabetes = bernoulli(6);

        // VCG geometry
        const double scale = (pos ? config.svg_scale : 1.0) * std::exp(config.amplitude_sd * normal(rng));
        const double angle = std::clamp(config.base_qrst_angle_deg + config.qrst_angle_sd_deg * normal(rng) +
                                            (pos ? config.qrst_angle_shift_deg : 0.0),
                                        2.0, 175.0);
        const V3 d_qrs = direction(-15.0 + 20.0 * normal(rng), 60.0 + 12.0 * normal(rng));
        const V3 anchor = std::abs(d_qrs.y) > 0.9 ? V3{1.0, 0.0, 0.0} : V3{0.0, 1.0, 0.0};
        const V3 e1 = (anchor - d_qrs * anchor.dot(d_qrs)).unit();
        const V3 e2 = d_qrs.cross(e1);
        const double psi = 0.8 * normal(rng);
        const V3 perp = e1 * std::cos(psi) + e2 * std::sin(psi);
        const V3 d_t = d_qrs * std::cos(angle * kRad) + perp * std::sin(angle * kRad);
        const V3 d_late = (d_qrs * std::cos(70.0 * kRad) - e1 * std::sin(70.0 * kRad)).unit();

        BeatShape shape{};
        const double a_qrs = config.qrs_amplitude_mv * std::exp(0.2 * normal(rng)) * scale;
        const double a_t = zero_t[idx] ? 0.0 : config.t_amplitude_mv * std::exp(0.25 * normal(rng)) * scale;
        shape.qrs_main = d_qrs * a_qrs;
        shape.qrs_late = d_late * (0.3 * a_qrs);
        shape.t_wave = d_t * a_t;
        shape.p_wave = V3{0.5, 0.8, 0.1}.unit() * config.p_amplitude_mv;
        shape.qrs_sigma = config.qrs_sigma_ms * std::exp(0.1 * normal(rng));
        shape.late_center = 1.5 * shape.qrs_sigma;
        shape.late_sigma = 0.8 * shape.qrs_sigma;
        shape.t_center = 250.0 + 20.0 * normal(rng);
        shape.t_sigma = config.t_sigma_ms * std::exp(0.1 * normal(rng));
        shape.p_center = -160.0 + 15.0 * normal(rng);
        shape.p_sigma = config.p_sigma_ms;
        p.truth = {angle, scale, static_cast<bool>(zero_t[idx])};

        // beat times
        const double rr = std::clamp(920.0 + 120.0 * normal(rng), 780.0, 1300.0);
        std::vector<double> peaks;
        for (double t = 400.0 + 50.0 * uniform(rng); t + 500.0 + 2.0 * ms_per_sample < config.duration_s * 1000.0;
             t += std::max(760.0, rr + 15.0 * normal(rng))) {
            peaks.push_back(t);
        }

        std::vector<V3> heart(length);
        for (double peak : peaks) {
            const double jitter = 1.0 + 0.02 * normal(rng);
            const auto first = static_cast<std::size_t>(std::max(0.0, (peak - 700.0) / ms_per_sample));
            const auto last = std::min(length, static_cast<std::size_t>((peak + 700.0) / ms_per_sample) + 1);
            for (auto i = first; i < last; ++i) {
                heart[i] = heart[i] + shape.at(static_cast<double>(i) * ms_per_sample - peak) * jitter;
            }
            ecg::BeatAnnotation b;
            b.baseline = to_sample(peak - 250.0, fs);
            b.p = ecg::Wave{to_sample(peak + shape.p_center - 2.5 * shape.p_sigma, fs),
                            to_sample(peak + shape.p_center, fs),
                            to_sample(peak + shape.p_center + 2.5 * shape.p_sigma, fs)};
            b.qrs = ecg::Wave{to_sample(peak - 2.5 * shape.qrs_sigma, fs), to_sample(peak, fs),
                              to_sample(peak + shape.late_center + 2.5 * shape.late_sigma, fs)};
            b.t = ecg::Wave{to_sample(peak + shape.t_center - 2.5 * shape.t_sigma, fs),
                            to_sample(peak + shape.t_center, fs),
                            to_sample(peak + shape.t_center + 2.5 * shape.t_sigma, fs)};
            p.fiducials.beats.push_back(b);
        }

        auto& leads = p.ecg.leads;
        for (auto& l : leads) l.assign(length, 0.0);
        std::array<double, 8> offsets{};
        for (auto& o : offsets) o = 0.2 * uniform(rng) - 0.1;
        for (std::size_t i = 0; i < length; ++i) {
            const V3& v = heart[i];
            for (std::size_t c = 0; c < 8; ++c) {
                const double value = synthesis[c][0] * v.x + synthesis[c][1] * v.y + synthesis[c][2] * v.z +
                                     offsets[c] + config.noise_sd_mv * normal(rng);
                leads[ecg::index(vcg::kKorsInputs[c])][i] = value;
            }
            const double lead_i = leads[ecg::index(ecg::Lead::I)][i];
            const double lead_ii = leads[ecg::index(ecg::Lead::II)][i];
            leads[ecg::index(ecg::Lead::III)][i] = lead_ii - lead_i;
            leads[ecg::index(ecg::Lead::aVR)][i] = -(lead_i + lead_ii) / 2.0;
            leads[ecg::index(ecg::Lead::aVL)][i] = lead_i - lead_ii / 2.0;
            leads[ecg::index(ecg::Lead::aVF)][i] = lead_ii - lead_i / 2.0;
        }
        p.ecg.sampling_rate_hz = fs;
        p.ecg.duration_s = static_cast<double>(length) / fs;
        patients.push_back(std::move(p));
    }
    return patients;
}

void write_cohort_files(const std::vector<SynthPatient>& patients, const SynthConfig& config,
                        const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir / "ecg");
    fs::create_directories(out_dir / "fiducials");
    cohort::Cohort covariates;
    std::ofstream truth(out_dir / "truth.csv");
    truth << "id,outcome,qrst_angle_deg,amplitude_scale,zero_t\n";
    for (const auto& p : patients) {
        std::ofstream ecg_file(out_dir / "ecg" / (p.record.id + ".csv"));
        ecg::write_ecg(ecg_file, p.ecg, config.gain_uv_per_unit);
        std::ofstream fid_file(out_dir / "fiducials" / (p.record.id + ".json"));
        ecg::write_fiducials(fid_file, p.fiducials);
        covariates.push_back(p.record);
        truth << p.record.id << ',' << (*p.record.outcome == cohort::Outcome::Positive ? "positive" : "negative")
              << ',' << p.truth.qrst_angle_deg << ',' << p.truth.amplitude_scale << ',' << int(p.truth.zero_t)
              << '\n';
    }
    std::ofstream table(out_dir / "cohort.csv");
    cohort::write_cohort(table, covariates);
    std::ofstream cfg(out_dir / "run.cfg");
    cfg << "# generated by synth; paths are relative to this file\n"
        << "ecg_dir=ecg\nfiducial_dir=fiducials\ncohort_table=cohort.csv\noutput_dir=results\n"
        << "master_seed=" << config.seed << "\n";
}

}  // namespace geh::synth
