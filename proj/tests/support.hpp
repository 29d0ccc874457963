#pragma once

// Test-side oracles. Each one is written from the definition, without
// reusing the library's code paths.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <boost/rational.hpp>

#include "geh/features.hpp"
#include "geh/vcg.hpp"

namespace oracle {

using Vec3 = std::array<double, 3>;

inline double norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }

inline double angle_deg(const Vec3& a, const Vec3& b) {
    // atan2 form stays accurate near 0 and 180 degrees
    const Vec3 c{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
    return std::atan2(norm(c), dot(a, b)) * 180.0 / M_PI;
}

inline double azimuth_deg(const Vec3& v) { return std::atan2(v[2], v[0]) * 180.0 / M_PI; }
inline double elevation_deg(const Vec3& v) { return std::acos(std::clamp(v[1] / norm(v), -1.0, 1.0)) * 180.0 / M_PI; }

// ---- analytic beat: sum of Gaussian bumps in VCG space ----

struct Bump {
    double center_ms;
    double sigma_ms;
    Vec3 amplitude;  // mV
};

struct AnalyticBeat {
    std::vector<Bump> bumps;
    double fs = 1000.0;
    std::size_t length = 900;
    geh::ecg::ConsolidatedFiducials fiducials;

    Vec3 at(double t_ms) const {
        Vec3 v{0, 0, 0};
        for (const auto& b : bumps) {
            const double u = (t_ms - b.center_ms) / b.sigma_ms;
            const double e = std::exp(-0.5 * u * u);
            for (int k = 0; k < 3; ++k) v[k] += b.amplitude[k] * e;
        }
        return v;
    }

    double ms(int sample) const { return sample * 1000.0 / fs; }

    geh::vcg::Vcg sample() const {
        geh::vcg::Vcg out;
        out.sampling_rate_hz = fs;
        out.fiducials = fiducials;
        for (std::size_t i = 0; i < length; ++i) {
            const auto v = at(static_cast<double>(i) * 1000.0 / fs);
            out.x.push_back(v[0]);
            out.y.push_back(v[1]);
            out.z.push_back(v[2]);
        }
        return out;
    }

    /// Closed-form integral over [a, b] ms, mV*ms.
    Vec3 area(double a, double b) const {
        Vec3 s{0, 0, 0};
        for (const auto& bump : bumps) {
            const double k = bump.sigma_ms * std::sqrt(M_PI / 2.0);
            const double w = k * (boost::math::erf((b - bump.center_ms) / (bump.sigma_ms * M_SQRT2)) -
                                  boost::math::erf((a - bump.center_ms) / (bump.sigma_ms * M_SQRT2)));
            for (int i = 0; i < 3; ++i) s[i] += bump.amplitude[i] * w;
        }
        return s;
    }

    /// Composite Simpson on a dense grid.
    double magnitude_integral(double a, double b, int intervals = 20000) const {
        const double h = (b - a) / intervals;
        double s = norm(at(a)) + norm(at(b));
        for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * norm(at(a + i * h));
        return s * h / 3.0;
    }

    /// Maximum-magnitude vector on a dense grid refined by golden-section search.
    Vec3 peak(double a, double b) const {
        const int steps = 40000;
        double best_t = a;
        double best = -1.0;
        for (int i = 0; i <= steps; ++i) {
            const double t = a + (b - a) * i / steps;
            const double m = norm(at(t));
            if (m > best) {
                best = m;
                best_t = t;
            }
        }
        double lo = std::max(a, best_t - (b - a) / steps);
        double hi = std::min(b, best_t + (b - a) / steps);
        const double g = (std::sqrt(5.0) - 1.0) / 2.0;
        for (int it = 0; it < 80; ++it) {
            const double m1 = hi - g * (hi - lo);
            const double m2 = lo + g * (hi - lo);
            if (norm(at(m1)) < norm(at(m2))) lo = m1;
            else hi = m2;
        }
        return at(0.5 * (lo + hi));
    }
};

/// Nine measures in table order, from the continuous beat.
inline std::array<double, 9> geh_oracle(const AnalyticBeat& beat) {
    const auto& f = beat.fiducials;
    const double q0 = beat.ms(f.qrs.onset);
    const double q1 = beat.ms(f.qrs.offset);
    const double t1 = beat.ms(f.t.offset);
    const auto peak_qrs = beat.peak(q0, q1);
    const auto peak_t = beat.peak(q1, t1);
    const auto area_qrs = beat.area(q0, q1);
    const auto area_t = beat.area(q1, t1);
    const auto peak_svg = add(peak_qrs, peak_t);
    const auto area_svg = beat.area(q0, t1);
    return {angle_deg(peak_qrs, peak_t),   angle_deg(area_qrs, area_t), azimuth_deg(peak_svg),
            azimuth_deg(area_svg),         elevation_deg(peak_svg),     elevation_deg(area_svg),
            norm(peak_svg),                beat.magnitude_integral(q0, t1), norm(area_svg)};
}

inline Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Vec3 v{n(rng), n(rng), n(rng)};
    const double m = norm(v);
    return {v[0] / m, v[1] / m, v[2] / m};
}

/// Unit vector at `angle_deg` from `u`.
inline Vec3 at_angle(const Vec3& u, double angle_deg, std::mt19937_64& rng) {
    Vec3 w;
    do {
        const auto r = random_unit(rng);
        const double d = dot(r, u);
        w = {r[0] - d * u[0], r[1] - d * u[1], r[2] - d * u[2]};
    } while (norm(w) < 1e-3);
    const double m = norm(w);
    const double a = angle_deg * M_PI / 180.0;
    return {std::cos(a) * u[0] + std::sin(a) * w[0] / m, std::cos(a) * u[1] + std::sin(a) * w[1] / m,
            std::cos(a) * u[2] + std::sin(a) * w[2] / m};
}

/// QRS bump (plus a small late component), T bump at a chosen spatial angle;
/// every bump centre sits on a sample instant.
inline AnalyticBeat parameterized_beat(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    AnalyticBeat beat;
    beat.fs = 1000.0;
    beat.length = 900;
    const auto qrs_dir = random_unit(rng);
    const double qrs_sigma = std::round(8.0 + 6.0 * u(rng));
    const double t_sigma = std::round(35.0 + 25.0 * u(rng));
    const double qrst = 10.0 + 140.0 * u(rng);
    const auto t_dir = at_angle(qrs_dir, qrst, rng);
    const double qa = 0.8 + 1.2 * u(rng);
    const double ta = 0.2 + 0.4 * u(rng);
    const auto late_dir = random_unit(rng);
    const double la = 0.15 * qa * u(rng);
    beat.bumps = {{300.0, qrs_sigma, {qa * qrs_dir[0], qa * qrs_dir[1], qa * qrs_dir[2]}},
                  {300.0 + 2.0 * qrs_sigma, 0.7 * qrs_sigma, {la * late_dir[0], la * late_dir[1], la * late_dir[2]}},
                  {560.0, t_sigma, {ta * t_dir[0], ta * t_dir[1], ta * t_dir[2]}}};
    beat.fiducials.baseline = 150;
    beat.fiducials.qrs = {static_cast<int>(300 - 3 * qrs_sigma), 300, static_cast<int>(300 + 3.5 * qrs_sigma)};
    beat.fiducials.t = {static_cast<int>(560 - 3 * t_sigma), 560, static_cast<int>(560 + 3 * t_sigma)};
    beat.fiducials.t.onset = std::max(beat.fiducials.t.onset, beat.fiducials.qrs.offset);
    return beat;
}

// ---- sampled VCG helpers ----

inline geh::vcg::Vcg make_vcg(std::size_t n, double fs = 1000.0) {
    geh::vcg::Vcg v;
    v.sampling_rate_hz = fs;
    v.x.assign(n, 0.0);
    v.y.assign(n, 0.0);
    v.z.assign(n, 0.0);
    return v;
}

inline geh::vcg::Vcg random_vcg(std::mt19937_64& rng, std::size_t n = 120) {
    std::normal_distribution<double> d;
    auto v = make_vcg(n, 500.0);
    for (std::size_t t = 0; t < n; ++t) {
        v.x[t] = d(rng);
        v.y[t] = d(rng);
        v.z[t] = d(rng);
    }
    v.fiducials.qrs = {10, 20, 40};
    v.fiducials.t = {50, 70, 100};
    return v;
}

using Matrix = std::array<std::array<double, 3>, 3>;

inline Matrix random_rotation(std::mt19937_64& rng) {
    // Gram-Schmidt on two random directions; the cross product makes det = +1
    const auto a = random_unit(rng);
    auto b = random_unit(rng);
    const double d = dot(a, b);
    for (int i = 0; i < 3; ++i) b[i] -= d * a[i];
    const double nb = norm(b);
    for (auto& v : b) v /= nb;
    const Vec3 c{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
    return {a, b, c};
}

inline geh::vcg::Vcg rotate(const geh::vcg::Vcg& v, const Matrix& m) {
    auto out = v;
    for (std::size_t t = 0; t < v.length(); ++t) {
        const double p[3] = {v.x[t], v.y[t], v.z[t]};
        out.x[t] = m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2];
        out.y[t] = m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2];
        out.z[t] = m[2][0] * p[0] + m[2][1] * p[1] + m[2][2] * p[2];
    }
    return out;
}

inline bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(1.0, std::abs(b)); }

// ---- ranking metrics ----

/// Concordance by counting every positive/negative pair.
inline double auc_pairs(const std::vector<int>& labels, const std::vector<double>& scores) {
    double hits = 0.0;
    std::int64_t pairs = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) hits += 1.0;
            else if (scores[i] == scores[j]) hits += 0.5;
        }
    }
    return hits / static_cast<double>(pairs);
}

/// Average precision as an exact fraction: for each distinct score, the
/// recall gained there times the precision of everything scored at or above it.
inline boost::rational<std::int64_t> average_precision_exact(const std::vector<int>& labels,
                                                             const std::vector<double>& scores) {
    std::vector<double> cuts = scores;
    std::sort(cuts.begin(), cuts.end(), std::greater<>());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    const auto positives = std::count(labels.begin(), labels.end(), 1);
    boost::rational<std::int64_t> ap(0);
    std::int64_t prev_tp = 0;
    for (double c : cuts) {
        std::int64_t tp = 0;
        std::int64_t flagged = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= c) {
                ++flagged;
                tp += labels[i];
            }
        }
        ap += boost::rational<std::int64_t>(tp - prev_tp, positives) * boost::rational<std::int64_t>(tp, flagged);
        prev_tp = tp;
    }
    return ap;
}

// ---- Mann-Whitney exact p by enumerating every group assignment ----

inline double u_statistic(const std::vector<double>& a, const std::vector<double>& b) {
    double u = 0.0;
    for (double x : a) {
        for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
    }
    return u;
}

inline double mann_whitney_enumerated(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto n = pooled.size();
    const auto n1 = a.size();
    const double center = 0.5 * static_cast<double>(n1 * b.size());
    const double observed = std::abs(u_statistic(a, b) - center);
    std::int64_t total = 0;
    std::int64_t extreme = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != n1) continue;
        std::vector<double> g1;
        std::vector<double> g2;
        for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? g1 : g2).push_back(pooled[i]);
        ++total;
        if (std::abs(u_statistic(g1, g2) - center) >= observed - 1e-9) ++extreme;
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace oracle
