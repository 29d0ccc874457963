#include "geh/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace geh::features {
namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;

void check_window(const vcg::Vcg& vcg, SampleWindow w) {
    if (w.onset < 0 || w.offset < w.onset || static_cast<std::size_t>(w.offset) >= vcg.length()) {
        throw Error(ErrorKind::EmptyWindow, "window [" + std::to_string(w.onset) + ", " +
                                                std::to_string(w.offset) + "] on " +
                                                std::to_string(vcg.length()) + " samples");
    }
}

double component(const SpatialVector& v, int axis) { return axis == 0 ? v.x : (axis == 1 ? v.y : v.z); }

double magnitude_at(const vcg::Vcg& vcg, std::size_t t) {
    return std::sqrt(vcg.x[t] * vcg.x[t] + vcg.y[t] * vcg.y[t] + vcg.z[t] * vcg.z[t]);
}

template <typename Fn>
auto guarded(std::string_view feature, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::ZeroVector) throw;
        throw Error(ErrorKind::ZeroVector, std::string(feature) + ": zero-length vector");
    }
}

}  // namespace

double SpatialVector::magnitude() const noexcept { return std::sqrt(x * x + y * y + z * z); }

std::array<double, kGehCount> GehMeasures::values() const noexcept {
    return {peak_qrst_angle_deg,    area_qrst_angle_deg,    peak_svg_azimuth_deg,
            area_svg_azimuth_deg,   peak_svg_elevation_deg, area_svg_elevation_deg,
            peak_svg_mv,            vm_qti_mvms,            svg_mvms};
}

SpatialVector peak_vector(const vcg::Vcg& vcg, SampleWindow window) {
    check_window(vcg, window);
    auto best = static_cast<std::size_t>(window.onset);
    double best_mag = magnitude_at(vcg, best);
    for (auto t = best + 1; t <= static_cast<std::size_t>(window.offset); ++t) {
        const double m = magnitude_at(vcg, t);
        if (m > best_mag) {
            best_mag = m;
            best = t;
        }
    }
    return {vcg.x[best], vcg.y[best], vcg.z[best], VectorKind::Peak};
}

SpatialVector area_vector(const vcg::Vcg& vcg, SampleWindow window) {
    check_window(vcg, window);
    const double dt = 1000.0 / vcg.sampling_rate_hz;
    const auto trapz = [&](const std::vector<double>& s) {
        double sum = 0.0;
        for (auto t = static_cast<std::size_t>(window.onset); t < static_cast<std::size_t>(window.offset); ++t) {
            sum += s[t] + s[t + 1];
        }
        return 0.5 * dt * sum;
    };
    return {trapz(vcg.x), trapz(vcg.y), trapz(vcg.z), VectorKind::Area};
}

double magnitude_integral(const vcg::Vcg& vcg, SampleWindow window) {
    check_window(vcg, window);
    const double dt = 1000.0 / vcg.sampling_rate_hz;
    double sum = 0.0;
    for (auto t = static_cast<std::size_t>(window.onset); t < static_cast<std::size_t>(window.offset); ++t) {
        sum += magnitude_at(vcg, t) + magnitude_at(vcg, t + 1);
    }
    return 0.5 * dt * sum;
}

double spatial_angle(const SpatialVector& u, const SpatialVector& v) {
    const double nu = u.magnitude();
    const double nv = v.magnitude();
    if (!(nu > 0.0) || !(nv > 0.0)) throw Error(ErrorKind::ZeroVector, "spatial angle of a zero vector");
    // atan2 of |u x v| and u . v keeps precision near 0 and 180 degrees
    const double cx = u.y * v.z - u.z * v.y;
    const double cy = u.z * v.x - u.x * v.z;
    const double cz = u.x * v.y - u.y * v.x;
    return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), u.x * v.x + u.y * v.y + u.z * v.z) * kDegPerRad;
}

Direction azimuth_elevation(const SpatialVector& v) {
    const double n = v.magnitude();
    if (!(n > 0.0)) throw Error(ErrorKind::ZeroVector, "direction of a zero vector");
    const double a = component(v, axes::kTransverseFrom);
    const double b = component(v, axes::kTransverseTo);
    const double h = component(v, axes::kVertical);

    Direction d;
    d.elevation_deg = std::acos(std::clamp(h / n, -1.0, 1.0)) * kDegPerRad;
    if (std::hypot(a, b) <= 1e-12 * n) {
        d.degenerate = true;
        d.azimuth_deg = 0.0;
    } else {
        d.azimuth_deg = std::atan2(b, a) * kDegPerRad;
        if (d.azimuth_deg <= -180.0) d.azimuth_deg = 180.0;
    }
    return d;
}

GehMeasures compute_geh(const vcg::Vcg& vcg) {
    const auto& f = vcg.fiducials;
    const auto inside = [&](int i) { return i >= 0 && static_cast<std::size_t>(i) < vcg.length(); };
    if (!inside(f.qrs.onset) || !inside(f.qrs.offset) || !inside(f.t.offset) || f.qrs.offset < f.qrs.onset ||
        f.t.offset < f.qrs.offset) {
        throw Error(ErrorKind::MissingFiducial, "QRS and T landmarks required for GEH");
    }
    const SampleWindow qrs{f.qrs.onset, f.qrs.offset};
    const SampleWindow twave{f.qrs.offset, f.t.offset};
    const SampleWindow qt{f.qrs.onset, f.t.offset};

    const auto peak_qrs = peak_vector(vcg, qrs);
    const auto peak_t = peak_vector(vcg, twave);
    const auto area_qrs = area_vector(vcg, qrs);
    const auto area_t = area_vector(vcg, twave);
    const auto area_svg = area_vector(vcg, qt);
    const auto peak_svg = peak_qrs + peak_t;

    GehMeasures g;
    g.peak_qrst_angle_deg = guarded("peak_qrst_angle", [&] { return spatial_angle(peak_qrs, peak_t); });
    g.area_qrst_angle_deg = guarded("area_qrst_angle", [&] { return spatial_angle(area_qrs, area_t); });
    const auto peak_dir = guarded("peak_svg_direction", [&] { return azimuth_elevation(peak_svg); });
    const auto area_dir = guarded("area_svg_direction", [&] { return azimuth_elevation(area_svg); });
    g.peak_svg_azimuth_deg = peak_dir.azimuth_deg;
    g.peak_svg_elevation_deg = peak_dir.elevation_deg;
    g.peak_azimuth_degenerate = peak_dir.degenerate;
    g.area_svg_azimuth_deg = area_dir.azimuth_deg;
    g.area_svg_elevation_deg = area_dir.elevation_deg;
    g.area_azimuth_degenerate = area_dir.degenerate;
    g.peak_svg_mv = peak_svg.magnitude();
    g.svg_mvms = area_svg.magnitude();
    g.vm_qti_mvms = magnitude_integral(vcg, qt);
    return g;
}

}  // namespace geh::features
