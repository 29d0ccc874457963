#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "geh/vcg.hpp"

namespace geh::features {

enum class VectorKind { Peak, Area };

struct SpatialVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    VectorKind kind = VectorKind::Peak;

    double magnitude() const noexcept;
    SpatialVector operator+(const SpatialVector& o) const noexcept { return {x + o.x, y + o.y, z + o.z, kind}; }
};

/// Inclusive sample range [onset, offset].
struct SampleWindow {
    int onset = 0;
    int offset = 0;
};

/// Axis convention for direction angles: x left, y inferior, z posterior.
/// Azimuth lives in the transverse plane spanned by the two transverse axes,
/// measured from the first toward the second; elevation is measured from the
/// vertical axis. Flip the convention here only.
namespace axes {
inline constexpr int kTransverseFrom = 0;  // x
inline constexpr int kTransverseTo = 2;    // z
inline constexpr int kVertical = 1;        // y
}  // namespace axes

struct Direction {
    double azimuth_deg = 0.0;    // (-180, 180]
    double elevation_deg = 0.0;  // [0, 180]
    bool degenerate = false;     // on the vertical pole; azimuth reported as 0
};

inline constexpr std::size_t kGehCount = 9;

/// Table order of the nine GEH measures.
inline constexpr std::array<std::string_view, kGehCount> kGehNames = {
    "peak_qrst_angle_deg",    "area_qrst_angle_deg",    "peak_svg_azimuth_deg",
    "area_svg_azimuth_deg",   "peak_svg_elevation_deg", "area_svg_elevation_deg",
    "peak_svg_mv",            "vm_qti_mvms",            "svg_mvms"};

struct GehMeasures {
    double peak_qrst_angle_deg = 0.0;
    double area_qrst_angle_deg = 0.0;
    double peak_svg_azimuth_deg = 0.0;
    double area_svg_azimuth_deg = 0.0;
    double peak_svg_elevation_deg = 0.0;
    double area_svg_elevation_deg = 0.0;
    double peak_svg_mv = 0.0;
    double vm_qti_mvms = 0.0;
    double svg_mvms = 0.0;
    bool peak_azimuth_degenerate = false;
    bool area_azimuth_degenerate = false;

    /// Values in kGehNames order.
    std::array<double, kGehCount> values() const noexcept;
};

SpatialVector peak_vector(const vcg::Vcg& vcg, SampleWindow window);
SpatialVector area_vector(const vcg::Vcg& vcg, SampleWindow window);
double spatial_angle(const SpatialVector& u, const SpatialVector& v);
Direction azimuth_elevation(const SpatialVector& v);

/// Trapezoidal integral of the instantaneous vector magnitude, mV*ms.
double magnitude_integral(const vcg::Vcg& vcg, SampleWindow window);

GehMeasures compute_geh(const vcg::Vcg& vcg);

}  // namespace geh::features
