#pragma once

#include <array>
#include <cmath>
#include <optional>

namespace dld {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Dataset hull of the design triple.
namespace hull {
inline constexpr double f_min = 0.25;
inline constexpr double f_max = 0.75;
inline constexpr int n_min = 3;
inline constexpr int n_max = 10;
inline constexpr double re_min = 0.01;
inline constexpr double re_max = 25.0;
}  // namespace hull

/**
 * The design triple (f, N, Re) plus the optional physical gap G [µm].
 *
 * f = 2R / (2R + G) is the pillar fraction of the pitch, N the number of
 * rows per lateral period (row shift 1/N) and Re the gap Reynolds number.
 */
struct DldParams {
    double f = 0.5;
    int n = 5;
    double re = 1.0;
    std::optional<double> gap_um;

    double gap_fraction() const { return 1.0 - f; }

    /// Throws RangeError when any field leaves the hull.
    void validate() const;

    static DldParams make(double f, int n, double re, std::optional<double> gap_um = std::nullopt) {
        DldParams p{f, n, re, gap_um};
        p.validate();
        return p;
    }
};

/**
 * Normalised unit cell (pitch L = 1). Columns of pillars are tilted upward:
 * lattice vectors a1 = (1, 1/N), a2 = (0, 1). The reference pillar sits at
 * (0.5, 0.5 + 0.5/N), which the shear map sends to (0.5, 0.5).
 */
struct CellGeometry {
    double pillar_radius = 0.25;
    int n = 5;
    /// Reference pillar first, then its 8 nearest periodic images.
    std::array<Vec2, 9> pillar_centers{};
    Vec2 a1{1.0, 0.2};
    Vec2 a2{0.0, 1.0};

    double gap_fraction() const { return 1.0 - 2.0 * pillar_radius; }
    Vec2 center() const { return pillar_centers[0]; }

    /// Signed distance from a physical point (unit-cell lengths) to the nearest pillar surface.
    double signed_distance(Vec2 p) const;
    /// Distance plus the outward radial normal of the nearest pillar image.
    double signed_distance(Vec2 p, Vec2& normal) const;
    bool inside_pillar(Vec2 p) const { return signed_distance(p) < 0.0; }

    /// Reduce a physical point into the reference cell by lattice translations.
    Vec2 wrap(Vec2 p) const;
};

CellGeometry unit_cell(const DldParams& params);
/// Geometry without the Re / N hull checks; used by self-tests and synthetic cases.
CellGeometry unit_cell_unchecked(double f, int n);

/// Shear map from physical coordinates to the mapped unit square.
Vec2 map_to_unit(Vec2 p, int n, double length);
Vec2 map_from_unit(Vec2 q, int n, double length);

}  // namespace dld
