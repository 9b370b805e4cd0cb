#pragma once

#include <vector>

#include "dld/geometry.hpp"

namespace dld {

/**
 * Wall distance function of one cell, sampled on the shear-mapped grid used
 * by FlowField (node (i, j) at mapped (i/res, j/res), index j * res + i).
 * Distances are signed: negative inside a pillar. Normals point out of the
 * nearest pillar image.
 */
struct WallField {
    int res = 0;
    std::vector<double> dist;
    std::vector<double> normal_x;
    std::vector<double> normal_y;
    CellGeometry geometry;

    /// Exact signed distance at a physical point (circle geometry).
    double distance(Vec2 physical) const { return geometry.signed_distance(physical); }
    /// Bilinear interpolation of the stored distance grid.
    double grid_distance(Vec2 physical) const;
};

WallField wall_distance_field(const CellGeometry& geom, int res);

struct NormalTangent {
    Vec2 normal;
    Vec2 tangent;
};

/// Interpolated, renormalised wall normal at a physical point; tangent is the
/// normal rotated by +90 degrees. Throws DegenerateNormalError on the medial axis.
NormalTangent wall_normal_tangent(const WallField& wf, Vec2 physical);

}  // namespace dld
