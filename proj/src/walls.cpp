#include "dld/walls.hpp"

#include <cmath>

#include "dld/errors.hpp"

namespace dld {

namespace {

struct Bilinear {
    int i0, i1, j0, j1;
    double w00, w10, w01, w11;
};

Bilinear bilinear(const WallField& wf, Vec2 physical) {
    const Vec2 q = map_to_unit(physical, wf.geometry.n, 1.0);
    const int n = wf.res;
    const double gx = q.x * n, gy = q.y * n;
    const double fx = std::floor(gx), fy = std::floor(gy);
    const double tx = gx - fx, ty = gy - fy;
    auto wrap = [n](double k) {
        long m = static_cast<long>(k) % n;
        return static_cast<int>(m < 0 ? m + n : m);
    };
    return {wrap(fx),
            wrap(fx + 1.0),
            wrap(fy),
            wrap(fy + 1.0),
            (1 - tx) * (1 - ty),
            tx * (1 - ty),
            (1 - tx) * ty,
            tx * ty};
}

double blend(const std::vector<double>& a, int n, const Bilinear& b) {
    auto at = [&](int i, int j) { return a[static_cast<std::size_t>(j) * n + i]; };
    return b.w00 * at(b.i0, b.j0) + b.w10 * at(b.i1, b.j0) + b.w01 * at(b.i0, b.j1) +
           b.w11 * at(b.i1, b.j1);
}

}  // namespace

WallField wall_distance_field(const CellGeometry& geom, int res) {
    if (res < 32) throw RangeError("wall field resolution must be >= 32");
    WallField wf;
    wf.res = res;
    wf.geometry = geom;
    const auto count = static_cast<std::size_t>(res) * res;
    wf.dist.resize(count);
    wf.normal_x.resize(count);
    wf.normal_y.resize(count);
    for (int j = 0; j < res; ++j) {
        for (int i = 0; i < res; ++i) {
            const Vec2 x = map_from_unit({static_cast<double>(i) / res, static_cast<double>(j) / res},
                                         geom.n, 1.0);
            Vec2 nrm;
            const std::size_t k = static_cast<std::size_t>(j) * res + i;
            wf.dist[k] = geom.signed_distance(x, nrm);
            wf.normal_x[k] = nrm.x;
            wf.normal_y[k] = nrm.y;
        }
    }
    return wf;
}

double WallField::grid_distance(Vec2 physical) const {
    return blend(dist, res, bilinear(*this, physical));
}

NormalTangent wall_normal_tangent(const WallField& wf, Vec2 physical) {
    const Bilinear b = bilinear(wf, physical);
    const Vec2 raw{blend(wf.normal_x, wf.res, b), blend(wf.normal_y, wf.res, b)};
    const double len = norm(raw);
    if (len < 1e-6) throw DegenerateNormalError("wall normal undefined near the medial axis");
    const Vec2 n = raw * (1.0 / len);
    return {n, {-n.y, n.x}};
}

}  // namespace dld
