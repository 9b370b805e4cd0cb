#include "dld/geometry.hpp"

#include <limits>
#include <sstream>

#include "dld/errors.hpp"

namespace dld {

void DldParams::validate() const {
    std::ostringstream msg;
    if (!(f >= hull::f_min && f <= hull::f_max)) {
        msg << "f=" << f << " outside [" << hull::f_min << ", " << hull::f_max << "]";
    } else if (n < hull::n_min || n > hull::n_max) {
        msg << "N=" << n << " outside {" << hull::n_min << ".." << hull::n_max << "}";
    } else if (!(re >= hull::re_min && re <= hull::re_max)) {
        msg << "Re=" << re << " outside [" << hull::re_min << ", " << hull::re_max << "]";
    } else if (gap_um && !(*gap_um > 0.0)) {
        msg << "G=" << *gap_um << " must be positive";
    } else {
        return;
    }
    throw RangeError(msg.str());
}

CellGeometry unit_cell_unchecked(double f, int n) {
    if (!(f > 0.0 && f < 1.0)) throw RangeError("pillar fraction must lie in (0, 1)");
    if (n < 1) throw RangeError("period number must be >= 1");
    CellGeometry g;
    g.pillar_radius = 0.5 * f;
    g.n = n;
    g.a1 = {1.0, 1.0 / n};
    g.a2 = {0.0, 1.0};
    const Vec2 c{0.5, 0.5 + 0.5 / n};
    g.pillar_centers[0] = c;
    int k = 1;
    for (int i = -1; i <= 1; ++i) {
        for (int j = -1; j <= 1; ++j) {
            if (i == 0 && j == 0) continue;
            g.pillar_centers[k++] = c + g.a1 * i + g.a2 * j;
        }
    }
    return g;
}

CellGeometry unit_cell(const DldParams& params) {
    params.validate();
    return unit_cell_unchecked(params.f, params.n);
}

Vec2 CellGeometry::wrap(Vec2 p) const {
    Vec2 q = map_to_unit(p, n, 1.0);
    q.x -= std::floor(q.x);
    q.y -= std::floor(q.y);
    return map_from_unit(q, n, 1.0);
}

double CellGeometry::signed_distance(Vec2 p, Vec2& normal) const {
    const Vec2 w = wrap(p);
    double best = std::numeric_limits<double>::infinity();
    for (const Vec2& c : pillar_centers) {
        const Vec2 d = w - c;
        const double r = norm(d);
        if (r < best) {
            best = r;
            normal = r > 0.0 ? d * (1.0 / r) : Vec2{1.0, 0.0};
        }
    }
    return best - pillar_radius;
}

double CellGeometry::signed_distance(Vec2 p) const {
    Vec2 unused;
    return signed_distance(p, unused);
}

Vec2 map_to_unit(Vec2 p, int n, double length) {
    if (!(length > 0.0)) throw DomainError("length scale must be positive");
    if (n < 1) throw DomainError("period number must be >= 1");
    const double x = p.x / length;
    const double y = p.y / length;
    return {x, y - x / n};
}

Vec2 map_from_unit(Vec2 q, int n, double length) {
    if (!(length > 0.0)) throw DomainError("length scale must be positive");
    if (n < 1) throw DomainError("period number must be >= 1");
    return {q.x * length, (q.y + q.x / n) * length};
}

}  // namespace dld
