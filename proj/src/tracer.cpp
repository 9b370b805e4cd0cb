#include "dld/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dld/errors.hpp"

namespace dld {

namespace {
constexpr double kUnitTol = 1e-9;
constexpr double kReleaseClearance = 1e-3;
}  // namespace

int mode_sign(Mode m) { return m == Mode::Bumped ? 1 : -1; }

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::Bumped: return "bumped";
        case Mode::Zigzag: return "zigzag";
        default: return "undetermined";
    }
}

Vec2 reflect(Vec2 v, Vec2 n, Vec2 t) {
    if (std::abs(norm(n) - 1.0) > kUnitTol || std::abs(norm(t) - 1.0) > kUnitTol ||
        std::abs(dot(n, t)) > kUnitTol) {
        throw ContractError("reflect requires an orthonormal (n, t) pair");
    }
    const double vn = dot(n, v);
    const double vt = dot(t, v);
    return n * (-vn) + t * vt;
}

Vec2 step_rk4(const FlowField& field, Vec2 p, double dt) {
    return step_rk4([&field](Vec2 x) { return field.velocity_at(x); }, p, dt);
}

Trajectory trace(const FlowField& field, const WallField& wf, Vec2 start, double diameter,
                 int n_periods, const TraceOptions& opts) {
    const CellGeometry& geom = wf.geometry;
    const double g = geom.gap_fraction();
    if (n_periods < 1) throw RangeError("trace needs at least one period");
    if (!(diameter > 0.0)) throw RangeError("particle diameter must be positive");
    const double radius = 0.5 * diameter;
    if (diameter >= g) {
        std::ostringstream msg;
        msg << "particle diameter " << diameter << " does not fit the gap " << g;
        throw PlacementError(msg.str());
    }
    if (wf.distance(start) < radius + opts.start_clearance) {
        std::ostringstream msg;
        msg << "start point (" << start.x << ", " << start.y << ") lacks clearance for radius " << radius;
        throw PlacementError(msg.str());
    }
    const double vmax = field.max_speed();
    if (!(vmax > 0.0)) throw DomainError("cannot trace in a zero velocity field");
    const double dt = opts.dt > 0.0 ? opts.dt : 0.1 / (field.res() * vmax);
    const int n = geom.n;
    const double x_end = start.x + static_cast<double>(n_periods) * n;

    Trajectory traj;
    traj.particle_diameter = diameter;
    traj.period_number = n;
    traj.points.push_back({0.0, start.x, start.y});
    Vec2 p = start;
    double t = 0.0;
    for (long step = 0; step < opts.step_cap; ++step) {
        Vec2 next = step_rk4(field, p, dt);
        double d = wf.distance(next);
        bool contact = false;
        if (d < radius) {
            contact = true;
            const NormalTangent nt = wall_normal_tangent(wf, next);
            const Vec2 vel = (next - p) * (1.0 / dt);
            if (dot(vel, nt.normal) < 0.0) {
                next = p + reflect(vel, nt.normal, nt.tangent) * dt;
                d = wf.distance(next);
            }
            for (int it = 0; it < 4 && d < radius; ++it) {
                const NormalTangent push = wall_normal_tangent(wf, next);
                next += push.normal * (radius - d);
                d = wf.distance(next);
            }
        }
        p = next;
        t += dt;
        traj.points.push_back({t, p.x, p.y});
        if (contact) traj.contacts.push_back(traj.points.size() - 1);
        if (p.x >= x_end) {
            traj.mode = classify_mode(traj, n);
            return traj;
        }
    }
    std::ostringstream msg;
    msg << "trace exceeded " << opts.step_cap << " steps (particle trapped at x=" << p.x << ")";
    throw StallError(msg.str(), diameter);
}

Mode classify_mode(const Trajectory& traj, int n) {
    if (traj.points.size() < 2) throw SpanError("trajectory too short to classify");
    const TracePoint& a = traj.points.front();
    const TracePoint& b = traj.points.back();
    const double columns = b.x - a.x;
    if (columns < n - 1e-9) {
        std::ostringstream msg;
        msg << "trajectory spans " << columns << " columns, need " << n;
        throw SpanError(msg.str());
    }
    const double drift = (b.y - a.y) / columns;
    return drift > 0.5 / n ? Mode::Bumped : Mode::Zigzag;
}

RecurrenceMap recurrence_map(const Trajectory& traj, int n) {
    RecurrenceMap map;
    if (traj.points.size() < 2) return map;
    const double x0 = traj.points.front().x;
    // First crossing of x = target (x may briefly run backwards near contacts).
    std::size_t cursor = 0;
    auto lateral_at = [&](double x) {
        while (cursor + 1 < traj.points.size() && traj.points[cursor + 1].x < x) ++cursor;
        if (cursor + 1 >= traj.points.size()) return traj.points.back().y;
        const TracePoint& lo = traj.points[cursor];
        const TracePoint& hi = traj.points[cursor + 1];
        const double s = hi.x > lo.x ? std::clamp((x - lo.x) / (hi.x - lo.x), 0.0, 1.0) : 0.0;
        return lo.y + s * (hi.y - lo.y);
    };
    const double x_last = traj.points.back().x;
    const int periods = static_cast<int>(std::floor((x_last - x0) / n + 1e-9));
    for (int k = 0; k < periods; ++k) {
        const double y_in = lateral_at(x0 + static_cast<double>(k) * n);
        const double y_out = lateral_at(x0 + static_cast<double>(k + 1) * n);
        RecurrenceRow row;
        row.period = k;
        row.entry = y_in - std::floor(y_in);
        row.exit = y_out - std::floor(y_out);
        row.displacement = y_out - y_in;
        map.rows.push_back(row);
    }
    return map;
}

Vec2 release_point(const CellGeometry& geom, double diameter) {
    const double radius = 0.5 * diameter;
    const int n = geom.n;
    const Vec2 c = geom.center();
    const double r = geom.pillar_radius;
    const double stretch = std::sqrt(1.0 + 1.0 / (static_cast<double>(n) * n));
    // Mapped lateral coordinate of the seed (the row line passes through y' = 0.5).
    const Vec2 cm = map_to_unit(c, n, 1.0);
    const double y_mapped = cm.y + (r + radius + kReleaseClearance) * stretch;
    Vec2 seed = map_from_unit({0.0, y_mapped}, n, 1.0);
    const double need = radius + kReleaseClearance;
    if (geom.signed_distance(seed) >= need) return seed;

    // Clamp into the feasible interval on x = 0 nearest to the preferred seed.
    const int samples = 4000;
    double best_y = 0.0, best_gap = 1e300;
    bool found = false;
    for (int k = 0; k <= samples; ++k) {
        const double y = seed.y - 0.5 + static_cast<double>(k) / samples;
        if (geom.signed_distance({0.0, y}) >= need) {
            const double gap = std::abs(y - seed.y);
            if (gap < best_gap) {
                best_gap = gap;
                best_y = y;
                found = true;
            }
        }
    }
    if (!found) {
        std::ostringstream msg;
        msg << "no release position with clearance " << need << " on the inlet edge";
        throw PlacementError(msg.str());
    }
    return {0.0, best_y};
}

}  // namespace dld
