#pragma once

#include <cstddef>
#include <vector>

#include "dld/flow.hpp"
#include "dld/walls.hpp"

namespace dld {

enum class Mode { Bumped, Zigzag, Undetermined };

/// +1 for bumped, -1 for zigzag (the sign convention of the bisection).
int mode_sign(Mode m);
const char* mode_name(Mode m);

struct TracePoint {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
};

/// Particle path in physical cell coordinates (x along the channel, lateral y).
struct Trajectory {
    std::vector<TracePoint> points;
    std::vector<std::size_t> contacts;  ///< indices into points where a contact was resolved
    Mode mode = Mode::Undetermined;
    double particle_diameter = 0.0;
    int period_number = 0;  ///< N of the array the particle was traced in
};

struct RecurrenceRow {
    int period = 0;
    double entry = 0.0;         ///< lateral position at the period inlet, wrapped to [0, 1)
    double exit = 0.0;          ///< lateral position at the period outlet, wrapped to [0, 1)
    double displacement = 0.0;  ///< unwrapped exit - entry in row pitches
};

struct RecurrenceMap {
    std::vector<RecurrenceRow> rows;
};

/// Specular reflection: n.v' = -n.v, t.v' = t.v. n and t must be orthonormal.
Vec2 reflect(Vec2 v, Vec2 n, Vec2 t);

/// Classical fourth-order Runge-Kutta step of dx/dt = u(x).
template <class Velocity>
Vec2 step_rk4(const Velocity& velocity, Vec2 p, double dt) {
    const Vec2 k1 = velocity(p);
    const Vec2 k2 = velocity(p + k1 * (0.5 * dt));
    const Vec2 k3 = velocity(p + k2 * (0.5 * dt));
    const Vec2 k4 = velocity(p + k3 * dt);
    return p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
}

Vec2 step_rk4(const FlowField& field, Vec2 p, double dt);

struct TraceOptions {
    double dt = 0.0;               ///< 0 selects 0.1 * cell size / max speed
    long step_cap = 5'000'000;
    double start_clearance = 0.0;  ///< extra clearance required at the start point
};

/// Integrates a finite-size massless particle until it has crossed
/// n_periods * N columns. Contacts push the centre back to one radius from
/// the wall and reflect the step velocity.
Trajectory trace(const FlowField& field, const WallField& wf, Vec2 start, double diameter,
                 int n_periods, const TraceOptions& opts = {});

/// Mean lateral drift per column; bumped when strictly above half the array slope.
Mode classify_mode(const Trajectory& traj, int n);

RecurrenceMap recurrence_map(const Trajectory& traj, int n);

/// Seed on the inlet edge (x = 0) just above the tangent line of the pillar row
/// (offset radius + 1e-3 perpendicular to the array direction), clamped into
/// the feasible lateral interval when the gap is tight.
Vec2 release_point(const CellGeometry& geom, double diameter);

}  // namespace dld
