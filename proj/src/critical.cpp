#include "dld/critical.hpp"

#include <algorithm>
#include <sstream>

#include "dld/errors.hpp"

namespace dld {

namespace {

int evaluate(const ModeFn& mode_fn, double d, CriticalResult& out) {
    ++out.evaluations;
    try {
        return mode_fn(d);
    } catch (const StallError& e) {
        std::ostringstream msg;
        msg << e.what() << " [diameter " << d << "]";
        throw StallError(msg.str(), d);
    }
}

}  // namespace

CriticalResult critical_diameter(const ModeFn& mode_fn, double f, double tol) {
    if (!(tol > 0.0)) throw DomainError("bisection tolerance must be positive");
    if (!(f > 0.0 && f < 1.0)) throw RangeError("pillar fraction must lie in (0, 1)");
    CriticalResult out;
    const double g = 1.0 - f;
    double d1 = 0.1 * g;
    double d2 = 0.95 * g;
    const int v1 = evaluate(mode_fn, d1, out);
    const int v2 = evaluate(mode_fn, d2, out);
    out.bracket_history.emplace_back(d1, d2);
    if (!(v1 == -1 && v2 == 1)) {
        if (v1 == 1 && v2 == -1) {
            out.warnings.emplace_back("inverted bracket: mode is not monotone in diameter");
        }
        return out;
    }
    double d = 0.0;
    while ((d2 - d1) >= tol) {
        d = 0.5 * (d1 + d2);
        if (evaluate(mode_fn, d, out) == 1) {
            d2 = d;
        } else {
            d1 = d;
        }
        out.bracket_history.emplace_back(d1, d2);
        out.d_c = d;
    }
    return out;
}

ModeFn tracer_mode_fn(const FlowField& field, const WallField& wf, const TracerModeOptions& opts) {
    return [&field, &wf, opts](double d) {
        const Vec2 start = release_point(wf.geometry, d);
        const Trajectory traj = trace(field, wf, start, d, opts.n_periods, opts.trace);
        return mode_sign(traj.mode);
    };
}

CriticalResult critical_diameter_for(const FlowField& field, double tol,
                                     const TracerModeOptions& opts) {
    const DldParams& p = field.params();
    const WallField wf = wall_distance_field(unit_cell_unchecked(p.f, p.n), std::max(32, field.res()));
    return critical_diameter(tracer_mode_fn(field, wf, opts), p.f, tol);
}

}  // namespace dld
