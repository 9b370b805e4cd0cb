#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dld/flow.hpp"
#include "dld/tracer.hpp"
#include "dld/walls.hpp"

namespace dld {

/// Maps a particle diameter (unit-cell lengths) to +1 (bumped) or -1 (zigzag).
using ModeFn = std::function<int(double)>;

struct CriticalResult {
    std::optional<double> d_c;  ///< absent: no separation inside [0.1 g, 0.95 g]
    int evaluations = 0;
    std::vector<std::pair<double, double>> bracket_history;
    std::vector<std::string> warnings;
};

inline constexpr double kDefaultCriticalTol = 1e-3;

/// Interval bisection between 0.1 g and 0.95 g (g = 1 - f). The reported
/// diameter is the last midpoint evaluated.
CriticalResult critical_diameter(const ModeFn& mode_fn, double f, double tol = kDefaultCriticalTol);

struct TracerModeOptions {
    int n_periods = 3;
    TraceOptions trace;
};

/// Mode function backed by the tracer: release at release_point(), classify.
ModeFn tracer_mode_fn(const FlowField& field, const WallField& wf,
                      const TracerModeOptions& opts = {});

/// Convenience: wall field at the flow resolution plus bisection.
CriticalResult critical_diameter_for(const FlowField& field, double tol = kDefaultCriticalTol,
                                     const TracerModeOptions& opts = {});

}  // namespace dld
