#pragma once

// Lattice constants shared by the collision kernels and the solver.
// Ordering: rest, E, N, W, S, NE, NW, SW, SE.

namespace dld::d2q9 {

inline constexpr int q = 9;
inline constexpr int cx[9] = {0, 1, 0, -1, 0, 1, -1, -1, 1};
inline constexpr int cy[9] = {0, 0, 1, 0, -1, 1, 1, -1, -1};
inline constexpr int opposite[9] = {0, 3, 4, 1, 2, 7, 8, 5, 6};
inline constexpr double w[9] = {4.0 / 9,  1.0 / 9,  1.0 / 9,  1.0 / 9, 1.0 / 9,
                                1.0 / 36, 1.0 / 36, 1.0 / 36, 1.0 / 36};

}  // namespace dld::d2q9
