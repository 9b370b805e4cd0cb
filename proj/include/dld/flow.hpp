#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dld/geometry.hpp"

namespace dld {

struct SolverConfig {
    int res = 128;            ///< output grid resolution (and lattice resolution, rounded up to a multiple of N)
    int max_iters = 2'000'000;  ///< lattice time steps
    double residual_tol = 1e-7; ///< relative field change per diagnostic interval
    double drive_gain = 1.0;    ///< relaxation of the body-force correction
    /// Cancel the mean lateral flow with a y body-force component so the mean
    /// flow is aligned with the channel axis (zero net lateral flux).
    bool null_lateral_flux = true;
    /// +1 drives along +x, -1 along -x.
    double drive_sign = 1.0;
    /// Largest allowed gap-mean lattice velocity (Mach control).
    double lattice_speed_cap = 0.03;
    /// Upper bound on the lattice viscosity. TRT steady states depend only on
    /// the magic parameter, so low-Re solves can use a large viscosity.
    double max_lattice_viscosity = 0.5;
    /// At or below this Reynolds number the convective terms are dropped and
    /// the Stokes equations are solved (exactly linear and reversible).
    double stokes_max_re = 0.1;

    void validate() const;
};

/**
 * Steady velocity on the shear-mapped unit square.
 *
 * Node (i, j) sits at mapped position (i / res, j / res) and is stored at
 * index j * res + i. Components are Cartesian (physical x and y), scaled so
 * the target gap-mean velocity is one; the matching kinematic viscosity is
 * then g / Re.
 */
class FlowField {
public:
    FlowField() = default;
    FlowField(DldParams params, int res, std::vector<double> u, std::vector<double> v,
              double achieved_re);

    int res() const { return res_; }
    const DldParams& params() const { return params_; }
    double achieved_re() const { return achieved_re_; }
    void set_achieved_re(double re) { achieved_re_ = re; }
    double viscosity() const { return params_.gap_fraction() / params_.re; }

    std::span<const double> u() const { return u_; }
    std::span<const double> v() const { return v_; }
    std::span<double> u_mut() { return u_; }
    std::span<double> v_mut() { return v_; }

    double u_at(int i, int j) const { return u_[static_cast<std::size_t>(j) * res_ + i]; }
    double v_at(int i, int j) const { return v_[static_cast<std::size_t>(j) * res_ + i]; }
    double max_speed() const;

    /// Velocity at a physical point (unit-cell lengths).
    Vec2 velocity_at(Vec2 physical) const;

private:
    DldParams params_{};
    int res_ = 0;
    std::vector<double> u_;
    std::vector<double> v_;
    double achieved_re_ = 0.0;
};

FlowField solve_flow(const DldParams& params, const SolverConfig& cfg = {});

/// Bilinear, periodic in both mapped coordinates (a1 maps onto (1, 0)).
Vec2 interpolate_velocity(const FlowField& field, Vec2 mapped);

/// Gap Reynolds number: mean x-velocity across the vertical gap section times g / nu.
double measure_reynolds(const FlowField& field, const DldParams& params);

struct DivergenceStats {
    double max_abs = 0.0;      ///< max |div u| over interior fluid nodes
    double bound_scale = 0.0;  ///< max|u| / cell size
    std::size_t nodes = 0;
};

/// Central-difference divergence of the physical velocity evaluated on the
/// mapped grid (chain rule through the shear). Only nodes whose whole stencil
/// sits at least `wall_band` cells from a pillar surface are counted; closer
/// nodes see the staircase wall and the bilinear near-wall reconstruction.
DivergenceStats divergence(const FlowField& field, double wall_band = 3.0);

/// Resample onto a different grid resolution (in-pillar nodes zeroed).
FlowField resample(const FlowField& field, int res);

/**
 * Bare lattice-Boltzmann kernel on an M x M lattice whose x-boundary is
 * periodic with a lateral shift of `shift` cells (0 for a plain periodic box).
 * Exposed for self-tests: the pillar solve goes through solve_flow.
 */
class LatticeSolver {
public:
    /// `solid(i, j)` marks wall nodes; nodes are cell centred at ((i+.5)/M, (j+.5)/M).
    LatticeSolver(int m, int shift, const std::function<bool(int, int)>& solid, double nu);

    int size() const { return m_; }
    int shift() const { return shift_; }
    double nu() const { return nu_; }
    std::size_t fluid_count() const { return fluid_.size(); }

    void set_force(Vec2 force) { force_ = force; }
    /// Linear equilibrium (Stokes flow); velocities are then j / rho0.
    void set_linear(bool linear) { linear_ = linear; }
    bool linear() const { return linear_; }
    Vec2 force() const { return force_; }

    void step(int steps);
    /// Runs until the relative change per `interval` steps falls below tol.
    /// Returns the final residual; throws ConvergenceError past max_steps.
    double run_to_steady(double tol, long max_steps, int interval = 100);

    /// Velocity at node (i, j); zero on solid nodes.
    Vec2 velocity(int i, int j) const;
    /// Domain-mean velocity (solid counted as zero), i.e. the flux per unit width.
    Vec2 mean_velocity() const;
    /// Bilinear interpolation at a physical point with the shifted wrap.
    Vec2 sample(Vec2 physical) const;
    /// Bicubic (Catmull-Rom) where the 4x4 stencil is all fluid, bilinear otherwise.
    Vec2 sample_cubic(Vec2 physical) const;
    /// Multiplies the deviation from the rest state by s (exact rescale in the Stokes limit).
    void scale_state(double s);

    long steps_taken() const { return steps_; }

    /// Velocity of every fluid node, in fluid-index order.
    void fluid_velocity(std::vector<double>& ux, std::vector<double>& uy) const;

private:
    std::pair<int, int> wrap(int i, int j) const;

    int m_;
    int shift_;
    double nu_;
    Vec2 force_{};
    bool linear_ = false;
    std::vector<std::int32_t> index_;  // node -> fluid index or -1
    std::vector<std::int32_t> fluid_;  // fluid index -> node
    std::vector<std::int32_t> src_;    // q * nf + k -> flat source in previous buffer
    std::vector<double> f_;
    std::vector<double> g_;
    long steps_ = 0;
};

}  // namespace dld
