#pragma once

// TRT collision for one lane-group of cells. Written once against a generic
// arithmetic type so the scalar and vector variants evaluate the exact same
// expression tree (the build disables FP contraction, so results match bit
// for bit).

#include "d2q9.hpp"

namespace dld::simd::detail {

template <class V>
struct TrtConstants {
    V omega_plus, omega_minus;
    V keep_plus, keep_minus;  // 1 - omega/2
    V fx, fy, half_fx, half_fy;
    V one, half, three, four_half, one_half, nine;
    V src_three;  // 3, or 0 in the linear (Stokes) variant
    V w0, w1, w2;
};

template <class V>
inline void trt_pair(V& fi, V& fo, V rho, V cu, V cf, V usq, V uf, V w, const TrtConstants<V>& k) {
    const V wrho = w * rho;
    const V feq_p = wrho * ((k.one + k.four_half * (cu * cu)) - k.one_half * usq);
    const V feq_m = wrho * (k.three * cu);
    const V src_p = w * (k.nine * (cu * cf) - k.src_three * uf);
    const V src_m = w * (k.three * cf);
    const V fp = k.half * (fi + fo);
    const V fm = k.half * (fi - fo);
    const V dp = k.keep_plus * src_p - k.omega_plus * (fp - feq_p);
    const V dm = k.keep_minus * src_m - k.omega_minus * (fm - feq_m);
    fi = fi + (dp + dm);
    fo = fo + (dp - dm);
}

template <class V>
inline void trt_cell(V (&f)[9], const TrtConstants<V>& k) {
    const V rho = (((f[0] + f[1]) + (f[2] + f[3])) + ((f[4] + f[5]) + (f[6] + f[7]))) + f[8];
    const V jx = ((f[1] - f[3]) + (f[5] - f[7])) + (f[8] - f[6]);
    const V jy = ((f[2] - f[4]) + (f[5] - f[7])) + (f[6] - f[8]);
    const V inv = k.one / rho;
    const V ux = (jx + k.half_fx) * inv;
    const V uy = (jy + k.half_fy) * inv;
    const V usq = ux * ux + uy * uy;
    const V uf = ux * k.fx + uy * k.fy;

    // rest population
    {
        const V feq0 = (k.w0 * rho) * (k.one - k.one_half * usq);
        const V src0 = k.w0 * (k.src_three * uf);
        f[0] = f[0] - (k.keep_plus * src0 + k.omega_plus * (f[0] - feq0));
    }
    trt_pair(f[1], f[3], rho, ux, k.fx, usq, uf, k.w1, k);
    trt_pair(f[2], f[4], rho, uy, k.fy, usq, uf, k.w1, k);
    trt_pair(f[5], f[7], rho, ux + uy, k.fx + k.fy, usq, uf, k.w2, k);
    trt_pair(f[6], f[8], rho, uy - ux, k.fy - k.fx, usq, uf, k.w2, k);
}

// `linear` drops every term quadratic in the velocity: the equilibrium becomes
// w (rho + 3 c.j) and the scheme solves the Stokes equations exactly.
template <class V, class Broadcast>
TrtConstants<V> make_constants(double omega_plus, double omega_minus, double fx, double fy,
                               bool linear, Broadcast bc) {
    TrtConstants<V> k;
    k.omega_plus = bc(omega_plus);
    k.omega_minus = bc(omega_minus);
    k.keep_plus = bc(1.0 - 0.5 * omega_plus);
    k.keep_minus = bc(1.0 - 0.5 * omega_minus);
    k.fx = bc(fx);
    k.fy = bc(fy);
    k.half_fx = bc(0.5 * fx);
    k.half_fy = bc(0.5 * fy);
    k.one = bc(1.0);
    k.half = bc(0.5);
    k.three = bc(3.0);
    k.four_half = bc(linear ? 0.0 : 4.5);
    k.one_half = bc(linear ? 0.0 : 1.5);
    k.nine = bc(linear ? 0.0 : 9.0);
    k.src_three = bc(linear ? 0.0 : 3.0);
    k.w0 = bc(d2q9::w[0]);
    k.w1 = bc(d2q9::w[1]);
    k.w2 = bc(d2q9::w[5]);
    return k;
}

}  // namespace dld::simd::detail
