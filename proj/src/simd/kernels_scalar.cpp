#include <algorithm>

#include "dld/simd/kernels.hpp"
#include "trt_body.hpp"

namespace dld::simd::scalar {

void gemm(const GemmArgs& g) {
    if (!g.accumulate) {
        for (std::size_t i = 0; i < g.m; ++i) std::fill_n(g.c + i * g.ldc, g.n, 0.0);
    }
    for (std::size_t i = 0; i < g.m; ++i) {
        double* crow = g.c + i * g.ldc;
        for (std::size_t p = 0; p < g.k; ++p) {
            const double a = g.trans_a ? g.a[p * g.lda + i] : g.a[i * g.lda + p];
            if (a == 0.0) continue;
            if (g.trans_b) {
                for (std::size_t j = 0; j < g.n; ++j) crow[j] += a * g.b[j * g.ldb + p];
            } else {
                const double* brow = g.b + p * g.ldb;
                for (std::size_t j = 0; j < g.n; ++j) crow[j] += a * brow[j];
            }
        }
    }
}

void collide_trt(const TrtBlock& block) {
    const auto k = detail::make_constants<double>(block.omega_plus, block.omega_minus,
                                                  block.force_x, block.force_y, block.linear,
                                                  [](double v) { return v; });
    for (std::size_t c = 0; c < block.count; ++c) {
        double f[9];
        for (int q = 0; q < 9; ++q) f[q] = block.f[q][c];
        detail::trt_cell(f, k);
        for (int q = 0; q < 9; ++q) block.f[q][c] = f[q];
    }
}

}  // namespace dld::simd::scalar
