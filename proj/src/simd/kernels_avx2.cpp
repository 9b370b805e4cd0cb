#include <immintrin.h>

#include <algorithm>
#include <vector>

#include "dld/simd/kernels.hpp"
#include "trt_body.hpp"

namespace dld::simd::avx2 {

namespace {

struct V4 {
    __m256d v;
};
inline V4 operator+(V4 a, V4 b) { return {_mm256_add_pd(a.v, b.v)}; }
inline V4 operator-(V4 a, V4 b) { return {_mm256_sub_pd(a.v, b.v)}; }
inline V4 operator*(V4 a, V4 b) { return {_mm256_mul_pd(a.v, b.v)}; }
inline V4 operator/(V4 a, V4 b) { return {_mm256_div_pd(a.v, b.v)}; }

constexpr std::size_t kMr = 4;
constexpr std::size_t kNr = 8;
constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 96;
constexpr std::size_t kNc = 2048;

inline double at_a(const GemmArgs& g, std::size_t i, std::size_t p) {
    return g.trans_a ? g.a[p * g.lda + i] : g.a[i * g.lda + p];
}
inline double at_b(const GemmArgs& g, std::size_t p, std::size_t j) {
    return g.trans_b ? g.b[j * g.ldb + p] : g.b[p * g.ldb + j];
}

// Packs op(A)[i0:i0+mc, p0:p0+kc] into row strips of kMr, zero padded.
void pack_a(const GemmArgs& g, std::size_t i0, std::size_t mc, std::size_t p0, std::size_t kc,
            double* out) {
    for (std::size_t is = 0; is < mc; is += kMr) {
        const std::size_t rows = std::min(kMr, mc - is);
        for (std::size_t p = 0; p < kc; ++p) {
            for (std::size_t r = 0; r < kMr; ++r) {
                *out++ = r < rows ? at_a(g, i0 + is + r, p0 + p) : 0.0;
            }
        }
    }
}

// Packs op(B)[p0:p0+kc, j0:j0+nc] into column strips of kNr, zero padded.
void pack_b(const GemmArgs& g, std::size_t p0, std::size_t kc, std::size_t j0, std::size_t nc,
            double* out) {
    for (std::size_t js = 0; js < nc; js += kNr) {
        const std::size_t cols = std::min(kNr, nc - js);
        if (!g.trans_b && cols == kNr) {
            for (std::size_t p = 0; p < kc; ++p) {
                const double* src = g.b + (p0 + p) * g.ldb + j0 + js;
                _mm256_storeu_pd(out, _mm256_loadu_pd(src));
                _mm256_storeu_pd(out + 4, _mm256_loadu_pd(src + 4));
                out += kNr;
            }
            continue;
        }
        for (std::size_t p = 0; p < kc; ++p) {
            for (std::size_t c = 0; c < kNr; ++c) {
                *out++ = c < cols ? at_b(g, p0 + p, j0 + js + c) : 0.0;
            }
        }
    }
}

// 4x8 register tile: C[0:4, 0:8] += Ap * Bp over kc.
void micro_kernel(std::size_t kc, const double* ap, const double* bp, double* c, std::size_t ldc,
                  std::size_t rows, std::size_t cols) {
    __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
    __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
    __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
    __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
    for (std::size_t p = 0; p < kc; ++p) {
        const __m256d b0 = _mm256_loadu_pd(bp);
        const __m256d b1 = _mm256_loadu_pd(bp + 4);
        __m256d a = _mm256_broadcast_sd(ap);
        c00 = _mm256_fmadd_pd(a, b0, c00);
        c01 = _mm256_fmadd_pd(a, b1, c01);
        a = _mm256_broadcast_sd(ap + 1);
        c10 = _mm256_fmadd_pd(a, b0, c10);
        c11 = _mm256_fmadd_pd(a, b1, c11);
        a = _mm256_broadcast_sd(ap + 2);
        c20 = _mm256_fmadd_pd(a, b0, c20);
        c21 = _mm256_fmadd_pd(a, b1, c21);
        a = _mm256_broadcast_sd(ap + 3);
        c30 = _mm256_fmadd_pd(a, b0, c30);
        c31 = _mm256_fmadd_pd(a, b1, c31);
        ap += kMr;
        bp += kNr;
    }
    if (rows == kMr && cols == kNr) {
        double* r0 = c;
        _mm256_storeu_pd(r0, _mm256_add_pd(_mm256_loadu_pd(r0), c00));
        _mm256_storeu_pd(r0 + 4, _mm256_add_pd(_mm256_loadu_pd(r0 + 4), c01));
        r0 += ldc;
        _mm256_storeu_pd(r0, _mm256_add_pd(_mm256_loadu_pd(r0), c10));
        _mm256_storeu_pd(r0 + 4, _mm256_add_pd(_mm256_loadu_pd(r0 + 4), c11));
        r0 += ldc;
        _mm256_storeu_pd(r0, _mm256_add_pd(_mm256_loadu_pd(r0), c20));
        _mm256_storeu_pd(r0 + 4, _mm256_add_pd(_mm256_loadu_pd(r0 + 4), c21));
        r0 += ldc;
        _mm256_storeu_pd(r0, _mm256_add_pd(_mm256_loadu_pd(r0), c30));
        _mm256_storeu_pd(r0 + 4, _mm256_add_pd(_mm256_loadu_pd(r0 + 4), c31));
        return;
    }
    alignas(32) double tile[kMr * kNr];
    _mm256_store_pd(tile + 0, c00);
    _mm256_store_pd(tile + 4, c01);
    _mm256_store_pd(tile + 8, c10);
    _mm256_store_pd(tile + 12, c11);
    _mm256_store_pd(tile + 16, c20);
    _mm256_store_pd(tile + 20, c21);
    _mm256_store_pd(tile + 24, c30);
    _mm256_store_pd(tile + 28, c31);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t cc = 0; cc < cols; ++cc) c[r * ldc + cc] += tile[r * kNr + cc];
    }
}

}  // namespace

void gemm(const GemmArgs& g) {
    if (!g.accumulate) {
        for (std::size_t i = 0; i < g.m; ++i) std::fill_n(g.c + i * g.ldc, g.n, 0.0);
    }
    if (g.m == 0 || g.n == 0 || g.k == 0) return;

    thread_local std::vector<double> abuf;
    thread_local std::vector<double> bbuf;
    for (std::size_t j0 = 0; j0 < g.n; j0 += kNc) {
        const std::size_t nc = std::min(kNc, g.n - j0);
        const std::size_t nc_pad = (nc + kNr - 1) / kNr * kNr;
        for (std::size_t p0 = 0; p0 < g.k; p0 += kKc) {
            const std::size_t kc = std::min(kKc, g.k - p0);
            bbuf.resize(nc_pad * kc);
            pack_b(g, p0, kc, j0, nc, bbuf.data());
            for (std::size_t i0 = 0; i0 < g.m; i0 += kMc) {
                const std::size_t mc = std::min(kMc, g.m - i0);
                const std::size_t mc_pad = (mc + kMr - 1) / kMr * kMr;
                abuf.resize(mc_pad * kc);
                pack_a(g, i0, mc, p0, kc, abuf.data());
                for (std::size_t js = 0; js < nc; js += kNr) {
                    const double* bp = bbuf.data() + js * kc;
                    for (std::size_t is = 0; is < mc; is += kMr) {
                        const double* ap = abuf.data() + is * kc;
                        micro_kernel(kc, ap, bp, g.c + (i0 + is) * g.ldc + j0 + js, g.ldc,
                                     std::min(kMr, mc - is), std::min(kNr, nc - js));
                    }
                }
            }
        }
    }
}

void collide_trt(const TrtBlock& block) {
    const auto kv = detail::make_constants<V4>(block.omega_plus, block.omega_minus, block.force_x,
                                               block.force_y, block.linear,
                                               [](double v) { return V4{_mm256_set1_pd(v)}; });
    std::size_t c = 0;
    for (; c + 4 <= block.count; c += 4) {
        V4 f[9];
        for (int q = 0; q < 9; ++q) f[q].v = _mm256_loadu_pd(block.f[q] + c);
        detail::trt_cell(f, kv);
        for (int q = 0; q < 9; ++q) _mm256_storeu_pd(block.f[q] + c, f[q].v);
    }
    if (c < block.count) {
        const auto ks = detail::make_constants<double>(block.omega_plus, block.omega_minus,
                                                       block.force_x, block.force_y, block.linear,
                                                       [](double v) { return v; });
        for (; c < block.count; ++c) {
            double f[9];
            for (int q = 0; q < 9; ++q) f[q] = block.f[q][c];
            detail::trt_cell(f, ks);
            for (int q = 0; q < 9; ++q) block.f[q][c] = f[q];
        }
    }
}

}  // namespace dld::simd::avx2
