#include <doctest.h>

#include <array>
#include <cstring>
#include <random>
#include <vector>

#include "dld/simd/kernels.hpp"

using namespace dld::simd;

namespace {

// Plain triple loop used as the reference for every GEMM variant.
void gemm_oracle(const GemmArgs& g) {
    for (std::size_t i = 0; i < g.m; ++i)
        for (std::size_t j = 0; j < g.n; ++j) {
            long double s = 0.0L;
            for (std::size_t p = 0; p < g.k; ++p) {
                const double a = g.trans_a ? g.a[p * g.lda + i] : g.a[i * g.lda + p];
                const double b = g.trans_b ? g.b[j * g.ldb + p] : g.b[p * g.ldb + j];
                s += static_cast<long double>(a) * b;
            }
            double& c = g.c[i * g.ldc + j];
            c = static_cast<double>(s + (g.accumulate ? c : 0.0L));
        }
}

struct GemmCase {
    std::size_t m, n, k;
    bool ta, tb, acc;
};

double run_case(void (*fn)(const GemmArgs&), const GemmCase& cs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t lda = (cs.ta ? cs.m : cs.k) + 3, ldb = (cs.tb ? cs.k : cs.n) + 1, ldc = cs.n + 2;
    std::vector<double> a((cs.ta ? cs.k : cs.m) * lda), b((cs.tb ? cs.n : cs.k) * ldb), c(cs.m * ldc);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    for (auto& x : c) x = u(rng);
    std::vector<double> ref = c;
    GemmArgs g{cs.m, cs.n, cs.k, a.data(), lda, cs.ta, b.data(), ldb, cs.tb, c.data(), ldc, cs.acc};
    fn(g);
    g.c = ref.data();
    gemm_oracle(g);
    double worst = 0.0;
    for (std::size_t i = 0; i < cs.m; ++i)
        for (std::size_t j = 0; j < cs.n; ++j)
            worst = std::max(worst, std::abs(c[i * ldc + j] - ref[i * ldc + j]));
    // Padding columns must be untouched.
    for (std::size_t i = 0; i < cs.m; ++i)
        for (std::size_t j = cs.n; j < ldc; ++j) worst = std::max(worst, std::abs(c[i * ldc + j] - ref[i * ldc + j]));
    return worst;
}

const GemmCase kCases[] = {
    {1, 1, 1, false, false, false},   {5, 7, 3, false, false, false},  {13, 9, 31, true, false, true},
    {17, 33, 5, false, true, false},  {64, 64, 64, true, true, true},  {97, 130, 300, false, false, true},
    {100, 19, 577, false, true, false}, {3, 2050, 40, true, false, false}, {0, 4, 4, false, false, false},
    {4, 4, 0, false, false, true},
};

}  // namespace

TEST_CASE("scalar gemm matches the triple-loop oracle") {
    std::uint64_t seed = 1;
    for (const auto& cs : kCases) {
        CAPTURE(cs.m);
        CAPTURE(cs.n);
        CAPTURE(cs.k);
        CHECK(run_case(&scalar::gemm, cs, seed++) < 1e-12);
    }
}

#if defined(DLD_HAVE_AVX2)
TEST_CASE("avx2 gemm matches the triple-loop oracle") {
    if (!avx2_available()) return;
    std::uint64_t seed = 1;
    for (const auto& cs : kCases) {
        CAPTURE(cs.m);
        CAPTURE(cs.n);
        CAPTURE(cs.k);
        CHECK(run_case(&avx2::gemm, cs, seed++) < 1e-12);
    }
}

TEST_CASE("avx2 and scalar TRT collisions are bit-identical") {
    if (!avx2_available()) return;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.01, 0.2);
    const double w[9] = {4.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 36, 1.0 / 36, 1.0 / 36, 1.0 / 36};
    for (std::size_t count : {1u, 3u, 4u, 7u, 64u, 1001u}) {
        std::vector<double> s(9 * count), v(9 * count);
        for (std::size_t q = 0; q < 9; ++q)
            for (std::size_t k = 0; k < count; ++k) s[q * count + k] = w[q] * (1.0 + u(rng));
        v = s;
        TrtBlock bs, bv;
        for (int q = 0; q < 9; ++q) {
            bs.f[q] = s.data() + q * count;
            bv.f[q] = v.data() + q * count;
        }
        bs.count = bv.count = count;
        bs.omega_plus = bv.omega_plus = 1.3;
        bs.omega_minus = bv.omega_minus = 1.0 / (3.0 / 16.0 / (1.0 / 1.3 - 0.5) + 0.5);
        bs.force_x = bv.force_x = 1e-5;
        bs.force_y = bv.force_y = -3e-6;
        scalar::collide_trt(bs);
        avx2::collide_trt(bv);
        CHECK(std::memcmp(s.data(), v.data(), s.size() * sizeof(double)) == 0);
    }
}
#endif

TEST_CASE("dispatch honours the scalar override") {
    CHECK(kernels(Isa::Scalar).isa == Isa::Scalar);
    CHECK(isa_name(Isa::Scalar) == "scalar");
    if (avx2_available()) CHECK(kernels(Isa::Avx2).isa == Isa::Avx2);
}

TEST_CASE("TRT collision conserves mass and adds the force impulse") {
    const double w[9] = {4.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 36, 1.0 / 36, 1.0 / 36, 1.0 / 36};
    const int cx[9] = {0, 1, 0, -1, 0, 1, -1, -1, 1};
    const int cy[9] = {0, 0, 1, 0, -1, 1, 1, -1, -1};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 0.1);
    const std::size_t count = 50;
    std::vector<double> f(9 * count);
    for (int q = 0; q < 9; ++q)
        for (std::size_t k = 0; k < count; ++k) f[q * count + k] = w[q] * (1.0 + u(rng));
    auto moments = [&](std::size_t k) {
        double r = 0, jx = 0, jy = 0;
        for (int q = 0; q < 9; ++q) {
            r += f[q * count + k];
            jx += cx[q] * f[q * count + k];
            jy += cy[q] * f[q * count + k];
        }
        return std::array<double, 3>{r, jx, jy};
    };
    std::vector<std::array<double, 3>> before(count);
    for (std::size_t k = 0; k < count; ++k) before[k] = moments(k);
    for (Isa isa : {Isa::Scalar, Isa::Avx2}) {
        if (isa == Isa::Avx2 && !avx2_available()) continue;
        std::vector<double> g = f;
        TrtBlock b;
        for (int q = 0; q < 9; ++q) b.f[q] = g.data() + q * count;
        b.count = count;
        b.omega_plus = 1.7;
        b.omega_minus = 0.9;
        b.force_x = 2e-4;
        b.force_y = -1e-4;
        kernels(isa).collide_trt(b);
        std::swap(f, g);
        for (std::size_t k = 0; k < count; ++k) {
            const auto m = moments(k);
            CHECK(m[0] == doctest::Approx(before[k][0]).epsilon(1e-13));
            CHECK(m[1] - before[k][1] == doctest::Approx(2e-4).epsilon(1e-9));
            CHECK(m[2] - before[k][2] == doctest::Approx(-1e-4).epsilon(1e-9));
        }
        std::swap(f, g);
    }
}
