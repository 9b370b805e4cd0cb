#pragma once

// Data-parallel inner loops. Every kernel has a portable scalar reference and,
// where the build and the CPU allow it, an AVX2/FMA variant picked at runtime.
// Tests check that both variants agree.

#include <cstddef>
#include <string_view>

namespace dld::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

/// True when the AVX2 variants were compiled in and the CPU supports AVX2+FMA.
bool avx2_available();

/// ISA used by kernels(): the best available one unless DLD_FORGE_SIMD=scalar.
Isa active_isa();

/// C = op(A) * op(B) (+ C when accumulate), all row-major.
/// op(A) is m x k, op(B) is k x n, C is m x n.
struct GemmArgs {
    std::size_t m = 0, n = 0, k = 0;
    const double* a = nullptr;
    std::size_t lda = 0;
    bool trans_a = false;
    const double* b = nullptr;
    std::size_t ldb = 0;
    bool trans_b = false;
    double* c = nullptr;
    std::size_t ldc = 0;
    bool accumulate = false;
};

/// One block of D2Q9 populations in structure-of-arrays form, collided in place.
/// Two-relaxation-time collision with Guo forcing and a uniform body force.
struct TrtBlock {
    double* f[9] = {};
    std::size_t count = 0;
    double omega_plus = 1.0;
    double omega_minus = 1.0;
    double force_x = 0.0;
    double force_y = 0.0;
    bool linear = false;  ///< Stokes variant without the quadratic velocity terms
};

struct KernelTable {
    Isa isa;
    void (*gemm)(const GemmArgs&);
    void (*collide_trt)(const TrtBlock&);
};

const KernelTable& kernels();
const KernelTable& kernels(Isa isa);

inline void gemm(const GemmArgs& args) { kernels().gemm(args); }

namespace scalar {
void gemm(const GemmArgs& args);
void collide_trt(const TrtBlock& block);
}  // namespace scalar

#if defined(DLD_HAVE_AVX2)
namespace avx2 {
void gemm(const GemmArgs& args);
void collide_trt(const TrtBlock& block);
}  // namespace avx2
#endif

}  // namespace dld::simd
