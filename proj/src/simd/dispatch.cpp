#include <cstdlib>
#include <string>

#include "dld/simd/kernels.hpp"

namespace dld::simd {

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool avx2_available() {
#if defined(DLD_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    static const bool ok = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    }();
    return ok;
#else
    return false;
#endif
}

Isa active_isa() {
    static const Isa isa = [] {
        const char* env = std::getenv("DLD_FORGE_SIMD");
        if (env && std::string(env) == "scalar") return Isa::Scalar;
        return avx2_available() ? Isa::Avx2 : Isa::Scalar;
    }();
    return isa;
}

const KernelTable& kernels(Isa isa) {
    static const KernelTable scalar_table{Isa::Scalar, &scalar::gemm, &scalar::collide_trt};
#if defined(DLD_HAVE_AVX2)
    static const KernelTable avx2_table{Isa::Avx2, &avx2::gemm, &avx2::collide_trt};
    if (isa == Isa::Avx2 && avx2_available()) return avx2_table;
#endif
    (void)isa;
    return scalar_table;
}

const KernelTable& kernels() {
    static const KernelTable& table = kernels(active_isa());
    return table;
}

}  // namespace dld::simd
