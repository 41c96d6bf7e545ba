#include "hinfpde/kernels.hpp"

#include <cstdlib>
#include <stdexcept>

namespace hinfpde::kernels {

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

bool isa_available(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2:
#if defined(HINFPDE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
    }
    return false;
}

Isa active_isa() noexcept {
    static const Isa chosen = [] {
        const char* force = std::getenv("HINFPDE_FORCE_SCALAR");
        if (force && *force && *force != '0') return Isa::Scalar;
        return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
    }();
    return chosen;
}

const KernelTable& table(Isa isa) {
    if (!isa_available(isa)) throw std::runtime_error("kernel ISA not available on this CPU");
#if defined(HINFPDE_HAVE_AVX2)
    if (isa == Isa::Avx2) return avx2_table();
#endif
    return scalar_table();
}

const KernelTable& active() noexcept {
    static const KernelTable& t = table(active_isa());
    return t;
}

}  // namespace hinfpde::kernels
