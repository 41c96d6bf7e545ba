#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference
// implementation; wider variants are picked at runtime when the CPU supports
// them and must agree with the reference (see tests/test_kernels.cpp).

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

namespace hinfpde::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;

/// Structure-of-arrays view of n complex 2x2 matrices.
struct Batch2x2 {
    const double* re[4];  // entries 11, 12, 21, 22
    const double* im[4];
    std::size_t n;
};

struct KernelTable {
    /// out[k] = scale[k] * sigma_max(M_k); scale may be null (treated as 1).
    void (*sigma_max_2x2)(const Batch2x2& m, const double* scale, double* out);

    /// out[k] = scale[k] * |z_k|; scale may be null.
    void (*abs_scaled)(const double* re, const double* im, std::size_t n,
                       const double* scale, double* out);

    /// out[i] = sum_k exp(j * k * d_omega * t[i]) * z_k, k = 0..n-1.
    void (*exp_sum)(const double* zr, const double* zi, std::size_t n,
                    double d_omega, const double* t, std::size_t nt,
                    std::complex<double>* out);
};

const KernelTable& scalar_table() noexcept;
#if defined(HINFPDE_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif

/// True if `isa` was compiled in and the running CPU supports it.
bool isa_available(Isa isa) noexcept;

/// Best available ISA, unless HINFPDE_FORCE_SCALAR is set in the environment.
Isa active_isa() noexcept;

const KernelTable& table(Isa isa);
const KernelTable& active() noexcept;

}  // namespace hinfpde::kernels
