#include "hinfpde/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace hinfpde::kernels {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void sigma_max_2x2_avx2(const Batch2x2& m, const double* scale, double* out) {
    const std::size_t nv = m.n & ~std::size_t{3};
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d four = _mm256_set1_pd(4.0);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k < nv; k += 4) {
        const __m256d ar = _mm256_loadu_pd(m.re[0] + k), ai = _mm256_loadu_pd(m.im[0] + k);
        const __m256d br = _mm256_loadu_pd(m.re[1] + k), bi = _mm256_loadu_pd(m.im[1] + k);
        const __m256d cr = _mm256_loadu_pd(m.re[2] + k), ci = _mm256_loadu_pd(m.im[2] + k);
        const __m256d dr = _mm256_loadu_pd(m.re[3] + k), di = _mm256_loadu_pd(m.im[3] + k);

        __m256d frob = _mm256_mul_pd(ar, ar);
        frob = _mm256_fmadd_pd(ai, ai, frob);
        frob = _mm256_fmadd_pd(br, br, frob);
        frob = _mm256_fmadd_pd(bi, bi, frob);
        frob = _mm256_fmadd_pd(cr, cr, frob);
        frob = _mm256_fmadd_pd(ci, ci, frob);
        frob = _mm256_fmadd_pd(dr, dr, frob);
        frob = _mm256_fmadd_pd(di, di, frob);

        // det = a*d - b*c
        __m256d det_r = _mm256_fmsub_pd(ar, dr, _mm256_mul_pd(ai, di));
        __m256d det_i = _mm256_fmadd_pd(ar, di, _mm256_mul_pd(ai, dr));
        det_r = _mm256_sub_pd(det_r, _mm256_fmsub_pd(br, cr, _mm256_mul_pd(bi, ci)));
        det_i = _mm256_sub_pd(det_i, _mm256_fmadd_pd(br, ci, _mm256_mul_pd(bi, cr)));
        const __m256d det2 = _mm256_fmadd_pd(det_r, det_r, _mm256_mul_pd(det_i, det_i));

        const __m256d disc = _mm256_max_pd(_mm256_fmsub_pd(frob, frob, _mm256_mul_pd(four, det2)), zero);
        __m256d s = _mm256_sqrt_pd(_mm256_mul_pd(half, _mm256_add_pd(frob, _mm256_sqrt_pd(disc))));
        if (scale) s = _mm256_mul_pd(s, _mm256_loadu_pd(scale + k));
        _mm256_storeu_pd(out + k, s);
    }
    if (k < m.n) {
        Batch2x2 tail = m;
        for (int e = 0; e < 4; ++e) {
            tail.re[e] += k;
            tail.im[e] += k;
        }
        tail.n = m.n - k;
        scalar_table().sigma_max_2x2(tail, scale ? scale + k : nullptr, out + k);
    }
}

void abs_scaled_avx2(const double* re, const double* im, std::size_t n, const double* scale,
                     double* out) {
    const std::size_t nv = n & ~std::size_t{3};
    std::size_t k = 0;
    for (; k < nv; k += 4) {
        const __m256d r = _mm256_loadu_pd(re + k);
        const __m256d i = _mm256_loadu_pd(im + k);
        __m256d a = _mm256_sqrt_pd(_mm256_fmadd_pd(r, r, _mm256_mul_pd(i, i)));
        if (scale) a = _mm256_mul_pd(a, _mm256_loadu_pd(scale + k));
        _mm256_storeu_pd(out + k, a);
    }
    if (k < n) scalar_table().abs_scaled(re + k, im + k, n - k, scale ? scale + k : nullptr, out + k);
}

// Lanes carry the phases of k, k+1, k+2, k+3 and advance by a fixed rotation;
// phases are recomputed exactly every kResync terms to bound drift.
constexpr std::size_t kResync = 256;

void exp_sum_avx2(const double* zr, const double* zi, std::size_t n, double d_omega,
                  const double* t, std::size_t nt, std::complex<double>* out) {
    const std::size_t nv = n & ~std::size_t{3};
    for (std::size_t i = 0; i < nt; ++i) {
        const double w = d_omega * t[i];
        const __m256d rot_c = _mm256_set1_pd(std::cos(4.0 * w));
        const __m256d rot_s = _mm256_set1_pd(std::sin(4.0 * w));
        __m256d acc_re = _mm256_setzero_pd();
        __m256d acc_im = _mm256_setzero_pd();
        std::size_t k = 0;
        while (k < nv) {
            alignas(32) double pr[4];
            alignas(32) double pi[4];
            for (int l = 0; l < 4; ++l) {
                const double arg = static_cast<double>(k + l) * d_omega * t[i];
                pr[l] = std::cos(arg);
                pi[l] = std::sin(arg);
            }
            __m256d cr = _mm256_load_pd(pr);
            __m256d ci = _mm256_load_pd(pi);
            const std::size_t kend = std::min(nv, k + kResync);
            for (; k < kend; k += 4) {
                const __m256d a = _mm256_loadu_pd(zr + k);
                const __m256d b = _mm256_loadu_pd(zi + k);
                acc_re = _mm256_fmadd_pd(cr, a, acc_re);
                acc_re = _mm256_fnmadd_pd(ci, b, acc_re);
                acc_im = _mm256_fmadd_pd(cr, b, acc_im);
                acc_im = _mm256_fmadd_pd(ci, a, acc_im);
                const __m256d ncr = _mm256_fmsub_pd(cr, rot_c, _mm256_mul_pd(ci, rot_s));
                ci = _mm256_fmadd_pd(cr, rot_s, _mm256_mul_pd(ci, rot_c));
                cr = ncr;
            }
        }
        double re = hsum(acc_re);
        double im = hsum(acc_im);
        for (; k < n; ++k) {
            const double arg = static_cast<double>(k) * d_omega * t[i];
            const double c = std::cos(arg);
            const double s = std::sin(arg);
            re += c * zr[k] - s * zi[k];
            im += c * zi[k] + s * zr[k];
        }
        out[i] = {re, im};
    }
}

constexpr KernelTable kAvx2{&sigma_max_2x2_avx2, &abs_scaled_avx2, &exp_sum_avx2};

}  // namespace

const KernelTable& avx2_table() noexcept { return kAvx2; }

}  // namespace hinfpde::kernels
