#include "hinfpde/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace hinfpde::kernels {
namespace {

void sigma_max_2x2_scalar(const Batch2x2& m, const double* scale, double* out) {
    for (std::size_t k = 0; k < m.n; ++k) {
        const std::complex<double> a(m.re[0][k], m.im[0][k]);
        const std::complex<double> b(m.re[1][k], m.im[1][k]);
        const std::complex<double> c(m.re[2][k], m.im[2][k]);
        const std::complex<double> d(m.re[3][k], m.im[3][k]);
        const double frob = std::norm(a) + std::norm(b) + std::norm(c) + std::norm(d);
        const double det2 = std::norm(a * d - b * c);
        const double disc = std::max(frob * frob - 4.0 * det2, 0.0);
        const double s = std::sqrt(0.5 * (frob + std::sqrt(disc)));
        out[k] = scale ? scale[k] * s : s;
    }
}

void abs_scaled_scalar(const double* re, const double* im, std::size_t n,
                       const double* scale, double* out) {
    for (std::size_t k = 0; k < n; ++k) {
        const double a = std::hypot(re[k], im[k]);
        out[k] = scale ? scale[k] * a : a;
    }
}

void exp_sum_scalar(const double* zr, const double* zi, std::size_t n, double d_omega,
                    const double* t, std::size_t nt, std::complex<double>* out) {
    for (std::size_t i = 0; i < nt; ++i) {
        double acc_re = 0.0;
        double acc_im = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double arg = static_cast<double>(k) * d_omega * t[i];
            const double c = std::cos(arg);
            const double s = std::sin(arg);
            acc_re += c * zr[k] - s * zi[k];
            acc_im += c * zi[k] + s * zr[k];
        }
        out[i] = {acc_re, acc_im};
    }
}

constexpr KernelTable kScalar{&sigma_max_2x2_scalar, &abs_scaled_scalar, &exp_sum_scalar};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

}  // namespace hinfpde::kernels
