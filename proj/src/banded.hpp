#pragma once

#include "hinfpde/errors.hpp"
#include "lapack.hpp"

#include <algorithm>
#include <complex>
#include <vector>

namespace hinfpde::detail {

/// Complex banded matrix in LAPACK general-band storage with room for the
/// LU fill-in, solved by zgbtrf/zgbtrs with a zgbcon condition estimate.
class BandedSystem {
public:
    BandedSystem(int n, int kl, int ku)
        : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1),
          ab_(static_cast<std::size_t>(ldab_) * n, 0.0) {}

    int size() const { return n_; }

    void set(int i, int j, std::complex<double> v) {
        ab_[static_cast<std::size_t>(kl_ + ku_ + i - j) + static_cast<std::size_t>(j) * ldab_] = v;
    }

    /// Factors in place, then solves for nrhs column-major right-hand sides.
    /// Returns the reciprocal 1-norm condition estimate.
    double solve(std::vector<std::complex<double>>& rhs, int nrhs, std::complex<double> s) {
        double anorm = 0.0;
        for (int j = 0; j < n_; ++j) {
            double sum = 0.0;
            for (int r = 0; r < ldab_; ++r) sum += std::abs(ab_[static_cast<std::size_t>(r + j * ldab_)]);
            anorm = std::max(anorm, sum);
        }
        std::vector<lapack_int> ipiv(static_cast<std::size_t>(n_));
        lapack_int info = LAPACKE_zgbtrf(LAPACK_COL_MAJOR, n_, n_, kl_, ku_, ab_.data(), ldab_, ipiv.data());
        if (info > 0) throw DomainError("singular finite-difference system (s is at a pole)", s);
        if (info < 0) throw NumericError("zgbtrf rejected its arguments");
        double rcond = 0.0;
        info = LAPACKE_zgbcon(LAPACK_COL_MAJOR, '1', n_, kl_, ku_, ab_.data(), ldab_, ipiv.data(), anorm,
                              &rcond);
        if (info != 0) throw NumericError("zgbcon failed");
        if (rcond < 1e-15) throw DomainError("finite-difference system is numerically singular near a pole", s);
        info = LAPACKE_zgbtrs(LAPACK_COL_MAJOR, 'N', n_, kl_, ku_, nrhs, ab_.data(), ldab_, ipiv.data(),
                              rhs.data(), n_);
        if (info != 0) throw NumericError("zgbtrs failed");
        return rcond;
    }

private:
    int n_;
    int kl_;
    int ku_;
    int ldab_;
    std::vector<std::complex<double>> ab_;
};

}  // namespace hinfpde::detail
