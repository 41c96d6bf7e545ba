#include "hinfpde/timoshenko.hpp"

#include "hinfpde/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hinfpde {

namespace {
constexpr double kNearPoleRcond = 1e-13;
constexpr double kDegenerateTol = 1e-12;
}  // namespace

void TimoshenkoSpec::validate() const {
    if (!(L > 0 && rho > 0 && Kshear > 0 && I_rho > 0 && E > 0 && I > 0))
        throw ConfigError("Timoshenko beam needs positive L, rho, K, I_rho, E, I");
    if (d_w < 0 || d_phi < 0 || D_w < 0 || D_phi < 0 || alpha < 0 || beta < 0)
        throw ConfigError("Timoshenko damping and pre-stabilizer gains must be non-negative");
}

TimoshenkoCoefficients timo_coefficients(const TimoshenkoSpec& spec, cplx s) {
    if (s == cplx(0.0, 0.0)) throw DomainError("Timoshenko transfer function is not evaluated at s = 0", s);
    TimoshenkoCoefficients c;
    c.shear = spec.Kshear + spec.D_w * s;
    c.bending = spec.E * spec.I + spec.D_phi * s;
    c.mass = spec.rho * s * s + spec.d_w * s;
    c.inertia = spec.I_rho * s * s + spec.d_phi * s;
    if (c.shear == 0.0 || c.bending == 0.0)
        throw DomainError("Kelvin-Voigt stiffness vanishes at this s", s);
    const cplx jk = c.inertia + c.shear;
    if (std::abs(jk) <= 1e-14 * (std::abs(c.inertia) + std::abs(c.shear)))
        throw DomainError("rotation map has a pole (I_rho s^2 + d_phi s + k = 0)", s);
    const cplx m_over_k = c.mass / c.shear;
    c.p = m_over_k + c.inertia / c.bending;
    c.q = -m_over_k * jk / c.bending;
    c.phi_from_w1 = (c.shear - c.bending * m_over_k) / jk;
    c.phi_from_w3 = c.bending / jk;
    return c;
}

TimoshenkoBasis timo_basis(const TimoshenkoSpec& spec, cplx s) {
    const TimoshenkoCoefficients c = timo_coefficients(spec, s);
    const cplx disc = std::sqrt(c.p * c.p + 4.0 * c.q);
    const cplx mu1 = 0.5 * (c.p + disc);
    const cplx mu2 = 0.5 * (c.p - disc);
    const double scale = std::abs(c.p) + std::sqrt(std::abs(c.q));
    if (std::abs(disc) <= kDegenerateTol * scale || std::abs(mu1) <= kDegenerateTol * scale ||
        std::abs(mu2) <= kDegenerateTol * scale)
        throw DomainError("repeated exponents in the Timoshenko basis; retry at s*(1+1e-9)", s);
    const cplx r1 = std::sqrt(mu1);
    const cplx r2 = std::sqrt(mu2);
    TimoshenkoBasis b;
    b.lambda = {r1, -r1, r2, -r2};
    std::sort(b.lambda.begin(), b.lambda.end(), [](cplx x, cplx y) {
        return x.real() < y.real() || (x.real() == y.real() && x.imag() < y.imag());
    });
    for (int i = 0; i < 4; ++i) {
        const cplx l = b.lambda[i];
        b.psi[i] = c.phi_from_w3 * l * l * l + c.phi_from_w1 * l;
    }
    return b;
}

TimoshenkoTf timo_tf_detail(const TimoshenkoSpec& spec, cplx s) {
    const TimoshenkoCoefficients c = timo_coefficients(spec, s);
    const TimoshenkoBasis b = timo_basis(spec, s);
    const double L = spec.L;

    // Scaled basis: exponentials growing to the right are anchored at x = L.
    std::array<cplx, 4> e0{};
    std::array<cplx, 4> eL{};
    for (int i = 0; i < 4; ++i) {
        const cplx l = b.lambda[i];
        if (l.real() > 0) {
            e0[i] = std::exp(-l * L);
            eL[i] = 1.0;
        } else {
            e0[i] = 1.0;
            eL[i] = std::exp(l * L);
        }
    }

    Eigen::Matrix4cd M;
    for (int i = 0; i < 4; ++i) {
        const cplx l = b.lambda[i];
        const cplx psi = b.psi[i];
        M(0, i) = e0[i];
        M(1, i) = psi * e0[i];
        M(2, i) = eL[i] * (c.shear * (l - psi) + spec.alpha * s);
        M(3, i) = eL[i] * psi * (c.bending * l + spec.beta * s);
    }
    // row equilibration; the right-hand side rows are scaled accordingly
    Eigen::Vector4d rs;
    for (int r = 0; r < 4; ++r) {
        rs[r] = M.row(r).cwiseAbs().maxCoeff();
        if (!(rs[r] > 0)) throw DomainError("degenerate Timoshenko boundary system", s);
        M.row(r) /= rs[r];
    }
    Eigen::Matrix<cplx, 4, 2> rhs = Eigen::Matrix<cplx, 4, 2>::Zero();
    rhs(2, 0) = 1.0 / rs[2];
    rhs(3, 1) = 1.0 / rs[3];

    const Eigen::PartialPivLU<Eigen::Matrix4cd> lu(M);
    TimoshenkoTf out;
    out.rcond = lu.rcond();
    if (!(out.rcond > 0) || !std::isfinite(out.rcond))
        throw DomainError("singular Timoshenko boundary system (s is a pole)", s);
    out.near_pole = out.rcond < kNearPoleRcond;
    const Eigen::Matrix<cplx, 4, 2> A = lu.solve(rhs);

    out.G = CMatrix::Zero(2, 2);
    for (int col = 0; col < 2; ++col) {
        cplx wL = 0.0;
        cplx phiL = 0.0;
        for (int i = 0; i < 4; ++i) {
            wL += A(i, col) * eL[i];
            phiL += A(i, col) * b.psi[i] * eL[i];
        }
        out.G(0, col) = s * wL;
        out.G(1, col) = s * phiL;
    }
    return out;
}

}  // namespace hinfpde
