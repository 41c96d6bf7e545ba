#pragma once

// Cantilever Timoshenko beam with tip shear/bending controls and tip velocity
// outputs, evaluated exactly in the Laplace domain.
//
// Damping enters through complex "stiffness" and "mass" coefficients:
//   shear   k(s) = K + D_w s        bending  e(s) = EI + D_phi s
//   mass    m(s) = rho s^2 + d_w s  inertia  j(s) = I_rho s^2 + d_phi s
// and the Laplace-domain pair reads
//   k (w'' - phi') = m w,    e phi'' = j phi + k (phi - w').
// Eliminating phi gives w'''' = p w'' + q w with
//   p = m/k + j/e,  q = -(m/k)(j + k)/e,
//   phi = (e w''' + (k - e m / k) w') / (j + k).
// Tip rows:  k (w' - phi)(L) + alpha s w(L) = u1,  e phi'(L) + beta s phi(L) = u2.

#include "hinfpde/lti.hpp"

#include <array>

namespace hinfpde {

struct TimoshenkoSpec {
    double L = 1.0;
    double rho = 1.0;
    double Kshear = 1.5;
    double I_rho = 2.0;
    double E = 2.5;
    double I = 3.0;
    double d_w = 0.0;    // viscous, deflection
    double d_phi = 0.0;  // viscous, rotation
    double D_w = 0.0;    // Kelvin-Voigt, shear
    double D_phi = 0.0;  // Kelvin-Voigt, bending
    double alpha = 0.0;  // tip velocity feedback gains
    double beta = 0.0;

    void validate() const;
    bool damped() const { return d_w > 0 || d_phi > 0 || D_w > 0 || D_phi > 0; }
    bool prestabilized() const { return alpha > 0 || beta > 0; }
};

struct TimoshenkoCoefficients {
    cplx shear;    // k(s)
    cplx bending;  // e(s)
    cplx mass;     // m(s)
    cplx inertia;  // j(s)
    cplx p;
    cplx q;
    cplx phi_from_w1;  // coefficient of w' in phi
    cplx phi_from_w3;  // coefficient of w''' in phi
};

/// DomainError when s = 0 or the phi map has a pole (j + k = 0).
TimoshenkoCoefficients timo_coefficients(const TimoshenkoSpec& spec, cplx s);

/// Exponential basis w = e^{lambda x}, phi = psi e^{lambda x}, sorted by
/// (Re, Im). DomainError when two exponents coincide.
struct TimoshenkoBasis {
    std::array<cplx, 4> lambda;
    std::array<cplx, 4> psi;
};
TimoshenkoBasis timo_basis(const TimoshenkoSpec& spec, cplx s);

struct TimoshenkoTf {
    CMatrix G;           // 2x2, u = (u1, u2) -> y = (s w(L), s phi(L))
    double rcond = 1.0;  // reciprocal condition of the equilibrated 4x4 system
    bool near_pole = false;
};

TimoshenkoTf timo_tf_detail(const TimoshenkoSpec& spec, cplx s);
inline CMatrix timo_tf(const TimoshenkoSpec& spec, cplx s) { return timo_tf_detail(spec, s).G; }

}  // namespace hinfpde
