#pragma once

// Cantilever Euler-Bernoulli beam driven by a piezo patch on [x1, x2]:
//   (EI + c_kv s) w'''' + (rhoA s^2 + c_v s) w = K_a (delta'(x - x2) - delta'(x - x1)) u
//   y = K_s (w'(x2) - w'(x1)).
// The point forcing is handled by exact jump conditions on w''.

#include "hinfpde/lti.hpp"

#include <vector>

namespace hinfpde {

struct EulerSpec {
    double L = 1.0;
    double EI = 1.0;
    double rhoA = 1.0;
    double c_v = 0.0;
    double c_kv = 0.0;
    double K_a = 1.0;
    double K_s = 1.0;
    double x1 = 0.05;
    double x2 = 0.15;

    void validate() const;
};

struct EulerTf {
    cplx G;
    double rcond = 1.0;
    bool near_pole = false;
};

EulerTf eb_tf_detail(const EulerSpec& spec, cplx s);
inline cplx eb_tf(const EulerSpec& spec, cplx s) { return eb_tf_detail(spec, s).G; }

/// First n positive roots of 1 + cos(x) cosh(x) = 0.
std::vector<double> eb_cantilever_roots(int n);

/// Open-loop poles rhoA s^2 + (c_v + c_kv r^4) s + EI r^4 = 0, one per mode:
/// the root with Im >= 0, or the faster real root when overdamped.
std::vector<cplx> eb_poles(const EulerSpec& spec, int n);

}  // namespace hinfpde
