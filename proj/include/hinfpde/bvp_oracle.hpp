#pragma once

// Finite-difference solvers for the Laplace-domain boundary value problems at
// a fixed complex s. Independent of the exponential-basis plant code.

#include "hinfpde/euler_bernoulli.hpp"
#include "hinfpde/timoshenko.hpp"

namespace hinfpde {

struct FDMesh {
    int n = 1024;  // interior nodes; h = L / (n + 1)

    void validate() const;
    double h(double L) const { return L / (n + 1); }
};

struct FDSolution2 {
    cplx y1;
    cplx y2;
    double rcond = 1.0;
};

struct FDSolution1 {
    cplx y;
    double rcond = 1.0;
};

/// Second-order central differences, one-sided second-order tip rows.
/// Returns y = (s w(L), s phi(L)). DomainError near a pole.
FDSolution2 solve_timoshenko_bvp(const TimoshenkoSpec& spec, cplx s, cplx u1, cplx u2,
                                 const FDMesh& mesh);

/// Full 2x2 response, one column per unit input.
CMatrix fd_timoshenko_tf(const TimoshenkoSpec& spec, cplx s, const FDMesh& mesh);

/// Five-point fourth difference with ghost nodes and a Gaussian-mollified
/// delta' forcing of width sigma. ConfigError when sigma < 2h.
FDSolution1 solve_eb_bvp(const EulerSpec& spec, cplx s, cplx u, const FDMesh& mesh, double sigma);

}  // namespace hinfpde
