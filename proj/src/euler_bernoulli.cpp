#include "hinfpde/euler_bernoulli.hpp"

#include "hinfpde/errors.hpp"

#include <array>
#include <cmath>

namespace hinfpde {

namespace {

constexpr double kNearPoleRcond = 1e-13;

double cantilever_residual(double x) {
    // 1 + cos x cosh x, divided by cosh x to stay O(1)
    return std::cos(x) + 1.0 / std::cosh(x);
}

}  // namespace

void EulerSpec::validate() const {
    if (!(L > 0 && EI > 0 && rhoA > 0 && K_a > 0 && K_s > 0))
        throw ConfigError("Euler-Bernoulli beam needs positive L, EI, rhoA, K_a, K_s");
    if (c_v < 0 || c_kv < 0) throw ConfigError("Euler-Bernoulli damping must be non-negative");
    if (!(0 < x1 && x1 < x2 && x2 < L)) throw ConfigError("patch ends must satisfy 0 < x1 < x2 < L");
}

EulerTf eb_tf_detail(const EulerSpec& spec, cplx s) {
    const cplx e = spec.EI + spec.c_kv * s;
    const cplx m = spec.rhoA * s * s + spec.c_v * s;
    if (std::abs(e) <= 1e-14 * spec.EI) throw DomainError("Kelvin-Voigt stiffness vanishes at this s", s);
    const cplx r = std::pow(-m / e, 0.25);
    if (std::abs(r) <= 1e-12 / spec.L)
        throw DomainError("repeated exponents in the Euler-Bernoulli basis; retry at s*(1+1e-9)", s);

    const std::array<cplx, 4> lam = {r, cplx(0, 1) * r, -r, cplx(0, -1) * r};
    const std::array<double, 4> edges = {0.0, spec.x1, spec.x2, spec.L};

    // basis on segment g: exp(lam_i (x - anchor)), anchored at the end where it is largest
    auto basis = [&](int g, int i, double x) {
        const double anchor = lam[i].real() > 0 ? edges[g + 1] : edges[g];
        return std::exp(lam[i] * (x - anchor));
    };
    const double rmag = std::abs(r);
    auto powr = [&](int i, int d) {
        // lam^d / |r|^d keeps rows of different derivative order comparable
        return std::pow(lam[i] / rmag, d);
    };

    Eigen::Matrix<cplx, 12, 12> M = Eigen::Matrix<cplx, 12, 12>::Zero();
    Eigen::Matrix<cplx, 12, 1> rhs = Eigen::Matrix<cplx, 12, 1>::Zero();
    int row = 0;
    for (int d : {0, 1}) {
        for (int i = 0; i < 4; ++i) M(row, i) = powr(i, d) * basis(0, i, 0.0);
        ++row;
    }
    for (int d : {2, 3}) {
        for (int i = 0; i < 4; ++i) M(row, 8 + i) = powr(i, d) * basis(2, i, spec.L);
        ++row;
    }
    // interfaces: right minus left equals the jump; only w'' jumps
    const cplx jump = spec.K_a / e / (rmag * rmag);
    for (int iface = 0; iface < 2; ++iface) {
        const double x = edges[iface + 1];
        for (int d = 0; d < 4; ++d) {
            for (int i = 0; i < 4; ++i) {
                M(row, 4 * iface + i) = -powr(i, d) * basis(iface, i, x);
                M(row, 4 * (iface + 1) + i) = powr(i, d) * basis(iface + 1, i, x);
            }
            if (d == 2) rhs(row) = iface == 0 ? -jump : jump;
            ++row;
        }
    }

    const Eigen::PartialPivLU<Eigen::Matrix<cplx, 12, 12>> lu(M);
    EulerTf out;
    out.rcond = lu.rcond();
    if (!(out.rcond > 0) || !std::isfinite(out.rcond))
        throw DomainError("singular Euler-Bernoulli interface system (s is a pole)", s);
    out.near_pole = out.rcond < kNearPoleRcond;
    const Eigen::Matrix<cplx, 12, 1> A = lu.solve(rhs);

    cplx dw = 0.0;
    for (int i = 0; i < 4; ++i)
        dw += A(4 + i) * lam[i] * (basis(1, i, spec.x2) - basis(1, i, spec.x1));
    out.G = spec.K_s * dw;
    return out;
}

std::vector<double> eb_cantilever_roots(int n) {
    if (n < 1) throw ConfigError("eb_cantilever_roots needs n >= 1");
    std::vector<double> roots;
    roots.reserve(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) {
        // exactly one sign change of cos x + sech x on [(k-1) pi, k pi]
        double lo = (k - 1) * M_PI;
        double hi = k * M_PI;
        double flo = cantilever_residual(lo);
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = cantilever_residual(mid);
            if ((fm > 0) == (flo > 0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        roots.push_back(0.5 * (lo + hi));
    }
    return roots;
}

std::vector<cplx> eb_poles(const EulerSpec& spec, int n) {
    spec.validate();
    std::vector<cplx> poles;
    for (double rl : eb_cantilever_roots(n)) {
        const double r4 = std::pow(rl / spec.L, 4);
        const double a = spec.rhoA;
        const double b = spec.c_v + spec.c_kv * r4;
        const double c = spec.EI * r4;
        const double disc = b * b - 4 * a * c;
        if (disc < 0) {
            poles.emplace_back(-b / (2 * a), std::sqrt(-disc) / (2 * a));
        } else {
            poles.emplace_back((-b - std::sqrt(disc)) / (2 * a), 0.0);
        }
    }
    return poles;
}

}  // namespace hinfpde
