#include "doctest.h"

#include "hinfpde/controller_io.hpp"
#include "hinfpde/errors.hpp"
#include "hinfpde/lti.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>

using namespace hinfpde;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ControllerParams random_controller(const ControllerStructure& st, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    ControllerParams x(st);
    Eigen::VectorXd v(static_cast<Eigen::Index>(x.param_count()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = n(rng);
    x.unpack(v);
    return x;
}

cplx polyval(const std::vector<double>& p, cplx s) {
    cplx v = 0.0;
    for (double c : p) v = v * s + c;
    return v;
}

}  // namespace

TEST_CASE("weight evaluation") {
    const FirstOrderWeight W1{0.05, 0.9987, 0.0009987};
    CHECK(std::abs(weight_eval(W1, 0.0) - 1000.0) < 1e-9);
    CHECK(weight_eval(FirstOrderWeight{0.0, 0.0, 1.0}, cplx(3, 4)) == cplx(0.0));
    const FirstOrderWeight W2{1000, 2, 2000};
    CHECK(std::abs(std::abs(weight_eval(W2, cplx(0, 1e6))) - 1000.0) < 5.0);
    CHECK_THROWS_AS(weight_eval(W2, cplx(-2000, 0)), DomainError);
    CHECK_THROWS_AS(FirstOrderWeight({1, 1, 0}).validate(), ConfigError);
}

TEST_CASE("controller response") {
    SUBCASE("zero b and c give the zero matrix") {
        ControllerStructure st{3, 2, 2, 1e-3, true};
        ControllerParams x(st);
        x.a_diag.setConstant(-1.0);
        CHECK(controller_response(x, cplx(0.4, 2.0)).norm() == 0.0);
    }
    SUBCASE("scalar lag") {
        ControllerParams x(ControllerStructure{1, 1, 1, 1e-3, false});
        x.a_diag << -1.0;
        x.b << 1.0;
        x.c << 1.0;
        CHECK(std::abs(controller_response(x, cplx(0, 1))(0, 0) - 1.0 / cplx(1, 1)) < 1e-15);
    }
    SUBCASE("pseudo-integrator factor") {
        ControllerParams x(ControllerStructure{1, 1, 1, 0.01, true});
        x.a_diag << -2.0;
        x.b << 1.0;
        x.c << 3.0;
        const cplx s(0.1, 0.7);
        CHECK(std::abs(controller_response(x, s)(0, 0) - 3.0 / ((s + 2.0) * (s + 0.01))) < 1e-14);
        CHECK_THROWS_AS(controller_response(x, cplx(-0.01, 0)), DomainError);
    }
    SUBCASE("reference fifth-order controller at s = 0") {
        const std::vector<double> num{-0.0144, -0.3585, -54.58, -9.669, -173.8};
        const std::vector<double> den{1, 16.9, 106.1, 108.1, 539.7, 3.678};
        const ControllerParams x = realize_transfer_function(num, den);
        CHECK(std::abs(controller_response(x, 0.0)(0, 0) - (-173.8 / 3.678)) < 1e-8);
        for (cplx s : {cplx(0, 0.3), cplx(0, 4.0), cplx(0.2, 25.0), cplx(0, 300.0)}) {
            const cplx ref = polyval(num, s) / polyval(den, s);
            CHECK(std::abs(controller_response(x, s)(0, 0) - ref) <= 1e-9 * std::abs(ref));
        }
    }
    SUBCASE("conjugate symmetry") {
        std::mt19937_64 rng(7);
        const ControllerParams x = random_controller(ControllerStructure{6, 2, 2, 1e-3, true}, rng);
        for (cplx s : {cplx(0.3, 1.7), cplx(0, 40.0)}) {
            const CMatrix a = controller_response(x, s);
            const CMatrix b = controller_response(x, std::conj(s));
            CHECK((a.conjugate() - b).norm() <= 1e-13 * a.norm());
        }
    }
    SUBCASE("singular resolvent names s") {
        ControllerParams x(ControllerStructure{1, 1, 1, 1e-3, false});
        x.a_diag << -1.0;
        x.b << 1.0;
        x.c << 1.0;
        try {
            controller_response(x, cplx(-1.0, 0.0));
            FAIL("expected DomainError");
        } catch (const DomainError& e) {
            CHECK(e.where() == cplx(-1.0, 0.0));
        }
    }
}

TEST_CASE("parameter count") {
    CHECK(ControllerParams::param_count(ControllerStructure{8, 2, 2, 1e-3, true}) == 54);
    std::mt19937_64 rng(3);
    const ControllerParams x = random_controller(ControllerStructure{8, 2, 2, 1e-3, true}, rng);
    CHECK(ControllerParams::from_vector(x.structure, x.pack()) == x);
}

TEST_CASE("spectral radius and damping") {
    ControllerParams one(ControllerStructure{1, 1, 1, 1e-3, false});
    one.a_diag << -1.0;
    CHECK(spectral_radius(one) == doctest::Approx(1.0));
    CHECK(min_damping(one) == doctest::Approx(1.0));
    one.a_diag << 1.0;
    CHECK(min_damping(one) == doctest::Approx(-1.0));

    ControllerParams two(ControllerStructure{2, 1, 1, 1e-3, false});
    two.a_diag << -3.0, -3.0;
    two.a_super << 4.0;
    two.a_sub << -4.0;
    CHECK(spectral_radius(two) == doctest::Approx(5.0));
    two.a_diag << -1.0, -1.0;
    two.a_super << 1.0;
    two.a_sub << -1.0;
    CHECK(min_damping(two) == doctest::Approx(1.0 / std::sqrt(2.0)));

    ControllerParams zero(ControllerStructure{3, 1, 1, 1e-3, false});
    CHECK(spectral_radius(zero) == 0.0);
    CHECK(min_damping(zero) == 0.0);

    SUBCASE("dense eigensolve oracle") {
        std::mt19937_64 rng(11);
        for (int n = 1; n <= 12; ++n) {
            const ControllerParams x = random_controller(ControllerStructure{n, 1, 1, 1e-3, true}, rng);
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
            for (int i = 0; i < n; ++i) A(i, i) = x.a_diag[i];
            for (int i = 0; i + 1 < n; ++i) {
                A(i + 1, i) = x.a_sub[i];
                A(i, i + 1) = x.a_super[i];
            }
            const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(A).eigenvalues();
            double rho = 0.0, zeta = kInf;
            for (Eigen::Index i = 0; i < ev.size(); ++i) {
                rho = std::max(rho, std::abs(ev[i]));
                zeta = std::min(zeta, -ev[i].real() / std::abs(ev[i]));
            }
            CHECK(spectral_radius(x) == doctest::Approx(rho).epsilon(1e-10));
            CHECK(min_damping(x) == doctest::Approx(zeta).epsilon(1e-8));
        }
    }
}

TEST_CASE("closed-loop maps") {
    const std::vector<double> omega{0.1, 1.0, 10.0};
    SUBCASE("K = 0 gives S = I and T = 0") {
        SampledResponse G = sample_response(omega, [](cplx s) {
            CMatrix m(2, 2);
            m << 1.0 / (s + 1.0), 0.5, cplx(0.2, 0.1), 1.0 / (s + 3.0);
            return m;
        });
        const ClosedLoopMaps cl = closed_loop_maps(G, [](cplx) { return CMatrix::Zero(2, 2).eval(); });
        for (std::size_t k = 0; k < omega.size(); ++k) {
            CHECK((cl.S.at(k) - CMatrix::Identity(2, 2)).norm() == 0.0);
            CHECK(cl.T.at(k).norm() == 0.0);
        }
    }
    SUBCASE("scalar G = K = 1") {
        SampledResponse G = sample_response(omega, [](cplx) { return CMatrix::Ones(1, 1).eval(); });
        const ClosedLoopMaps cl = closed_loop_maps(G, [](cplx) { return CMatrix::Ones(1, 1).eval(); });
        CHECK(std::abs(cl.S.at(1)(0, 0) - 0.5) < 1e-15);
        CHECK(std::abs(cl.T.at(1)(0, 0) - 0.5) < 1e-15);
    }
    SUBCASE("S + T = I on a random loop") {
        std::mt19937_64 rng(5);
        const ControllerParams x = random_controller(ControllerStructure{4, 2, 2, 1e-3, true}, rng);
        std::vector<double> w;
        for (int i = 0; i < 200; ++i) w.push_back(std::pow(10.0, -2.0 + 4.0 * i / 199.0));
        SampledResponse G = sample_response(w, [](cplx s) {
            CMatrix m(2, 2);
            m << 1.0 / (s * s + 0.1 * s + 1.0), 0.3 / (s + 2.0), cplx(0.1), 2.0 / (s + 0.5);
            return m;
        });
        const ClosedLoopMaps cl = closed_loop_maps(G, [&](cplx s) { return controller_response(x, s); });
        double worst = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k)
            worst = std::max(worst, (cl.S.at(k) + cl.T.at(k) - CMatrix::Identity(2, 2)).norm());
        CHECK(worst <= 1e-12);
    }
    SUBCASE("singular I + GK names the frequency") {
        SampledResponse G = sample_response(omega, [](cplx) { return CMatrix::Ones(1, 1).eval(); });
        CHECK_THROWS_AS(closed_loop_maps(G, [](cplx) { return CMatrix::Constant(1, 1, -1.0).eval(); }),
                        MarginalStabilityError);
    }
}

TEST_CASE("sampled H-infinity norm") {
    const std::vector<double> omega{0.1, 1.0, 10.0, 100.0};
    const SampledResponse I2 = sample_response(omega, [](cplx) { return CMatrix::Identity(2, 2).eval(); });
    CHECK(sampled_hinf_norm(I2, std::nullopt, 0.0, kInf) == doctest::Approx(1.0));
    const SampledResponse Z = sample_response(omega, [](cplx) { return CMatrix::Zero(2, 2).eval(); });
    CHECK(sampled_hinf_norm(Z, std::nullopt, 0.0, kInf) == 0.0);
    const SampledResponse two = sample_response(omega, [](cplx) { return CMatrix::Constant(1, 1, 2.0).eval(); });
    CHECK(sampled_hinf_norm(two, FirstOrderWeight::constant(3.0), 0.0, kInf) == doctest::Approx(6.0));
    CHECK_THROWS_AS(sampled_hinf_norm(two, std::nullopt, 1000.0, 2000.0), ConfigError);

    SUBCASE("monotone in the band") {
        const SampledResponse M = sample_response(omega, [](cplx s) {
            CMatrix m(2, 2);
            m << 1.0 / (s + 1.0), s / (s + 5.0), cplx(0.0), cplx(0.3);
            return m;
        });
        const double narrow = sampled_hinf_norm(M, FirstOrderWeight{0.05, 1.0, 0.001}, 0.5, 20.0);
        const double wide = sampled_hinf_norm(M, FirstOrderWeight{0.05, 1.0, 0.001}, 0.05, 200.0);
        CHECK(narrow <= wide);
    }
}
