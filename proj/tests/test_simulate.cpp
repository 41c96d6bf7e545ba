#include "doctest.h"

#include "hinfpde/errors.hpp"
#include "hinfpde/plant.hpp"
#include "hinfpde/simulate.hpp"

#include <cmath>

using namespace hinfpde;

namespace {

double max_error(const std::vector<double>& t, const std::vector<double>& y, double (*exact)(double)) {
    double e = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) e = std::max(e, std::abs(y[i] - exact(t[i])));
    return e;
}

double lag_step(double t) { return 1.0 - std::exp(-t); }
double unit(double) { return 1.0; }
// 1/(s (s^2 + 0.6 s + 4)), scaled by 4
double underdamped(double t) {
    const double z = 0.15, wn = 2.0, wd = wn * std::sqrt(1 - z * z);
    return 1.0 - std::exp(-z * wn * t) * (std::cos(wd * t) + z / std::sqrt(1 - z * z) * std::sin(wd * t));
}

BromwichOptions opts(double a, double wmax, int n) {
    BromwichOptions o;
    o.a = a;
    o.omega_max = wmax;
    o.nodes = n;
    return o;
}

}  // namespace

TEST_CASE("analytic inversions") {
    const std::vector<double> t = time_grid(10.0, 201);
    SUBCASE("first-order lag step") {
        const auto r = bromwich_invert([](cplx s) { return 1.0 / (s * (s + 1.0)); }, opts(0.2, 200, 4000), t);
        CHECK(max_error(t, r.y, lag_step) <= 1e-3);
        CHECK(r.imag_residue <= 1e-6);
    }
    SUBCASE("unit step") {
        const auto r = bromwich_invert([](cplx s) { return 1.0 / s; }, opts(0.2, 200, 4000), t);
        std::vector<double> tail(t.begin() + 1, t.end()), ytail(r.y.begin() + 1, r.y.end());
        CHECK(max_error(tail, ytail, unit) <= 1e-3);
    }
    SUBCASE("second-order underdamped") {
        const auto r =
            bromwich_invert([](cplx s) { return 4.0 / (s * (s * s + 0.6 * s + 4.0)); }, opts(0.2, 200, 8000), t);
        CHECK(max_error(t, r.y, underdamped) <= 1e-3);
    }
    SUBCASE("node doubling at least halves the error") {
        BromwichOptions o = opts(0.2, 200, 500);
        o.subtract_asymptote = false;
        auto F = [](cplx s) { return 1.0 / (s * (s + 1.0)); };
        const double e1 = max_error(t, bromwich_invert(F, o, t).y, lag_step);
        o.nodes = 1000;
        const double e2 = max_error(t, bromwich_invert(F, o, t).y, lag_step);
        CHECK(e2 <= 0.5 * e1);
    }
    SUBCASE("contour shift invariance") {
        auto F = [](cplx s) { return 4.0 / (s * (s * s + 0.6 * s + 4.0)); };
        const auto a = bromwich_invert(F, opts(0.1, 200, 8000), t);
        const auto b = bromwich_invert(F, opts(0.2, 200, 8000), t);
        double d = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) d = std::max(d, std::abs(a.y[i] - b.y[i]));
        CHECK(d <= 2e-3);
    }
    SUBCASE("slow decay is reported") {
        BromwichOptions o = opts(0.2, 5, 400);
        o.subtract_asymptote = false;
        CHECK_THROWS_AS(bromwich_invert([](cplx s) { return 1.0 / (s + 0.5); }, o, t), NumericError);
    }
}

TEST_CASE("response metrics") {
    const std::vector<double> t = time_grid(20.0, 20001);
    SUBCASE("first-order lag") {
        std::vector<double> y;
        for (double x : t) y.push_back(lag_step(x));
        const ResponseMetrics m = response_metrics(t, y, 1.0);
        CHECK(m.rise_10_90 == doctest::Approx(std::log(9.0)).epsilon(1e-3));
        CHECK(m.overshoot == 0.0);
        CHECK(m.settled);
    }
    SUBCASE("constant") {
        const std::vector<double> y(t.size(), 1.0);
        const ResponseMetrics m = response_metrics(t, y);
        CHECK(m.rise_10_90 == 0.0);
        CHECK(m.settling_2pct == 0.0);
    }
    SUBCASE("damped oscillation") {
        std::vector<double> y;
        double peak = 0.0;
        for (double x : t) {
            y.push_back(1.0 - std::exp(-x) * std::cos(x));
            peak = std::max(peak, y.back());
        }
        const ResponseMetrics m = response_metrics(t, y, 1.0);
        CHECK(m.overshoot > 0.0);
        CHECK(m.overshoot == doctest::Approx(peak - 1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(time_grid(0.0, 10), ConfigError);
    CHECK_THROWS_AS(time_grid(10.0, 0), ConfigError);
}

TEST_CASE("closed-loop step of the prestabilized beam") {
    TimoshenkoSpec sp;
    sp.alpha = sp.beta = 0.1;
    const PlantFn G = timoshenko_plant(sp);
    const std::vector<double> t = time_grid(10.0, 101);
    SUBCASE("K = 0 gives a zero response, matching the zero static gain of T") {
        const StepResponse r = closed_loop_step(G, [](cplx) { return CMatrix::Zero(2, 2).eval(); }, t);
        REQUIRE(r.channels.size() == 4);
        for (const auto& y : r.y)
            for (double v : y) CHECK(std::abs(v) < 1e-12);
    }
    SUBCASE("final value matches T near s = 0") {
        // static output feedback through a lag; T(0+) is evaluated directly
        auto K = [](cplx s) { return CMatrix(CMatrix::Identity(2, 2) * (2.0 / (s + 1.0))); };
        const std::vector<double> tl = time_grid(60.0, 121);
        BromwichOptions o;
        o.a = 0.1;
        o.nodes = 20000;
        const StepResponse r = closed_loop_step(G, K, tl, o);
        const cplx s0(1e-6, 0.0);
        const CMatrix L = G(s0) * K(s0);
        const CMatrix T0 = L * (CMatrix::Identity(2, 2) + L).inverse();
        for (std::size_t c = 0; c < r.channels.size(); ++c) {
            const auto [i, j] = r.channels[c];
            CHECK(std::abs(r.y[c].back() - T0(j, i).real()) <= 2e-2);
        }
    }
}
