#include "doctest.h"

#include "hinfpde/controller_io.hpp"
#include "hinfpde/errors.hpp"
#include "hinfpde/freq_grid.hpp"
#include "hinfpde/nyquist.hpp"
#include "hinfpde/plant.hpp"

#include <cmath>
#include <numbers>

using namespace hinfpde;

namespace {

FrequencyGrid timoshenko_D() {
    return build_grid({{1e-8, 1.0, 300, Spacing::Linear}, {1.0, 15.0, 500, Spacing::Linear},
                       {15.0, 1e3, 100, Spacing::Linear}},
                      GridRole::D);
}

FrequencyGrid eb_D() {
    return build_grid({{0.1, 1.0, 250, Spacing::Linear}, {1.0, 6.0, 200, Spacing::Linear},
                       {6.0, 1e3, 500, Spacing::Linear}},
                      GridRole::D);
}

TimoshenkoSpec prestabilized() {
    TimoshenkoSpec sp;
    sp.alpha = sp.beta = 0.1;
    return sp;
}

EulerSpec eb_viscous() {
    EulerSpec sp;
    sp.c_v = 0.5079;
    return sp;
}

ControllerParams reference_controller() {
    return realize_transfer_function({-0.0144, -0.3585, -54.58, -9.669, -173.8},
                                     {1, 16.9, 106.1, 108.1, 539.7, 3.678});
}

std::vector<double> logspace(double lo, double hi, int n) {
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, double(i) / (n - 1));
    return w;
}

std::vector<double> doubled(const std::vector<double>& w) {
    std::vector<double> out;
    for (std::size_t i = 0; i < w.size(); ++i) {
        out.push_back(w[i]);
        if (i + 1 < w.size()) out.push_back(0.5 * (w[i] + w[i + 1]));
    }
    return out;
}

}  // namespace

TEST_CASE("grid construction") {
    SUBCASE("Timoshenko disk-margin grid") {
        const FrequencyGrid g = timoshenko_D();
        CHECK(g.nodes.size() == 898);  // the shared edges 1 and 15 are merged
        CHECK(g.nodes.front() == 1e-8);
        CHECK(g.nodes.back() == 1e3);
        for (std::size_t i = 1; i < g.nodes.size(); ++i) REQUIRE(g.nodes[i] > g.nodes[i - 1]);
    }
    SUBCASE("two-node band") {
        const FrequencyGrid g = build_grid({{1.0, 10.0, 2, Spacing::Linear}});
        CHECK(g.nodes == std::vector<double>{1.0, 10.0});
    }
    SUBCASE("Euler-Bernoulli disk-margin grid") { CHECK(eb_D().nodes.size() == 948); }
    SUBCASE("log spacing hits both edges") {
        const FrequencyGrid g = build_grid({{1e-3, 1e2, 1000, Spacing::Log}});
        CHECK(g.nodes.size() == 1000);
        CHECK(g.nodes.front() == doctest::Approx(1e-3));
        CHECK(g.nodes.back() == doctest::Approx(1e2));
    }
    SUBCASE("invalid bands") {
        CHECK_THROWS_AS(build_grid({{1.0, 5.0, 10, Spacing::Linear}, {4.0, 8.0, 10, Spacing::Linear}}), ConfigError);
        CHECK_THROWS_AS(build_grid({{1.0, 5.0, 1, Spacing::Linear}}), ConfigError);
        CHECK_THROWS_AS(build_grid({{0.0, 5.0, 10, Spacing::Log}}), ConfigError);
    }
    SUBCASE("deterministic and serializable") {
        const FrequencyGrid a = timoshenko_D();
        CHECK(a == timoshenko_D());
        nlohmann::json j = a;
        CHECK(j.get<FrequencyGrid>() == a);
    }
}

TEST_CASE("sampling certificate") {
    SUBCASE("constant far from the origin") {
        const std::vector<double> w{1.0, 2.0, 3.0};
        const std::vector<cplx> f(3, cplx(10.0));
        CHECK(certify_sampling(w, f, FirstOrderBound{{0.1, 0.1}}).ok);
    }
    SUBCASE("zero at both ends of an interval") {
        const std::vector<double> w{1.0, 2.0, 3.0};
        const std::vector<cplx> f{cplx(1.0), cplx(0.0), cplx(0.0)};
        const CertifyResult r = certify_sampling(w, f, FirstOrderBound{{0.5, 0.5}});
        CHECK_FALSE(r.ok);
        CHECK(r.violations == std::vector<std::size_t>{1});
    }
    SUBCASE("1 + j w on [0.9, 1.1]") {
        const std::vector<double> w{0.9, 1.1};
        const std::vector<cplx> f{cplx(1, 0.9), cplx(1, 1.1)};
        CHECK(std::abs(f[0]) + std::abs(f[1]) == doctest::Approx(2.8320).epsilon(1e-3));
        CHECK(certify_sampling(w, f, FirstOrderBound{{1.0}}).ok);
    }
    SUBCASE("inserting a node into a passing interval keeps it passing") {
        const std::vector<double> w{0.9, 1.0, 1.1};
        const std::vector<cplx> f{cplx(1, 0.9), cplx(1, 1.0), cplx(1, 1.1)};
        CHECK(certify_sampling(w, f, FirstOrderBound{{1.0, 1.0}}).ok);
    }
}

TEST_CASE("certificate-driven refinement") {
    const ScalarEvaluator lag = [](const std::vector<double>& w) {
        std::vector<cplx> f;
        for (double x : w) f.push_back(1.0 + 1.0 / cplx(1.0, x));
        return f;
    };
    SUBCASE("certified grid is returned unchanged") {
        const FrequencyGrid g = build_grid({{0.1, 10.0, 50, Spacing::Log}});
        const RefineResult r = refine_until_certified(lag, g, 1000);
        CHECK(r.certified);
        CHECK(r.grid.nodes == g.nodes);
    }
    SUBCASE("Timoshenko return difference is certified within 20 rounds") {
        const PlantSampler G(timoshenko_plant(prestabilized()), timoshenko_D().nodes);
        // a proportional-plus-lag loop that brings det(I + GK) close to the origin
        auto K = [](cplx s) { return CMatrix(CMatrix::Identity(2, 2) * (3.0 / (s + 1.0))); };
        const ScalarEvaluator f = [&](const std::vector<double>& w) { return return_difference(G, K, w); };
        const FrequencyGrid coarse = build_grid({{1e-3, 1.0, 20, Spacing::Linear}, {1.0, 15.0, 40, Spacing::Linear},
                                                 {15.0, 1e3, 30, Spacing::Linear}});
        const RefineResult r = refine_until_certified(f, coarse, 100000);
        CHECK(r.certified);
        CHECK(r.rounds <= 20);
        CHECK(r.grid.nodes.size() >= coarse.nodes.size());
        for (double w : coarse.nodes) CHECK(std::binary_search(r.grid.nodes.begin(), r.grid.nodes.end(), w));
    }
    SUBCASE("exhausted budget is flagged") {
        const ScalarEvaluator through_origin = [](const std::vector<double>& w) {
            std::vector<cplx> f;
            for (double x : w) f.push_back(cplx(x - 1.0, 0.0) + cplx(0.0, 1e-3));
            return f;
        };
        const FrequencyGrid g = build_grid({{0.5, 1.5, 3, Spacing::Linear}});
        const RefineResult r = refine_until_certified(through_origin, g, g.nodes.size());
        CHECK(r.budget_exhausted);
        CHECK_FALSE(r.certified);
    }
}

TEST_CASE("winding number") {
    const std::vector<double> w = logspace(1e-3, 1e3, 4000);
    SUBCASE("constant") {
        CHECK(winding_number(w, std::vector<cplx>(w.size(), cplx(1.2))) == 0);
        // a locus that never returns near 1 has no roll-off to justify the closing segment
        CHECK_THROWS_AS(winding_number(w, std::vector<cplx>(w.size(), cplx(2.0))), ConfigError);
    }
    SUBCASE("one unstable open-loop pole") {
        std::vector<cplx> f;
        for (double x : w) f.push_back(cplx(1.0, x) / cplx(-1.0, x));
        const WindingDetail d = winding_detail(w, f);
        CHECK(d.winding == 1);
        CHECK(std::abs(d.total_phase - 2 * std::numbers::pi) < 1e-6 * 2 * std::numbers::pi);
    }
    SUBCASE("circle away from the origin") {
        std::vector<cplx> f;
        for (double x : w) f.push_back(1.0 + 1.0 / cplx(1.0, x));
        CHECK(winding_number(w, f) == 0);
    }
    SUBCASE("winding equals the open-loop unstable pole count for a stable closed loop") {
        // G = (s+3)/((s-1)(s-2)), K = 10: closed loop s^2 + 7 s + 32 is stable
        std::vector<cplx> f;
        for (double x : w) {
            const cplx s(0.0, x);
            f.push_back(1.0 + 10.0 * (s + 3.0) / ((s - 1.0) * (s - 2.0)));
        }
        CHECK(winding_number(w, f) == 2);
    }
    SUBCASE("error paths") {
        std::vector<cplx> f(w.size(), cplx(1.0));
        f[10] = 0.0;
        CHECK_THROWS_AS(winding_number(w, f), MarginalStabilityError);
        const std::vector<double> coarse{0.1, 1.0, 10.0, 100.0};
        std::vector<cplx> spin;
        for (double x : coarse) spin.push_back(std::polar(1.0, 2.0 * x));
        spin.back() = 1.0;
        CHECK_THROWS_AS(winding_number(coarse, spin), UndersamplingError);
        CHECK_THROWS_AS(winding_number(coarse, std::vector<cplx>(4, cplx(3.0))), ConfigError);
    }
}

TEST_CASE("stability gate") {
    SUBCASE("K = 0 on the prestabilized Timoshenko beam") {
        const PlantSampler G(timoshenko_plant(prestabilized()), timoshenko_D().nodes);
        const NyquistResult r = stability_gate(G, [](cplx) { return CMatrix::Zero(2, 2).eval(); });
        CHECK(r.winding == 0);
        CHECK(r.stable);
        CHECK(r.certified);
        CHECK(r.violations.empty());
    }
    SUBCASE("a large negative gain destabilizes the prestabilized beam") {
        const PlantSampler G(timoshenko_plant(prestabilized()), timoshenko_D().nodes);
        auto gain = [](double k) {
            return [k](cplx s) { return CMatrix(CMatrix::Identity(2, 2) * (k / (s + 1.0))); };
        };
        CHECK(stability_gate(G, gain(-0.1)).stable);
        double lo = -0.1, hi = 0.0;
        bool found = false;
        for (double k = -0.5; k >= -1e3; k *= 2) {
            if (!stability_gate(G, gain(k)).stable) {
                hi = k;
                found = true;
                break;
            }
            lo = k;
        }
        REQUIRE(found);
        for (int i = 0; i < 20; ++i) {
            const double mid = 0.5 * (lo + hi);
            (stability_gate(G, gain(mid)).stable ? lo : hi) = mid;
        }
        const NyquistResult r = stability_gate(G, gain(hi * 1.5));
        CHECK_FALSE(r.stable);
        CHECK(r.winding != 0);
    }
    SUBCASE("reference controller on the viscous Euler-Bernoulli beam") {
        const PlantSampler G(euler_plant(eb_viscous()), eb_D().nodes);
        const NyquistResult r = stability_gate(G, reference_controller());
        CHECK(r.winding == 0);
        CHECK(r.stable);
        CHECK(r.certified);
        CHECK(r.min_abs_f > 0.0);
    }
    SUBCASE("winding is invariant under refinement") {
        const ControllerParams K = reference_controller();
        const std::vector<double> w = eb_D().nodes;
        const PlantSampler G1(euler_plant(eb_viscous()), w);
        const PlantSampler G2(euler_plant(eb_viscous()), doubled(w));
        GateOptions no_refine;
        no_refine.refine = false;
        const NyquistResult a = stability_gate(G1, K, no_refine);
        const NyquistResult b = stability_gate(G2, K, no_refine);
        REQUIRE(a.certified);
        CHECK(a.winding == b.winding);
        CHECK(std::abs(a.total_phase - b.total_phase) < 1e-6 * 2 * std::numbers::pi);
    }
    SUBCASE("undamped beam without pre-stabilizer is refused") {
        CHECK_THROWS_AS(require_nyquist_applicable(TimoshenkoSpec{}), ConfigError);
        CHECK_NOTHROW(require_nyquist_applicable(prestabilized()));
        CHECK_NOTHROW(require_nyquist_applicable(eb_viscous()));
    }
}

TEST_CASE("resonance clusters") {
    // two lightly damped modes
    auto mag = [](double w) {
        const cplx s(0.0, w);
        return std::abs(1.0 / (s * s + 0.002 * s + 1.0) + 1.0 / (s * s + 0.004 * s + 16.0));
    };
    const std::vector<Resonance> r = find_resonances(mag, 0.1, 10.0, 20000);
    REQUIRE(r.size() == 2);
    CHECK(r[0].omega == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r[1].omega == doctest::Approx(4.0).epsilon(1e-4));
    CHECK(r[0].half_width == doctest::Approx(1e-3).epsilon(0.05));
    const std::vector<double> nodes = peak_cluster_nodes(r, 0.5, 4);
    CHECK(nodes.size() == 18);
}
