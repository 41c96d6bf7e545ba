#include "doctest.h"

#include "hinfpde/kernels.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <random>
#include <vector>

using namespace hinfpde;
using namespace hinfpde::kernels;

namespace {

struct Soa {
    std::vector<double> re[4], im[4];
    Batch2x2 view() const {
        Batch2x2 b{};
        for (int e = 0; e < 4; ++e) {
            b.re[e] = re[e].data();
            b.im[e] = im[e].data();
        }
        b.n = re[0].size();
        return b;
    }
};

Soa random_batch(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    Soa s;
    for (int e = 0; e < 4; ++e) {
        s.re[e].resize(n);
        s.im[e].resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            // spread magnitudes over many decades
            const double scale = std::pow(10.0, 3.0 * d(rng));
            s.re[e][k] = scale * d(rng);
            s.im[e][k] = scale * d(rng);
        }
    }
    return s;
}

std::vector<const KernelTable*> variants() {
    std::vector<const KernelTable*> v{&scalar_table()};
    if (isa_available(Isa::Avx2)) v.push_back(&table(Isa::Avx2));
    return v;
}

}  // namespace

TEST_CASE("sigma_max_2x2 agrees with a dense SVD") {
    std::mt19937_64 rng(1);
    for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 1001u}) {
        const Soa s = random_batch(n, rng);
        std::vector<double> scale(n);
        for (std::size_t k = 0; k < n; ++k) scale[k] = 0.5 + k % 3;
        for (const KernelTable* t : variants()) {
            std::vector<double> out(n), scaled(n);
            t->sigma_max_2x2(s.view(), nullptr, out.data());
            t->sigma_max_2x2(s.view(), scale.data(), scaled.data());
            for (std::size_t k = 0; k < n; ++k) {
                Eigen::Matrix2cd m;
                m << std::complex<double>(s.re[0][k], s.im[0][k]), std::complex<double>(s.re[1][k], s.im[1][k]),
                    std::complex<double>(s.re[2][k], s.im[2][k]), std::complex<double>(s.re[3][k], s.im[3][k]);
                const double ref = Eigen::JacobiSVD<Eigen::Matrix2cd>(m).singularValues()[0];
                CHECK(std::abs(out[k] - ref) <= 1e-13 * ref);
                CHECK(std::abs(scaled[k] - scale[k] * ref) <= 1e-13 * scale[k] * ref);
            }
        }
    }
}

TEST_CASE("wide kernels match the scalar reference") {
    if (!isa_available(Isa::Avx2)) {
        MESSAGE("AVX2 not available; only the scalar table is exercised");
        return;
    }
    const KernelTable& ref = scalar_table();
    const KernelTable& wide = table(Isa::Avx2);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> d(0.0, 1.0);
    for (std::size_t n : {1u, 5u, 8u, 333u}) {
        std::vector<double> re(n), im(n), scale(n);
        for (std::size_t k = 0; k < n; ++k) {
            re[k] = d(rng);
            im[k] = d(rng);
            scale[k] = std::abs(d(rng));
        }
        std::vector<double> a(n), b(n);
        ref.abs_scaled(re.data(), im.data(), n, scale.data(), a.data());
        wide.abs_scaled(re.data(), im.data(), n, scale.data(), b.data());
        for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(a[k] - b[k]) <= 1e-15 * (1 + a[k]));

        const std::vector<double> t{0.0, 0.37, 1.0, 5.5, 10.0};
        std::vector<std::complex<double>> ea(t.size()), eb(t.size());
        ref.exp_sum(re.data(), im.data(), n, 0.01, t.data(), t.size(), ea.data());
        wide.exp_sum(re.data(), im.data(), n, 0.01, t.data(), t.size(), eb.data());
        double norm = 0.0;
        for (std::size_t k = 0; k < n; ++k) norm += std::hypot(re[k], im[k]);
        for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(ea[i] - eb[i]) <= 1e-12 * (1 + norm));
    }
}

TEST_CASE("exp_sum against direct evaluation") {
    const std::vector<double> re{1.0, -0.5, 0.25, 2.0}, im{0.0, 1.0, -1.0, 0.5};
    const std::vector<double> t{0.0, 1.3, 7.0};
    for (const KernelTable* k : variants()) {
        std::vector<std::complex<double>> out(t.size());
        k->exp_sum(re.data(), im.data(), re.size(), 0.2, t.data(), t.size(), out.data());
        for (std::size_t i = 0; i < t.size(); ++i) {
            std::complex<double> ref = 0.0;
            for (std::size_t j = 0; j < re.size(); ++j)
                ref += std::exp(std::complex<double>(0.0, 0.2 * double(j) * t[i])) * std::complex<double>(re[j], im[j]);
            CHECK(std::abs(out[i] - ref) <= 1e-13);
        }
    }
}
