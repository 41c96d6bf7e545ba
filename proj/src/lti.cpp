#include "hinfpde/lti.hpp"

#include "hinfpde/errors.hpp"
#include "hinfpde/kernels.hpp"
#include "lapack.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <sstream>
#include <string>

namespace hinfpde {

void FirstOrderWeight::validate() const {
    if (!(a0 > 0.0) || !std::isfinite(a0) || !std::isfinite(b0) || !std::isfinite(b1))
        throw ConfigError("first-order weight needs a0 > 0 and finite coefficients");
}

cplx weight_eval(const FirstOrderWeight& w, cplx s) {
    const cplx den = s + w.a0;
    if (den == cplx(0.0, 0.0)) throw DomainError("weight evaluated at its pole", s);
    return (w.b1 * s + w.b0) / den;
}

// --- ControllerParams -------------------------------------------------------

ControllerParams::ControllerParams(const ControllerStructure& st)
    : structure(st),
      a_diag(Eigen::VectorXd::Zero(st.n_k)),
      a_sub(Eigen::VectorXd::Zero(std::max(st.n_k - 1, 0))),
      a_super(Eigen::VectorXd::Zero(std::max(st.n_k - 1, 0))),
      b(Eigen::MatrixXd::Zero(st.n_k, st.n_y)),
      c(Eigen::MatrixXd::Zero(st.n_u, st.n_k)) {
    if (st.n_k < 1 || st.n_y < 1 || st.n_u < 1)
        throw ConfigError("controller dimensions must be positive");
}

std::size_t ControllerParams::param_count(const ControllerStructure& st) {
    const auto nk = static_cast<std::size_t>(st.n_k);
    return (3 * nk - 2) + nk * static_cast<std::size_t>(st.n_y) +
           static_cast<std::size_t>(st.n_u) * nk;
}

Eigen::VectorXd ControllerParams::pack() const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(param_count()));
    Eigen::Index p = 0;
    for (Eigen::Index i = 0; i < a_diag.size(); ++i) x[p++] = a_diag[i];
    for (Eigen::Index i = 0; i < a_sub.size(); ++i) x[p++] = a_sub[i];
    for (Eigen::Index i = 0; i < a_super.size(); ++i) x[p++] = a_super[i];
    for (Eigen::Index i = 0; i < b.rows(); ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j) x[p++] = b(i, j);
    for (Eigen::Index i = 0; i < c.rows(); ++i)
        for (Eigen::Index j = 0; j < c.cols(); ++j) x[p++] = c(i, j);
    return x;
}

void ControllerParams::unpack(const Eigen::VectorXd& x) {
    if (static_cast<std::size_t>(x.size()) != param_count())
        throw ConfigError("parameter vector length does not match controller structure");
    Eigen::Index p = 0;
    for (Eigen::Index i = 0; i < a_diag.size(); ++i) a_diag[i] = x[p++];
    for (Eigen::Index i = 0; i < a_sub.size(); ++i) a_sub[i] = x[p++];
    for (Eigen::Index i = 0; i < a_super.size(); ++i) a_super[i] = x[p++];
    for (Eigen::Index i = 0; i < b.rows(); ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j) b(i, j) = x[p++];
    for (Eigen::Index i = 0; i < c.rows(); ++i)
        for (Eigen::Index j = 0; j < c.cols(); ++j) c(i, j) = x[p++];
}

ControllerParams ControllerParams::from_vector(const ControllerStructure& st,
                                               const Eigen::VectorXd& x) {
    ControllerParams k(st);
    k.unpack(x);
    return k;
}

Eigen::MatrixXd ControllerParams::state_matrix() const {
    const int n = structure.n_k;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) a(i, i) = a_diag[i];
    for (int i = 0; i + 1 < n; ++i) {
        a(i + 1, i) = a_sub[i];
        a(i, i + 1) = a_super[i];
    }
    return a;
}

void ControllerParams::validate() const {
    const auto& st = structure;
    if (st.n_k < 1 || st.n_y < 1 || st.n_u < 1)
        throw ConfigError("controller dimensions must be positive");
    if (st.has_integrator && !(st.eps > 0.0))
        throw ConfigError("pseudo-integrator constant eps must be positive");
    if (a_diag.size() != st.n_k || a_sub.size() != st.n_k - 1 || a_super.size() != st.n_k - 1 ||
        b.rows() != st.n_k || b.cols() != st.n_y || c.rows() != st.n_u || c.cols() != st.n_k)
        throw ConfigError("controller matrices do not match the declared structure");
    if (!pack().allFinite()) throw ConfigError("controller parameters must be finite");
}

bool ControllerParams::operator==(const ControllerParams& o) const {
    return structure == o.structure && a_diag == o.a_diag && a_sub == o.a_sub &&
           a_super == o.a_super && b == o.b && c == o.c;
}

CMatrix controller_resolvent_solve(const ControllerParams& x, cplx s, const CMatrix& rhs,
                                   bool transpose) {
    const int n = x.structure.n_k;
    std::vector<cplx> d(static_cast<std::size_t>(n));
    std::vector<cplx> dl(static_cast<std::size_t>(std::max(n - 1, 1)));
    std::vector<cplx> du(static_cast<std::size_t>(std::max(n - 1, 1)));
    for (int i = 0; i < n; ++i) d[i] = s - x.a_diag[i];
    for (int i = 0; i + 1 < n; ++i) {
        // sub-diagonal of (sI - A) is -A(i+1,i); transposing swaps the bands
        dl[i] = transpose ? -x.a_super[i] : -x.a_sub[i];
        du[i] = transpose ? -x.a_sub[i] : -x.a_super[i];
    }
    CMatrix sol = rhs;
    const lapack_int info =
        LAPACKE_zgtsv(LAPACK_COL_MAJOR, n, static_cast<lapack_int>(sol.cols()), dl.data(), d.data(),
                      du.data(), sol.data(), static_cast<lapack_int>(sol.rows()));
    if (info != 0) throw DomainError("singular controller resolvent (s is an eigenvalue of A)", s);
    return sol;
}

CMatrix controller_response(const ControllerParams& x, cplx s) {
    const auto& st = x.structure;
    cplx integ(1.0, 0.0);
    if (st.has_integrator) {
        const cplx den = s + st.eps;
        if (den == cplx(0.0, 0.0)) throw DomainError("s hits the pseudo-integrator pole", s);
        integ = 1.0 / den;
    }
    const CMatrix rb = controller_resolvent_solve(x, s, x.b.cast<cplx>());
    return integ * (x.c.cast<cplx>() * rb);
}

ControllerSpectrum controller_spectrum(const ControllerParams& x) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(x.state_matrix(), true);
    if (es.info() != Eigen::Success) throw NumericError("controller eigenvalue solver failed");
    ControllerSpectrum sp;
    sp.values = es.eigenvalues();
    sp.right = es.eigenvectors();
    sp.left = sp.right.inverse();
    return sp;
}

double eigen_damping(cplx lambda) {
    const double mag = std::abs(lambda);
    if (mag == 0.0) return 0.0;
    return -lambda.real() / mag;
}

double spectral_radius(const ControllerParams& x) {
    const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(x.state_matrix(), false).eigenvalues();
    return ev.cwiseAbs().maxCoeff();
}

double min_damping(const ControllerParams& x) {
    const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(x.state_matrix(), false).eigenvalues();
    double z = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ev.size(); ++i) z = std::min(z, eigen_damping(ev[i]));
    return z;
}

// --- SampledResponse --------------------------------------------------------

SampledResponse::SampledResponse(std::vector<double> omega, Eigen::Index rows, Eigen::Index cols)
    : omega_(std::move(omega)), rows_(rows), cols_(cols) {
    const auto entries = static_cast<std::size_t>(rows * cols);
    re_.assign(entries, std::vector<double>(omega_.size(), 0.0));
    im_.assign(entries, std::vector<double>(omega_.size(), 0.0));
}

CMatrix SampledResponse::at(std::size_t k) const {
    CMatrix m(rows_, cols_);
    for (Eigen::Index r = 0; r < rows_; ++r)
        for (Eigen::Index c = 0; c < cols_; ++c) m(r, c) = entry(k, r, c);
    return m;
}

void SampledResponse::set(std::size_t k, const CMatrix& m) {
    for (Eigen::Index r = 0; r < rows_; ++r)
        for (Eigen::Index c = 0; c < cols_; ++c) {
            re_[slot(r, c)][k] = m(r, c).real();
            im_[slot(r, c)][k] = m(r, c).imag();
        }
}

cplx SampledResponse::entry(std::size_t k, Eigen::Index r, Eigen::Index c) const {
    return {re_[slot(r, c)][k], im_[slot(r, c)][k]};
}

std::pair<std::size_t, std::size_t> SampledResponse::band_range(double lo, double hi) const {
    const auto first = std::lower_bound(omega_.begin(), omega_.end(), lo);
    const auto last = std::upper_bound(omega_.begin(), omega_.end(), hi);
    const auto f = static_cast<std::size_t>(first - omega_.begin());
    const auto l = static_cast<std::size_t>(last - omega_.begin());
    return {f, std::max(f, l)};
}

SampledResponse sample_response(const std::vector<double>& omega,
                                const std::function<CMatrix(cplx)>& fn) {
    if (omega.empty()) throw ConfigError("cannot sample on an empty frequency set");
    const CMatrix first = fn(cplx(0.0, omega.front()));
    SampledResponse out(omega, first.rows(), first.cols());
    out.set(0, first);
    // each node writes its own slot, so the result does not depend on scheduling
    std::exception_ptr failure;
    const auto n = static_cast<std::ptrdiff_t>(omega.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 1; k < n; ++k) {
        try {
            out.set(static_cast<std::size_t>(k), fn(cplx(0.0, omega[static_cast<std::size_t>(k)])));
        } catch (...) {
#pragma omp critical(hinfpde_sample_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

ClosedLoopMaps closed_loop_maps(const SampledResponse& G,
                                const std::function<CMatrix(cplx)>& K_eval) {
    if (G.rows() != G.cols()) throw ConfigError("closed-loop maps need a square plant");
    const Eigen::Index n = G.rows();
    ClosedLoopMaps out{SampledResponse(G.omega(), n, n), SampledResponse(G.omega(), n, n)};
    const CMatrix eye = CMatrix::Identity(n, n);
    for (std::size_t k = 0; k < G.size(); ++k) {
        const double w = G.omega(k);
        const CMatrix L = G.at(k) * K_eval(cplx(0.0, w));
        const Eigen::PartialPivLU<CMatrix> lu(eye + L);
        if (!(lu.rcond() > 1e-14)) {
            std::ostringstream msg;
            msg << "I + GK is singular at omega = " << w;
            throw MarginalStabilityError(msg.str(), w);
        }
        const CMatrix S = lu.inverse();
        out.S.set(k, S);
        out.T.set(k, L * S);
    }
    return out;
}

std::vector<double> weighted_sigma_max(const SampledResponse& M,
                                       const std::optional<FirstOrderWeight>& w,
                                       std::size_t first, std::size_t last) {
    const std::size_t n = last > first ? last - first : 0;
    std::vector<double> out(n, 0.0);
    if (n == 0) return out;
    std::vector<double> scale;
    if (w) {
        scale.resize(n);
        for (std::size_t k = 0; k < n; ++k)
            scale[k] = std::abs(weight_eval(*w, cplx(0.0, M.omega(first + k))));
    }
    const double* sc = w ? scale.data() : nullptr;
    const auto& kt = kernels::active();
    if (M.rows() == 1 && M.cols() == 1) {
        kt.abs_scaled(M.re(0, 0) + first, M.im(0, 0) + first, n, sc, out.data());
    } else if (M.rows() == 2 && M.cols() == 2) {
        kernels::Batch2x2 batch{};
        for (int e = 0; e < 4; ++e) {
            batch.re[e] = M.re(e / 2, e % 2) + first;
            batch.im[e] = M.im(e / 2, e % 2) + first;
        }
        batch.n = n;
        kt.sigma_max_2x2(batch, sc, out.data());
    } else {
        for (std::size_t k = 0; k < n; ++k) {
            Eigen::JacobiSVD<CMatrix> svd(M.at(first + k));
            out[k] = svd.singularValues()(0) * (sc ? sc[k] : 1.0);
        }
    }
    return out;
}

NormPeak sampled_hinf_peak(const SampledResponse& M, const std::optional<FirstOrderWeight>& w,
                           double lo, double hi) {
    const auto [first, last] = M.band_range(lo, hi);
    if (first >= last) throw ConfigError("frequency band does not intersect the sampling grid");
    const std::vector<double> vals = weighted_sigma_max(M, w, first, last);
    NormPeak peak{vals[0], first};
    for (std::size_t k = 1; k < vals.size(); ++k)
        if (vals[k] > peak.value) peak = {vals[k], first + k};
    return peak;
}

}  // namespace hinfpde
