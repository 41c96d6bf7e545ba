#pragma once

// Complex frequency-response arithmetic: first-order weights, tridiagonal
// controller realizations, sampled closed-loop maps and sampled H-infinity
// norms.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace hinfpde {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

/// (b1*s + b0) / (s + a0)
struct FirstOrderWeight {
    double b1 = 0.0;
    double b0 = 0.0;
    double a0 = 1.0;

    /// Throws ConfigError unless a0 > 0.
    void validate() const;
    /// A weight with constant magnitude k at every frequency.
    static FirstOrderWeight constant(double k) { return {k, k, 1.0}; }
};

/// Throws DomainError at the pole s = -a0.
cplx weight_eval(const FirstOrderWeight& w, cplx s);

struct ControllerStructure {
    int n_k = 1;
    int n_y = 1;
    int n_u = 1;
    double eps = 1e-3;
    bool has_integrator = false;

    bool operator==(const ControllerStructure&) const = default;
};

/// K(s) = C (sI - A)^{-1} B, times 1/(s+eps) with the pseudo-integrator.
/// A is tridiagonal, D is identically zero.
struct ControllerParams {
    ControllerStructure structure;
    Eigen::VectorXd a_diag;
    Eigen::VectorXd a_sub;    // A(i+1, i)
    Eigen::VectorXd a_super;  // A(i, i+1)
    Eigen::MatrixXd b;        // n_k x n_y
    Eigen::MatrixXd c;        // n_u x n_k

    ControllerParams() : ControllerParams(ControllerStructure{}) {}
    explicit ControllerParams(const ControllerStructure& st);

    /// (3 n_k - 2) + n_k n_y + n_u n_k
    static std::size_t param_count(const ControllerStructure& st);
    std::size_t param_count() const { return param_count(structure); }

    /// Packing order: a_diag, a_sub, a_super, b row-major, c row-major.
    Eigen::VectorXd pack() const;
    void unpack(const Eigen::VectorXd& x);
    static ControllerParams from_vector(const ControllerStructure& st, const Eigen::VectorXd& x);

    Eigen::MatrixXd state_matrix() const;
    void validate() const;

    bool operator==(const ControllerParams& o) const;
};

/// Frequency response of the controller (n_u x n_y). DomainError when the
/// resolvent is singular or s hits the pseudo-integrator pole.
CMatrix controller_response(const ControllerParams& x, cplx s);

/// Solves (sI - A) X = rhs, or (sI - A)^T X = rhs when `transpose` is set.
CMatrix controller_resolvent_solve(const ControllerParams& x, cplx s, const CMatrix& rhs,
                                   bool transpose = false);

/// Eigen-decomposition of the tridiagonal state matrix, with the left
/// eigenvectors normalised so that left.row(k) * right.col(k) = 1.
struct ControllerSpectrum {
    Eigen::VectorXcd values;
    CMatrix right;
    CMatrix left;
};
ControllerSpectrum controller_spectrum(const ControllerParams& x);

/// Damping of a single eigenvalue, -Re(l)/|l|, with damping(0) = 0.
double eigen_damping(cplx lambda);

/// max |lambda_i(A)|; the pseudo-integrator pole is not included.
double spectral_radius(const ControllerParams& x);
/// min over eigenvalues of -Re(l)/|l|.
double min_damping(const ControllerParams& x);

/// One complex matrix per frequency node, stored entry-major as separate
/// real/imaginary arrays so batched kernels can stream them.
class SampledResponse {
public:
    SampledResponse() = default;
    SampledResponse(std::vector<double> omega, Eigen::Index rows, Eigen::Index cols);

    std::size_t size() const { return omega_.size(); }
    Eigen::Index rows() const { return rows_; }
    Eigen::Index cols() const { return cols_; }
    const std::vector<double>& omega() const { return omega_; }
    double omega(std::size_t k) const { return omega_[k]; }

    CMatrix at(std::size_t k) const;
    void set(std::size_t k, const CMatrix& m);
    cplx entry(std::size_t k, Eigen::Index r, Eigen::Index c) const;

    const double* re(Eigen::Index r, Eigen::Index c) const { return re_[slot(r, c)].data(); }
    const double* im(Eigen::Index r, Eigen::Index c) const { return im_[slot(r, c)].data(); }

    /// Contiguous node range [first, last) with lo <= omega <= hi.
    std::pair<std::size_t, std::size_t> band_range(double lo, double hi) const;

private:
    std::size_t slot(Eigen::Index r, Eigen::Index c) const {
        return static_cast<std::size_t>(r * cols_ + c);
    }

    std::vector<double> omega_;
    Eigen::Index rows_ = 0;
    Eigen::Index cols_ = 0;
    std::vector<std::vector<double>> re_;
    std::vector<std::vector<double>> im_;
};

/// Samples `fn(j*omega)` on every node.
SampledResponse sample_response(const std::vector<double>& omega,
                                const std::function<CMatrix(cplx)>& fn);

struct ClosedLoopMaps {
    SampledResponse S;
    SampledResponse T;
};

/// S = (I + GK)^{-1}, T = GK (I + GK)^{-1} on every node of G.
/// Throws MarginalStabilityError if I + GK is singular at some node.
ClosedLoopMaps closed_loop_maps(const SampledResponse& G,
                                const std::function<CMatrix(cplx)>& K_eval);

/// scale(k) * sigma_max(M_k) for k in [first, last).
std::vector<double> weighted_sigma_max(const SampledResponse& M,
                                       const std::optional<FirstOrderWeight>& w,
                                       std::size_t first, std::size_t last);

struct NormPeak {
    double value = 0.0;
    std::size_t index = 0;
};

/// max over nodes in [lo, hi] of sigma_max(w(j omega) M(j omega)).
/// ConfigError when no node falls into the band.
NormPeak sampled_hinf_peak(const SampledResponse& M, const std::optional<FirstOrderWeight>& w,
                           double lo, double hi);

inline double sampled_hinf_norm(const SampledResponse& M,
                                const std::optional<FirstOrderWeight>& w, double lo,
                                double hi) {
    return sampled_hinf_peak(M, w, lo, hi).value;
}

}  // namespace hinfpde
