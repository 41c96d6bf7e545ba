#pragma once

// Sampled multidisk program
//   minimize   max{ ||W1 S||_{Omega_S}, ||W2 T||_{Omega_T} }
//   subject to ||S||_{Omega_D} <= gamma, rho(K) <= delta, zeta(K) >= mu,
//              det(I + G K) has winding number 0 on Omega_D.

#include "hinfpde/freq_grid.hpp"
#include "hinfpde/lti.hpp"
#include "hinfpde/nyquist.hpp"

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace hinfpde {

/// A tunable controller family: parameters -> K(s) with first derivatives.
class ControllerModel {
public:
    enum class PieceKind { Radius, Damping };
    /// One eigenvalue constraint, value <= 0 when satisfied.
    struct EigenPiece {
        PieceKind kind;
        double value;
        Eigen::VectorXd gradient;
    };

    virtual ~ControllerModel() = default;
    virtual std::size_t param_count() const = 0;
    virtual CMatrix response(const Eigen::VectorXd& x, cplx s) const = 0;
    /// Component p of the result is r * dK/dx_p * q.
    virtual Eigen::VectorXcd contract(const Eigen::VectorXd& x, cplx s, const Eigen::RowVectorXcd& r,
                                      const Eigen::VectorXcd& q) const = 0;
    virtual double radius(const Eigen::VectorXd& x) const = 0;
    virtual double damping(const Eigen::VectorXd& x) const = 0;
    /// Eigenvalues with |l| >= delta - margin or zeta(l) <= mu + margin.
    virtual std::vector<EigenPiece> eigen_pieces(const Eigen::VectorXd& x, double delta, double mu,
                                                 double margin) const = 0;
    /// Typical magnitude of each parameter at x, used to weight steps.
    virtual Eigen::VectorXd parameter_scale(const Eigen::VectorXd& x, double floor) const {
        return x.cwiseAbs().cwiseMax(floor);
    }
};

/// (pseudo-integrator) x tridiagonal state-space block.
class TridiagonalModel final : public ControllerModel {
public:
    explicit TridiagonalModel(ControllerStructure st) : st_(st) {}
    const ControllerStructure& structure() const { return st_; }
    std::size_t param_count() const override { return ControllerParams::param_count(st_); }
    CMatrix response(const Eigen::VectorXd& x, cplx s) const override;
    Eigen::VectorXcd contract(const Eigen::VectorXd& x, cplx s, const Eigen::RowVectorXcd& r,
                              const Eigen::VectorXcd& q) const override;
    double radius(const Eigen::VectorXd& x) const override;
    double damping(const Eigen::VectorXd& x) const override;
    std::vector<EigenPiece> eigen_pieces(const Eigen::VectorXd& x, double delta, double mu,
                                         double margin) const override;

private:
    ControllerStructure st_;
};

/// Constant n_u x n_y gain, parameters row-major. No dynamics, so the
/// eigenvalue constraints are vacuous.
class StaticGainModel final : public ControllerModel {
public:
    StaticGainModel(int n_u, int n_y) : n_u_(n_u), n_y_(n_y) {}
    std::size_t param_count() const override { return static_cast<std::size_t>(n_u_ * n_y_); }
    CMatrix response(const Eigen::VectorXd& x, cplx s) const override;
    Eigen::VectorXcd contract(const Eigen::VectorXd& x, cplx s, const Eigen::RowVectorXcd& r,
                              const Eigen::VectorXcd& q) const override;
    double radius(const Eigen::VectorXd&) const override { return 0.0; }
    double damping(const Eigen::VectorXd&) const override { return 1.0; }
    std::vector<EigenPiece> eigen_pieces(const Eigen::VectorXd&, double, double, double) const override {
        return {};
    }

private:
    int n_u_;
    int n_y_;
};

struct SynthesisProblem {
    std::shared_ptr<const PlantSampler> plant_D;  // Omega_D = Omega_N, with memo for the gate
    SampledResponse G_S;
    SampledResponse G_T;
    FirstOrderWeight W1;
    FirstOrderWeight W2;
    double gamma = 1.0 / 0.7;
    double delta = 100.0;
    double mu = 1e-2;
    double band_lo = 0.0;  // ||W1 S|| only over omega >= band_lo
    ControllerStructure structure;

    void validate() const;
};

/// Samples the plant on the three grids.
SynthesisProblem make_problem(const std::function<CMatrix(cplx)>& plant, const FrequencyGrid& omega_S,
                              const FrequencyGrid& omega_T, const FrequencyGrid& omega_D, const FirstOrderWeight& W1,
                              const FirstOrderWeight& W2, double gamma, double delta, double mu, double band_lo,
                              const ControllerStructure& structure);
/// Same, from samples taken beforehand; `plant` serves Nyquist refinement.
SynthesisProblem make_problem(const std::function<CMatrix(cplx)>& plant, SampledResponse G_S, SampledResponse G_T,
                              SampledResponse G_D, const FirstOrderWeight& W1, const FirstOrderWeight& W2,
                              double gamma, double delta, double mu, double band_lo,
                              const ControllerStructure& structure);

struct ObjectiveValue {
    double F = 0.0;
    Eigen::VectorXd g;
};

/// F(x) and a subgradient of the active term; ties within 1e-8 relative are
/// averaged with equal weights.
ObjectiveValue objective_and_subgradient(const ControllerModel& model, const Eigen::VectorXd& x,
                                         const SynthesisProblem& prob);
ObjectiveValue objective_and_subgradient(const ControllerParams& x, const SynthesisProblem& prob);

/// ||S||_{Omega_D}.
double sensitivity_peak(const ControllerModel& model, const Eigen::VectorXd& x, const SynthesisProblem& prob);

struct IterationRecord {
    int iter = 0;
    double F = 0.0;
    double s_norm = 0.0;
    double rho = 0.0;
    double zeta = 0.0;
    double step = 0.0;
    int backtracks = 0;
    int gate_failures = 0;
    int pieces = 0;
    double predicted = 0.0;
    bool barrier = false;
};

struct SynthesisOptions {
    int max_iter = 500;
    double tol = 1e-9;        // relative model decrease that counts as stationary
    double initial_step = 1.0;
    double max_step = 1e6;
    int max_halvings = 30;
    int barrier_iterations = 5;
    double piece_window = 0.3;  // relative window for near-active frequency pieces
    bool relative_metric = true;  // proximal term weighted by 1 / parameter_scale(x)^2
    double metric_floor = 1e-3;
    bool null_step_cuts = true;  // rejected trials add their linearizations to the model
    double downshift = 1e-2;     // cut push-down, relative to F per squared scaled step
    std::function<void(const IterationRecord&)> on_iteration;
};

enum class SynthesisStatus { Converged, BudgetExhausted, CertificationFailed };
std::string to_string(SynthesisStatus s);

struct SynthesisReport {
    SynthesisStatus status = SynthesisStatus::BudgetExhausted;
    Eigen::VectorXd x;
    ControllerParams params;  // filled for the tridiagonal family
    double objective = 0.0;
    double s_norm = 0.0;
    double rho = 0.0;
    double zeta = 0.0;
    bool feasible = false;
    bool restarted = false;
    int iterations = 0;
    NyquistResult certificate;
    std::vector<IterationRecord> log;
};

/// Descent on the improvement function from a feasible x0. ConfigError when
/// x0 violates a hard constraint or fails the Nyquist gate.
SynthesisReport solve(const ControllerModel& model, const SynthesisProblem& prob, const Eigen::VectorXd& x0,
                      const SynthesisOptions& opts = {});
SynthesisReport solve(const SynthesisProblem& prob, const ControllerParams& x0, const SynthesisOptions& opts = {});

/// a_diag = -1, zero off-diagonals, b and c ~ 1e-3 from a seeded generator;
/// bumps the seed until the gate passes (at most 10 tries).
ControllerParams default_initializer(const SynthesisProblem& prob, std::uint64_t seed = 1);

nlohmann::json to_json(const IterationRecord& r);
nlohmann::json report_json(const SynthesisReport& r);

}  // namespace hinfpde
