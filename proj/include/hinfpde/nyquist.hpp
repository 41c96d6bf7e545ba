#pragma once

// Winding-number stability test for f(j w) = det(I + G(j w) K(j w)).

#include "hinfpde/freq_grid.hpp"
#include "hinfpde/lti.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace hinfpde {

struct WindingDetail {
    int winding = 0;
    double total_phase = 0.0;  // radians, whole closed contour
};

/// Phase accumulation along the positive axis, doubled by conjugate symmetry,
/// closed by straight segments at both ends. Throws MarginalStabilityError
/// when f vanishes at a node, UndersamplingError when one step turns by more
/// than pi/2, ConfigError when f(w_max) is not within 0.5 of 1.
WindingDetail winding_detail(const std::vector<double>& omega, const std::vector<cplx>& f);
inline int winding_number(const std::vector<double>& omega, const std::vector<cplx>& f) {
    return winding_detail(omega, f).winding;
}

/// Plant samples on the Nyquist grid plus a memo of off-grid evaluations
/// (probe points and refinement nodes), shared across gate calls.
class PlantSampler {
public:
    PlantSampler(std::function<CMatrix(cplx)> plant, const std::vector<double>& nodes);
    /// Reuses samples computed elsewhere, e.g. loaded from a cache.
    PlantSampler(std::function<CMatrix(cplx)> plant, SampledResponse samples);

    Eigen::Index rows() const { return rows_; }
    Eigen::Index cols() const { return cols_; }
    const SampledResponse& on_grid() const { return grid_; }
    /// G(j w), from the grid samples or the memo; evaluates and stores misses.
    CMatrix at(double omega) const;
    const std::function<CMatrix(cplx)>& plant() const { return plant_; }

private:
    std::function<CMatrix(cplx)> plant_;
    SampledResponse grid_;
    Eigen::Index rows_ = 0;
    Eigen::Index cols_ = 0;
    std::map<double, std::size_t> grid_index_;
    mutable std::map<double, CMatrix> memo_;
    mutable std::mutex mu_;
};

struct NyquistResult {
    int winding = 0;
    bool stable = false;
    double total_phase = 0.0;
    double min_abs_f = 0.0;
    double min_sigma_min = 0.0;  // min over nodes of sigma_min(I + GK)
    bool certified = false;
    std::vector<std::size_t> violations;  // intervals of `omega` failing the certificate
    std::vector<double> omega;            // nodes actually used (after refinement)
    std::vector<cplx> f;
    std::string message;  // set when the loop is declared unstable by an error path
};

struct GateOptions {
    int expected_winding = 0;
    double refine_factor = 4.0;  // refinement budget as a multiple of the grid size
    bool refine = true;          // certificate-driven refinement before failing
};

/// det(I + G K) on every node of `nodes`, with G taken from the sampler.
std::vector<cplx> return_difference(const PlantSampler& G, const std::function<CMatrix(cplx)>& K,
                                    const std::vector<double>& nodes);

/// Full gate: refine once on undersampling, certify the sampling, count
/// encirclements. Marginal or undersampled loci are reported as unstable
/// rather than thrown.
NyquistResult stability_gate(const PlantSampler& G, const ControllerParams& x, const GateOptions& opts = {});
NyquistResult stability_gate(const PlantSampler& G, const std::function<CMatrix(cplx)>& K,
                             const GateOptions& opts = {});

void write_nyquist_csv(const std::string& path, const std::vector<double>& omega, const std::vector<cplx>& f);

}  // namespace hinfpde
