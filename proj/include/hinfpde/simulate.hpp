#pragma once

// Step responses by numerical inversion of the Laplace transform along the
// shifted vertical line Re s = a.

#include "hinfpde/lti.hpp"

#include "json.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hinfpde {

struct BromwichOptions {
    double a = 0.1;            // contour shift, F analytic for Re s >= a
    double omega_max = 200.0;  // truncation
    int nodes = 10000;         // trapezoid nodes on [0, omega_max]
    bool subtract_asymptote = true;  // remove c1/s + c2/s^2 and add c1 + c2 t back exactly
    bool check_decay = true;
    double decay_ratio = 1e-3;

    void validate() const;
};

struct InversionResult {
    std::vector<double> y;
    double imag_residue = 0.0;  // max |Im f(t)| before discarding
};

/// y(t) = (e^{at}/pi) * int_0^{omega_max} Re[e^{j w t} F(a + j w)] dw, trapezoid
/// rule. F is evaluated on both halves of the line so the imaginary residue
/// can be measured. NumericError when F has not decayed at omega_max.
InversionResult bromwich_invert(const std::function<cplx(cplx)>& F, const BromwichOptions& opts,
                                const std::vector<double>& t);

struct StepResponse {
    std::vector<double> t;
    std::vector<std::pair<int, int>> channels;  // (input i, output j), zero based
    std::vector<std::vector<double>> y;         // one series per channel
    double imag_residue = 0.0;

    std::string label(std::size_t c) const;
};

/// Unit steps on every input of the loop (G, K): F_ji(s) = T(s)_{ji} / s with
/// T = GK (I + GK)^{-1} evaluated off the axis at s = a + j w.
StepResponse closed_loop_step(const std::function<CMatrix(cplx)>& plant, const std::function<CMatrix(cplx)>& K,
                              const std::vector<double>& t, const BromwichOptions& opts = {});

struct ResponseMetrics {
    double final_value = 0.0;
    double rise_10_90 = 0.0;
    double t90 = 0.0;
    double settling_2pct = 0.0;
    double overshoot = 0.0;
    bool settled = true;
};

/// Rise/settling/overshoot of a step-like series relative to its final value
/// (mean of the last 10% of the window unless given).
ResponseMetrics response_metrics(const std::vector<double>& t, const std::vector<double>& y,
                                 std::optional<double> final_value = std::nullopt);

/// max |y| over the off-diagonal channels, per unit step.
double peak_coupling(const StepResponse& r);

/// Uniform grid of `samples` points on [0, t_max].
std::vector<double> time_grid(double t_max, int samples);

void write_step_csv(const std::string& path, const StepResponse& r);
nlohmann::json metrics_json(const StepResponse& r);

}  // namespace hinfpde
