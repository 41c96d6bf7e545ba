#pragma once

// Controller files. The native form stores the tridiagonal realization;
// a SISO transfer function N(s)/D(s) is also accepted and realized in real
// modal form (2x2 blocks for complex pole pairs), which is tridiagonal.

#include "hinfpde/lti.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace hinfpde {

nlohmann::json controller_to_json(const ControllerParams& x);
/// Accepts {"form": "state_space", ...} (the default) or
/// {"form": "transfer_function", "numerator": [...], "denominator": [...]},
/// coefficients listed from the highest power down.
ControllerParams controller_from_json(const nlohmann::json& j);

ControllerParams load_controller(const std::string& path);
void save_controller(const std::string& path, const ControllerParams& x);

/// Strictly proper N/D with distinct poles. ConfigError otherwise.
ControllerParams realize_transfer_function(const std::vector<double>& numerator,
                                           const std::vector<double>& denominator);

/// Coefficients (highest power first) of a SISO controller's transfer
/// function, the pseudo-integrator included in the denominator.
struct PolynomialPair {
    std::vector<double> numerator;
    std::vector<double> denominator;
};
PolynomialPair transfer_function(const ControllerParams& x);
std::string format_transfer_function(const PolynomialPair& tf);

}  // namespace hinfpde
