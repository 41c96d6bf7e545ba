#pragma once

// Run configuration: plant, grids, weights, synthesis and simulation
// settings in one JSON document. Unknown keys are rejected.

#include "hinfpde/freq_grid.hpp"
#include "hinfpde/lti.hpp"
#include "hinfpde/plant.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hinfpde {

/// Extra nodes around the resonances of sigma_max(G(jw)) found in [lo, hi].
struct PeakClusterSpec {
    double lo = 0.1;
    double hi = 100.0;
    int scan = 20000;
    double step = 0.5;     // node spacing in half-power half widths
    int half_count = 12;   // nodes on each side of a peak
};

struct GridSpec {
    std::vector<Band> bands;
    std::optional<PeakClusterSpec> peaks;
};

struct SynthesisSection {
    double gamma = 1.0 / 0.7;
    double delta = 100.0;
    double mu = 1e-2;
    int n_k = 8;
    double eps = 1e-3;
    bool has_integrator = true;
    double band_lo = 0.0;
    std::uint64_t seed = 1;
    int max_iter = 500;
};

struct SimulateSection {
    double t_max = 20.0;
    int samples = 401;
    double shift = 0.1;
    double omega_max = 200.0;
    int nodes = 20000;
};

struct RunConfig {
    PlantSpec plant;
    GridSpec grid_S;
    GridSpec grid_T;
    GridSpec grid_D;
    FirstOrderWeight W1;
    FirstOrderWeight W2;
    SynthesisSection synthesis;
    SimulateSection simulate;

    ControllerStructure structure() const;
};

/// ConfigError on missing sections, unknown keys or invalid values.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);
RunConfig load_config(const std::string& path);

nlohmann::json plant_to_json(const PlantSpec& p);
PlantSpec plant_from_json(const nlohmann::json& j);

/// Bands plus peak clusters of `plant` when requested.
FrequencyGrid realize_grid(const GridSpec& spec, GridRole role, const PlantFn& plant);

/// FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string content_hash(const nlohmann::json& j);
std::string content_hash(const std::vector<double>& values);

}  // namespace hinfpde
