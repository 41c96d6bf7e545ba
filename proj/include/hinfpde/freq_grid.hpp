#pragma once

// Multi-band frequency grids and the sampling certificate for Nyquist loci.

#include "hinfpde/lti.hpp"

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hinfpde {

enum class Spacing { Linear, Log };
enum class GridRole { S, T, D };

std::string to_string(Spacing s);
std::string to_string(GridRole r);

struct Band {
    double lo = 0.0;
    double hi = 0.0;
    int count = 2;
    Spacing spacing = Spacing::Linear;

    bool operator==(const Band&) const = default;
};

struct FrequencyGrid {
    GridRole role = GridRole::D;
    std::vector<Band> bands;
    std::vector<double> nodes;  // strictly increasing, positive

    bool operator==(const FrequencyGrid&) const = default;
};

/// Nodes closer than this relative distance are merged.
inline constexpr double kNodeMergeTol = 1e-12;

/// Places `count` nodes per band (edges included), merges and deduplicates.
/// ConfigError on overlapping bands, counts < 2, or non-positive frequencies.
FrequencyGrid build_grid(std::vector<Band> bands, GridRole role = GridRole::D);

/// Returns a grid with `extra` nodes merged in; existing nodes are kept.
FrequencyGrid insert_nodes(const FrequencyGrid& g, const std::vector<double>& extra);

struct Resonance {
    double omega = 0.0;
    double peak = 0.0;
    double half_width = 0.0;  // half-power half bandwidth, rad/s
};

/// Local maxima of `magnitude` on a log scan of [lo, hi], polished by
/// golden-section search, with their half-power widths.
std::vector<Resonance> find_resonances(const std::function<double(double)>& magnitude, double lo, double hi,
                                       int scan);

/// Nodes omega_k + i * step * half_width_k for |i| <= half_count.
std::vector<double> peak_cluster_nodes(const std::vector<Resonance>& peaks, double step, int half_count);

enum class BoundSource { Numeric, User };

/// One value per interval [nodes[i], nodes[i+1]], bounding |f'| there.
struct FirstOrderBound {
    std::vector<double> values;
    BoundSource source = BoundSource::Numeric;
};

struct CertifyResult {
    bool ok = true;
    std::vector<std::size_t> violations;  // interval indices
};

/// Checks L_i (w_{i+1} - w_i) <= |f_i| + |f_{i+1}| on every interval, or only
/// on intervals with active[i] != 0 when a mask is given.
CertifyResult certify_sampling(const std::vector<double>& nodes, const std::vector<cplx>& f,
                               const FirstOrderBound& bound, const std::vector<std::uint8_t>& active = {});

/// Batched evaluation of the scalar function along j*omega.
using ScalarEvaluator = std::function<std::vector<cplx>(const std::vector<double>&)>;

/// Intervals that need a certificate: those whose smaller endpoint modulus is
/// below `factor` times the closest approach over all nodes.
std::vector<std::uint8_t> near_origin_mask(const std::vector<cplx>& f, double factor = 10.0);

/// Numeric bound: divided differences over the endpoints and probes at 1/3 and
/// 2/3 of each active interval, times `safety`.
FirstOrderBound numeric_first_order_bound(const ScalarEvaluator& f_eval, const std::vector<double>& nodes,
                                          const std::vector<cplx>& f, const std::vector<std::uint8_t>& active,
                                          double safety = 1.5);

using BoundEstimator = std::function<FirstOrderBound(const std::vector<double>& nodes, const std::vector<cplx>& f,
                                                     const std::vector<std::uint8_t>& active)>;

struct RefineResult {
    FrequencyGrid grid;
    std::vector<cplx> f;  // values on grid.nodes
    bool certified = false;
    bool budget_exhausted = false;
    int rounds = 0;
};

/// Bisects violating intervals until the certificate holds or the grid
/// reaches max_nodes. Only inserts nodes. A default-constructed estimator
/// selects the numeric bound.
RefineResult refine_until_certified(const ScalarEvaluator& f_eval, const FrequencyGrid& grid, std::size_t max_nodes,
                                    BoundEstimator estimator = {});

void to_json(nlohmann::json& j, const Band& b);
void from_json(const nlohmann::json& j, Band& b);
void to_json(nlohmann::json& j, const FrequencyGrid& g);
void from_json(const nlohmann::json& j, FrequencyGrid& g);

}  // namespace hinfpde
