#pragma once

// The four pipeline commands behind the command-line tool. Each returns the
// process exit code: 0 success, 1 analysis or synthesis failure, 2 usage or
// configuration error.

#include "hinfpde/config.hpp"
#include "hinfpde/lti.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hinfpde {

struct CommandOptions {
    std::string config;
    std::string controller;  // certify and simulate
    std::string out;
    std::optional<std::uint64_t> seed;
    int jobs = 0;  // 0 keeps the OpenMP default
    bool no_cache = false;
    std::string cache_dir = ".hinfpde-cache";
};

int cmd_sweep(const CommandOptions& o, std::ostream& out, std::ostream& err);
int cmd_certify(const CommandOptions& o, std::ostream& out, std::ostream& err);
int cmd_synthesize(const CommandOptions& o, std::ostream& out, std::ostream& err);
int cmd_simulate(const CommandOptions& o, std::ostream& out, std::ostream& err);

/// Plant samples on `nodes`, read from or written to the on-disk cache
/// keyed by the plant description and the node list. Cache files are
/// written to a temporary name and renamed into place.
SampledResponse cached_plant_samples(const PlantSpec& spec, const PlantFn& plant, const std::vector<double>& nodes,
                                     const std::string& cache_dir, bool use_cache);

/// Sorted union of the node sets.
std::vector<double> union_nodes(const std::vector<const FrequencyGrid*>& grids);

/// Sibling path: "dir/name.json" with suffix ".report.json" -> "dir/name.report.json".
std::string sibling_path(const std::string& path, const std::string& suffix);

}  // namespace hinfpde
