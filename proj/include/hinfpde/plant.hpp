#pragma once

// Plants as plain evaluators s -> G(s), usable by every sweep and by the
// synthesis and simulation drivers.

#include "hinfpde/euler_bernoulli.hpp"
#include "hinfpde/timoshenko.hpp"

#include <functional>
#include <variant>

namespace hinfpde {

using PlantFn = std::function<CMatrix(cplx)>;

/// Retries once at s (1 + 1e-9) when the exponential basis degenerates.
PlantFn timoshenko_plant(const TimoshenkoSpec& spec);
/// 1 x 1 matrix wrapper of eb_tf with the same retry rule.
PlantFn euler_plant(const EulerSpec& spec);

using PlantSpec = std::variant<TimoshenkoSpec, EulerSpec>;

PlantFn make_plant(const PlantSpec& spec);
int plant_inputs(const PlantSpec& spec);
int plant_outputs(const PlantSpec& spec);

/// ConfigError for configurations the Nyquist test cannot handle: an
/// undamped Timoshenko beam without pre-stabilizer has its whole pole string
/// on the imaginary axis.
void require_nyquist_applicable(const PlantSpec& spec);

}  // namespace hinfpde
