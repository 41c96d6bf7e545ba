#include "hinfpde/plant.hpp"

#include "hinfpde/errors.hpp"

namespace hinfpde {

namespace {

template <class Eval>
auto with_retry(Eval eval, cplx s) -> decltype(eval(s)) {
    try {
        return eval(s);
    } catch (const DomainError&) {
        if (s == cplx(0.0, 0.0)) throw;
        return eval(s * (1.0 + 1e-9));
    }
}

}  // namespace

PlantFn timoshenko_plant(const TimoshenkoSpec& spec) {
    spec.validate();
    return [spec](cplx s) { return with_retry([&](cplx z) { return timo_tf(spec, z); }, s); };
}

PlantFn euler_plant(const EulerSpec& spec) {
    spec.validate();
    return [spec](cplx s) {
        CMatrix g(1, 1);
        g(0, 0) = with_retry([&](cplx z) { return eb_tf(spec, z); }, s);
        return g;
    };
}

PlantFn make_plant(const PlantSpec& spec) {
    if (const auto* t = std::get_if<TimoshenkoSpec>(&spec)) return timoshenko_plant(*t);
    return euler_plant(std::get<EulerSpec>(spec));
}

int plant_inputs(const PlantSpec& spec) { return std::holds_alternative<TimoshenkoSpec>(spec) ? 2 : 1; }
int plant_outputs(const PlantSpec& spec) { return plant_inputs(spec); }

void require_nyquist_applicable(const PlantSpec& spec) {
    if (const auto* t = std::get_if<TimoshenkoSpec>(&spec)) {
        if (!t->damped() && !t->prestabilized())
            throw ConfigError(
                "undamped Timoshenko beam without pre-stabilizer: its poles lie on the imaginary axis and the "
                "Nyquist test does not apply; set alpha, beta > 0");
    } else {
        const auto& e = std::get<EulerSpec>(spec);
        if (e.c_v <= 0 && e.c_kv <= 0)
            throw ConfigError("undamped Euler-Bernoulli beam has poles on the imaginary axis; add damping");
    }
}

}  // namespace hinfpde
