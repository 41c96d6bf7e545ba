#include "hinfpde/config.hpp"

#include "hinfpde/errors.hpp"

#include <Eigen/SVD>

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace hinfpde {

using nlohmann::json;

namespace {

void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

PeakClusterSpec peaks_from_json(const json& j) {
    check_keys(j, "peak_clusters", {"lo", "hi", "scan", "step", "half_count"});
    PeakClusterSpec p;
    read(j, "lo", p.lo);
    read(j, "hi", p.hi);
    read(j, "scan", p.scan);
    read(j, "step", p.step);
    read(j, "half_count", p.half_count);
    if (!(p.lo > 0 && p.hi > p.lo) || p.scan < 3 || !(p.step > 0) || p.half_count < 0)
        throw ConfigError("peak_clusters needs 0 < lo < hi, scan >= 3, step > 0, half_count >= 0");
    return p;
}

GridSpec grid_from_json(const json& j, const char* name) {
    check_keys(j, name, {"bands", "peak_clusters"});
    GridSpec g;
    g.bands = j.at("bands").get<std::vector<Band>>();
    if (g.bands.empty()) throw ConfigError(std::string("grid ") + name + " has no bands");
    if (j.contains("peak_clusters")) g.peaks = peaks_from_json(j.at("peak_clusters"));
    build_grid(g.bands, GridRole::D);  // validates the bands
    return g;
}

json grid_to_json(const GridSpec& g) {
    json j{{"bands", g.bands}};
    if (g.peaks)
        j["peak_clusters"] = {{"lo", g.peaks->lo},
                              {"hi", g.peaks->hi},
                              {"scan", g.peaks->scan},
                              {"step", g.peaks->step},
                              {"half_count", g.peaks->half_count}};
    return j;
}

FirstOrderWeight weight_from_json(const json& j, const char* name) {
    check_keys(j, name, {"b1", "b0", "a0"});
    FirstOrderWeight w{j.at("b1").get<double>(), j.at("b0").get<double>(), j.at("a0").get<double>()};
    w.validate();
    return w;
}

json weight_to_json(const FirstOrderWeight& w) { return {{"b1", w.b1}, {"b0", w.b0}, {"a0", w.a0}}; }

RunConfig parse(const json& j) {
    check_keys(j, "config", {"plant", "grids", "weights", "synthesis", "simulate"});
    RunConfig c;
    c.plant = plant_from_json(j.at("plant"));

    const json& g = j.at("grids");
    check_keys(g, "grids", {"S", "T", "D"});
    c.grid_S = grid_from_json(g.at("S"), "grids.S");
    c.grid_T = grid_from_json(g.at("T"), "grids.T");
    c.grid_D = grid_from_json(g.at("D"), "grids.D");

    const json& w = j.at("weights");
    check_keys(w, "weights", {"W1", "W2"});
    c.W1 = weight_from_json(w.at("W1"), "weights.W1");
    c.W2 = weight_from_json(w.at("W2"), "weights.W2");

    if (j.contains("synthesis")) {
        const json& s = j.at("synthesis");
        check_keys(s, "synthesis",
                   {"gamma", "delta", "mu", "n_k", "eps", "has_integrator", "band_lo", "seed", "max_iter"});
        SynthesisSection& y = c.synthesis;
        read(s, "gamma", y.gamma);
        read(s, "delta", y.delta);
        read(s, "mu", y.mu);
        read(s, "n_k", y.n_k);
        read(s, "eps", y.eps);
        read(s, "has_integrator", y.has_integrator);
        read(s, "band_lo", y.band_lo);
        read(s, "seed", y.seed);
        read(s, "max_iter", y.max_iter);
        if (!(y.gamma >= 1)) throw ConfigError("synthesis.gamma must be >= 1");
        if (!(y.delta > 0)) throw ConfigError("synthesis.delta must be positive");
        if (!(y.mu > 0 && y.mu < 1)) throw ConfigError("synthesis.mu must lie in (0, 1)");
        if (y.n_k < 1) throw ConfigError("synthesis.n_k must be >= 1");
        if (!(y.eps > 0)) throw ConfigError("synthesis.eps must be positive");
        if (y.max_iter < 0) throw ConfigError("synthesis.max_iter must be >= 0");
        if (!(y.band_lo >= 0)) throw ConfigError("synthesis.band_lo must be >= 0");
    }
    if (j.contains("simulate")) {
        const json& s = j.at("simulate");
        check_keys(s, "simulate", {"t_max", "samples", "shift", "omega_max", "nodes"});
        SimulateSection& y = c.simulate;
        read(s, "t_max", y.t_max);
        read(s, "samples", y.samples);
        read(s, "shift", y.shift);
        read(s, "omega_max", y.omega_max);
        read(s, "nodes", y.nodes);
        if (!(y.shift > 0) || !(y.omega_max > 0) || y.nodes < 3)
            throw ConfigError("simulate needs shift > 0, omega_max > 0 and nodes >= 3");
    }
    return c;
}

}  // namespace

ControllerStructure RunConfig::structure() const {
    ControllerStructure st;
    st.n_k = synthesis.n_k;
    st.n_y = plant_outputs(plant);
    st.n_u = plant_inputs(plant);
    st.eps = synthesis.eps;
    st.has_integrator = synthesis.has_integrator;
    return st;
}

PlantSpec plant_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("plant must be an object");
    const std::string family = j.at("family").get<std::string>();
    if (family == "timoshenko") {
        check_keys(j, "plant", {"family", "L", "rho", "K", "I_rho", "E", "I", "d_w", "d_phi", "D_w", "D_phi",
                                "alpha", "beta"});
        TimoshenkoSpec t;
        read(j, "L", t.L);
        read(j, "rho", t.rho);
        read(j, "K", t.Kshear);
        read(j, "I_rho", t.I_rho);
        read(j, "E", t.E);
        read(j, "I", t.I);
        read(j, "d_w", t.d_w);
        read(j, "d_phi", t.d_phi);
        read(j, "D_w", t.D_w);
        read(j, "D_phi", t.D_phi);
        read(j, "alpha", t.alpha);
        read(j, "beta", t.beta);
        t.validate();
        return t;
    }
    if (family == "euler_bernoulli") {
        check_keys(j, "plant", {"family", "L", "EI", "rhoA", "c_v", "c_kv", "K_a", "K_s", "x1", "x2"});
        EulerSpec e;
        read(j, "L", e.L);
        read(j, "EI", e.EI);
        read(j, "rhoA", e.rhoA);
        read(j, "c_v", e.c_v);
        read(j, "c_kv", e.c_kv);
        read(j, "K_a", e.K_a);
        read(j, "K_s", e.K_s);
        read(j, "x1", e.x1);
        read(j, "x2", e.x2);
        e.validate();
        return e;
    }
    throw ConfigError("plant.family must be 'timoshenko' or 'euler_bernoulli'");
}

json plant_to_json(const PlantSpec& p) {
    if (const auto* t = std::get_if<TimoshenkoSpec>(&p))
        return {{"family", "timoshenko"}, {"L", t->L},         {"rho", t->rho},     {"K", t->Kshear},
                {"I_rho", t->I_rho},      {"E", t->E},         {"I", t->I},         {"d_w", t->d_w},
                {"d_phi", t->d_phi},      {"D_w", t->D_w},     {"D_phi", t->D_phi}, {"alpha", t->alpha},
                {"beta", t->beta}};
    const auto& e = std::get<EulerSpec>(p);
    return {{"family", "euler_bernoulli"},
            {"L", e.L},
            {"EI", e.EI},
            {"rhoA", e.rhoA},
            {"c_v", e.c_v},
            {"c_kv", e.c_kv},
            {"K_a", e.K_a},
            {"K_s", e.K_s},
            {"x1", e.x1},
            {"x2", e.x2}};
}

RunConfig config_from_json(const json& j) {
    try {
        return parse(j);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

json to_json(const RunConfig& c) {
    const SynthesisSection& s = c.synthesis;
    const SimulateSection& m = c.simulate;
    return {{"plant", plant_to_json(c.plant)},
            {"grids", {{"S", grid_to_json(c.grid_S)}, {"T", grid_to_json(c.grid_T)}, {"D", grid_to_json(c.grid_D)}}},
            {"weights", {{"W1", weight_to_json(c.W1)}, {"W2", weight_to_json(c.W2)}}},
            {"synthesis",
             {{"gamma", s.gamma},
              {"delta", s.delta},
              {"mu", s.mu},
              {"n_k", s.n_k},
              {"eps", s.eps},
              {"has_integrator", s.has_integrator},
              {"band_lo", s.band_lo},
              {"seed", s.seed},
              {"max_iter", s.max_iter}}},
            {"simulate",
             {{"t_max", m.t_max},
              {"samples", m.samples},
              {"shift", m.shift},
              {"omega_max", m.omega_max},
              {"nodes", m.nodes}}}};
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

FrequencyGrid realize_grid(const GridSpec& spec, GridRole role, const PlantFn& plant) {
    FrequencyGrid g = build_grid(spec.bands, role);
    if (!spec.peaks) return g;
    const PeakClusterSpec& p = *spec.peaks;
    auto mag = [&](double w) { return Eigen::JacobiSVD<CMatrix>(plant(cplx(0.0, w))).singularValues()[0]; };
    const std::vector<Resonance> peaks = find_resonances(mag, p.lo, p.hi, p.scan);
    return insert_nodes(g, peak_cluster_nodes(peaks, p.step, p.half_count));
}

std::string content_hash(const json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string content_hash(const std::vector<double>& values) {
    std::uint64_t h = 1469598103934665603ULL;
    for (double v : values) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(&v);
        for (std::size_t i = 0; i < sizeof v; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace hinfpde
