#include "hinfpde/commands.hpp"

#include "hinfpde/controller_io.hpp"
#include "hinfpde/errors.hpp"
#include "hinfpde/nyquist.hpp"
#include "hinfpde/simulate.hpp"
#include "hinfpde/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hinfpde {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr char kCacheMagic[8] = {'H', 'I', 'N', 'F', 'S', 'M', 'P', '1'};

void apply_jobs(int jobs) {
#ifdef _OPENMP
    if (jobs > 0) omp_set_num_threads(jobs);
#else
    (void)jobs;
#endif
}

std::string format_omega(cplx s) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "s = %.9g%+.9gj", s.real(), s.imag());
    return buf;
}

bool read_cache(const fs::path& path, const std::vector<double>& nodes, SampledResponse& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    char magic[8];
    std::uint64_t n = 0, rows = 0, cols = 0;
    in.read(magic, sizeof magic);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&rows), sizeof rows);
    in.read(reinterpret_cast<char*>(&cols), sizeof cols);
    if (!in || std::memcmp(magic, kCacheMagic, sizeof magic) != 0 || n != nodes.size() || rows == 0 || cols == 0)
        return false;
    std::vector<double> omega(n);
    in.read(reinterpret_cast<char*>(omega.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in || omega != nodes) return false;
    SampledResponse r(omega, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::vector<double> buf(2 * rows * cols);
    for (std::size_t k = 0; k < n; ++k) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
        if (!in) return false;
        CMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        std::size_t p = 0;
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j, p += 2) m(i, j) = cplx(buf[p], buf[p + 1]);
        r.set(k, m);
    }
    out = std::move(r);
    return true;
}

// Best effort: a cache that cannot be written only costs a recomputation.
void write_cache(const fs::path& path, const SampledResponse& r) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    std::random_device rd;
    const fs::path tmp = path.string() + ".tmp" + std::to_string(rd());
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) return;
        const std::uint64_t n = r.size(), rows = static_cast<std::uint64_t>(r.rows()),
                            cols = static_cast<std::uint64_t>(r.cols());
        out.write(kCacheMagic, sizeof kCacheMagic);
        out.write(reinterpret_cast<const char*>(&n), sizeof n);
        out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
        out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
        out.write(reinterpret_cast<const char*>(r.omega().data()), static_cast<std::streamsize>(n * sizeof(double)));
        std::vector<double> buf;
        for (std::size_t k = 0; k < n; ++k) {
            buf.clear();
            const CMatrix m = r.at(k);
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                for (Eigen::Index j = 0; j < m.cols(); ++j) {
                    buf.push_back(m(i, j).real());
                    buf.push_back(m(i, j).imag());
                }
            out.write(reinterpret_cast<const char*>(buf.data()),
                      static_cast<std::streamsize>(buf.size() * sizeof(double)));
        }
        if (!out) {
            out.close();
            fs::remove(tmp, ec);
            return;
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) fs::remove(tmp, ec);
}

struct Loaded {
    RunConfig cfg;
    PlantFn plant;
};

Loaded load(const CommandOptions& o) {
    if (o.config.empty()) throw ConfigError("--config is required");
    Loaded l{load_config(o.config), {}};
    l.plant = make_plant(l.cfg.plant);
    return l;
}

struct Certificate {
    NyquistResult gate;
    double s_norm = 0.0;
    double rho = 0.0;
    double zeta = 0.0;
    bool stable = false;     // winding 0, certified
    bool all_pass = false;   // stable and every constraint met
};

void check_dimensions(const ControllerParams& x, const RunConfig& cfg) {
    if (x.structure.n_y != plant_outputs(cfg.plant) || x.structure.n_u != plant_inputs(cfg.plant))
        throw ConfigError("controller dimensions do not match the plant (" + std::to_string(x.structure.n_u) + "x" +
                          std::to_string(x.structure.n_y) + " controller)");
}

Certificate certify(const Loaded& l, const ControllerParams& x, const CommandOptions& o) {
    const FrequencyGrid D = realize_grid(l.cfg.grid_D, GridRole::D, l.plant);
    PlantSampler G(l.plant, cached_plant_samples(l.cfg.plant, l.plant, D.nodes, o.cache_dir, !o.no_cache));
    Certificate c;
    GateOptions gopt;
    gopt.refine_factor = 8.0;
    c.gate = stability_gate(G, x, gopt);
    c.rho = spectral_radius(x);
    c.zeta = min_damping(x);
    c.stable = c.gate.stable && c.gate.certified;
    c.s_norm = std::numeric_limits<double>::infinity();
    try {
        const ClosedLoopMaps maps = closed_loop_maps(G.on_grid(), [&](cplx s) { return controller_response(x, s); });
        c.s_norm = sampled_hinf_norm(maps.S, std::nullopt, 0.0, std::numeric_limits<double>::infinity());
    } catch (const MarginalStabilityError&) {
    }
    const SynthesisSection& y = l.cfg.synthesis;
    c.all_pass = c.stable && c.s_norm <= y.gamma * (1.0 + 1e-3) && c.rho <= y.delta && c.zeta >= y.mu;
    return c;
}

json certificate_json(const Certificate& c, const RunConfig& cfg) {
    const SynthesisSection& y = cfg.synthesis;
    return {{"winding", c.gate.winding},
            {"stable", c.gate.stable},
            {"certified", c.gate.certified},
            {"min_abs_f", c.gate.min_abs_f},
            {"min_sigma_min", c.gate.min_sigma_min},
            {"nodes", c.gate.omega.size()},
            {"s_norm_D", c.s_norm},
            {"gamma", y.gamma},
            {"rho", c.rho},
            {"delta", y.delta},
            {"zeta", c.zeta},
            {"mu", y.mu},
            {"message", c.gate.message},
            {"pass", c.all_pass}};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw ConfigError("failed writing '" + path + "'");
}

template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        err << "error: plant evaluation failed at " << format_omega(e.where()) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

std::string sibling_path(const std::string& path, const std::string& suffix) {
    fs::path p(path);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

std::vector<double> union_nodes(const std::vector<const FrequencyGrid*>& grids) {
    std::vector<double> all;
    for (const FrequencyGrid* g : grids) all.insert(all.end(), g->nodes.begin(), g->nodes.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
}

SampledResponse cached_plant_samples(const PlantSpec& spec, const PlantFn& plant, const std::vector<double>& nodes,
                                     const std::string& cache_dir, bool use_cache) {
    if (!use_cache || cache_dir.empty()) return sample_response(nodes, plant);
    const fs::path path = fs::path(cache_dir) / (content_hash(plant_to_json(spec)) + "-" + content_hash(nodes) + ".bin");
    SampledResponse r;
    if (read_cache(path, nodes, r)) return r;
    r = sample_response(nodes, plant);
    write_cache(path, r);
    return r;
}

int cmd_sweep(const CommandOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        apply_jobs(o.jobs);
        if (o.out.empty()) throw ConfigError("--out is required");
        const Loaded l = load(o);
        const FrequencyGrid S = realize_grid(l.cfg.grid_S, GridRole::S, l.plant);
        const FrequencyGrid T = realize_grid(l.cfg.grid_T, GridRole::T, l.plant);
        const FrequencyGrid D = realize_grid(l.cfg.grid_D, GridRole::D, l.plant);
        const std::vector<double> nodes = union_nodes({&S, &T, &D});

        std::FILE* fp = std::fopen(o.out.c_str(), "w");
        if (!fp) throw ConfigError("cannot open '" + o.out + "' for writing");
        std::fclose(fp);

        const SampledResponse G = cached_plant_samples(l.cfg.plant, l.plant, nodes, o.cache_dir, !o.no_cache);
        fp = std::fopen(o.out.c_str(), "w");
        if (!fp) throw ConfigError("cannot open '" + o.out + "' for writing");
        std::fprintf(fp, "omega");
        for (Eigen::Index i = 0; i < G.rows(); ++i)
            for (Eigen::Index j = 0; j < G.cols(); ++j)
                std::fprintf(fp, ",re_G%d%d,im_G%d%d", int(i + 1), int(j + 1), int(i + 1), int(j + 1));
        std::fprintf(fp, "\n");
        for (std::size_t k = 0; k < G.size(); ++k) {
            std::fprintf(fp, "%.17g", G.omega(k));
            for (Eigen::Index i = 0; i < G.rows(); ++i)
                for (Eigen::Index j = 0; j < G.cols(); ++j) {
                    const cplx v = G.entry(k, i, j);
                    std::fprintf(fp, ",%.17g,%.17g", v.real(), v.imag());
                }
            std::fprintf(fp, "\n");
        }
        if (std::fclose(fp) != 0) throw ConfigError("failed writing '" + o.out + "'");
        out << "wrote " << G.size() << " frequencies to " << o.out << "\n";
        return 0;
    });
}

int cmd_certify(const CommandOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        apply_jobs(o.jobs);
        const Loaded l = load(o);
        require_nyquist_applicable(l.cfg.plant);
        if (o.controller.empty()) throw ConfigError("--controller is required");
        const ControllerParams x = load_controller(o.controller);
        check_dimensions(x, l.cfg);
        const Certificate c = certify(l, x, o);
        const json report = certificate_json(c, l.cfg);
        out << report.dump(2) << "\n";
        if (!o.out.empty()) write_text(o.out, report.dump(2) + "\n");
        if (!c.stable) err << "certificate: closed loop not certified stable\n";
        return c.all_pass ? 0 : 1;
    });
}

int cmd_synthesize(const CommandOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        apply_jobs(o.jobs);
        if (o.out.empty()) throw ConfigError("--out is required");
        const Loaded l = load(o);
        require_nyquist_applicable(l.cfg.plant);
        const SynthesisSection& y = l.cfg.synthesis;
        const FrequencyGrid S = realize_grid(l.cfg.grid_S, GridRole::S, l.plant);
        const FrequencyGrid T = realize_grid(l.cfg.grid_T, GridRole::T, l.plant);
        const FrequencyGrid D = realize_grid(l.cfg.grid_D, GridRole::D, l.plant);
        const bool cache = !o.no_cache;
        SynthesisProblem prob =
            make_problem(l.plant, cached_plant_samples(l.cfg.plant, l.plant, S.nodes, o.cache_dir, cache),
                         cached_plant_samples(l.cfg.plant, l.plant, T.nodes, o.cache_dir, cache),
                         cached_plant_samples(l.cfg.plant, l.plant, D.nodes, o.cache_dir, cache), l.cfg.W1, l.cfg.W2,
                         y.gamma, y.delta, y.mu, y.band_lo, l.cfg.structure());

        const std::string log_path = sibling_path(o.out, ".log.jsonl");
        std::ofstream log(log_path);
        if (!log) throw ConfigError("cannot open '" + log_path + "' for writing");

        SynthesisReport rep;
        try {
            const ControllerParams x0 = default_initializer(prob, o.seed.value_or(y.seed));
            SynthesisOptions opts;
            opts.max_iter = y.max_iter;
            opts.on_iteration = [&](const IterationRecord& r) { log << to_json(r).dump() << "\n" << std::flush; };
            rep = solve(prob, x0, opts);
        } catch (const ConfigError& e) {
            err << "synthesis failed: " << e.what() << "\n";
            return 1;
        }
        save_controller(o.out, rep.params);
        json report = report_json(rep);
        report["controller"] = o.out;
        if (rep.params.structure.n_u == 1 && rep.params.structure.n_y == 1)
            report["transfer_function"] = format_transfer_function(transfer_function(rep.params));
        write_text(sibling_path(o.out, ".report.json"), report.dump(2) + "\n");

        out << "status " << to_string(rep.status) << ", F = " << rep.objective << ", ||S||_D = " << rep.s_norm
            << ", rho = " << rep.rho << ", zeta = " << rep.zeta << ", winding " << rep.certificate.winding
            << (rep.certificate.certified ? " (certified)" : " (not certified)") << ", " << rep.iterations
            << " iterations\n";
        if (report.contains("transfer_function")) out << "K(s) = " << report["transfer_function"].get<std::string>() << "\n";
        const bool ok = rep.feasible && rep.certificate.stable && rep.certificate.certified;
        return ok ? 0 : 1;
    });
}

int cmd_simulate(const CommandOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        apply_jobs(o.jobs);
        if (o.out.empty()) throw ConfigError("--out is required");
        const Loaded l = load(o);
        require_nyquist_applicable(l.cfg.plant);
        if (o.controller.empty()) throw ConfigError("--controller is required");
        const ControllerParams x = load_controller(o.controller);
        check_dimensions(x, l.cfg);
        const SimulateSection& m = l.cfg.simulate;
        const std::vector<double> t = time_grid(m.t_max, m.samples);

        const Certificate c = certify(l, x, o);
        if (!c.stable) {
            err << "refusing to simulate: closed loop not certified stable (winding " << c.gate.winding << ")\n";
            return 1;
        }
        BromwichOptions b;
        b.a = m.shift;
        b.omega_max = m.omega_max;
        b.nodes = m.nodes;
        const StepResponse r = closed_loop_step(l.plant, [&](cplx s) { return controller_response(x, s); }, t, b);
        write_step_csv(o.out, r);
        json metrics = metrics_json(r);
        metrics["certificate"] = certificate_json(c, l.cfg);
        write_text(sibling_path(o.out, ".metrics.json"), metrics.dump(2) + "\n");
        out << metrics.dump(2) << "\n";
        return 0;
    });
}

}  // namespace hinfpde
