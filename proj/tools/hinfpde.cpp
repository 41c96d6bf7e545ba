#include "hinfpde/commands.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Structured H-infinity design for beam models from exact frequency data"};
    app.require_subcommand(1);

    hinfpde::CommandOptions o;
    std::uint64_t seed = 0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--jobs", o.jobs, "worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
        sub->add_flag("--no-cache", o.no_cache, "recompute plant samples instead of using the disk cache");
        sub->add_option("--cache-dir", o.cache_dir, "plant sample cache directory");
    };

    auto* sweep = app.add_subcommand("sweep", "evaluate the plant on the union of all grids, write CSV");
    common(sweep);
    sweep->add_option("--out", o.out, "CSV output")->required();

    auto* certify = app.add_subcommand("certify", "Nyquist certificate and constraint check for a controller");
    common(certify);
    certify->add_option("--controller", o.controller, "controller JSON")->required();
    certify->add_option("--out", o.out, "report JSON (also printed)");

    auto* synth = app.add_subcommand("synthesize", "run the nonsmooth synthesis");
    common(synth);
    synth->add_option("--out", o.out, "controller JSON; report and log are written next to it")->required();
    auto* seed_opt = synth->add_option("--seed", seed, "initializer seed (overrides the config)");

    auto* sim = app.add_subcommand("simulate", "closed-loop step responses of a certified loop");
    common(sim);
    sim->add_option("--controller", o.controller, "controller JSON")->required();
    sim->add_option("--out", o.out, "step response CSV; metrics JSON is written next to it")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    if (seed_opt->count() > 0) o.seed = seed;

    if (sweep->parsed()) return hinfpde::cmd_sweep(o, std::cout, std::cerr);
    if (certify->parsed()) return hinfpde::cmd_certify(o, std::cout, std::cerr);
    if (synth->parsed()) return hinfpde::cmd_synthesize(o, std::cout, std::cerr);
    return hinfpde::cmd_simulate(o, std::cout, std::cerr);
}
