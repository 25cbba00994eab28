// Command-line front end: run one configuration, sweep the surface-reaction
// rate constant, or validate and echo a configuration file.
//
// Exit codes: 0 success, 1 configuration or usage errors, 2 runtime/solver
// failure.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "memflow/driver.hpp"

namespace {

int do_validate(const std::string& path) {
    const memflow::SimulationConfig cfg = memflow::load_config(path);
    std::fputs(memflow::echo_config(cfg).c_str(), stdout);
    return 0;
}

int do_run(memflow::SimulationConfig cfg, const std::string& out_dir) {
    memflow::Simulation sim(cfg);
    sim.initialize();
    const memflow::RunSummary rs = sim.run(out_dir);
    std::printf("steps            %ld (dt = %.6g s, t_end = %.6g s)\n", rs.n_steps, rs.dt,
                rs.t_final);
    std::printf("recovery         %.6g\n", rs.recovery);
    std::printf("mean permeation  %.6g m/s\n", rs.v_mean);
    std::printf("mean porosity    %.6g\n", rs.eps_mean);
    std::printf("mean permeability %.6g m^2\n", rs.k_mean);
    std::printf("outputs          %s\n", out_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-volume reverse-osmosis channel with a scaling membrane"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    double kinetics_override = std::nan("");
    bool frozen_concentration = false;
    std::vector<double> sweep_kinetics;

    CLI::App* cmd_run = app.add_subcommand("run", "integrate one configuration");
    cmd_run->add_option("--config", config_path, "configuration file")->required();
    cmd_run->add_option("--out", out_dir, "output directory (default: out)");
    cmd_run->add_option("--kinetics", kinetics_override,
                        "override every reaction rate constant");
    cmd_run->add_flag("--frozen-concentration", frozen_concentration,
                      "freeze the concentration fields for this run");

    CLI::App* cmd_sweep = app.add_subcommand("sweep", "run once per rate constant");
    cmd_sweep->add_option("--config", config_path, "configuration file")->required();
    cmd_sweep->add_option("--out", out_dir, "output directory (default: out)");
    cmd_sweep->add_option("--kinetics", sweep_kinetics, "rate constants, comma separated")
        ->required()
        ->delimiter(',');

    CLI::App* cmd_validate = app.add_subcommand("validate", "check and echo a configuration");
    cmd_validate->add_option("--config", config_path, "configuration file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    memflow::SimulationConfig cfg;
    try {
        cfg = memflow::load_config(config_path);
        if (cmd_run->parsed()) {
            if (!std::isnan(kinetics_override)) {
                for (auto& r : cfg.reactions) r.K = kinetics_override;
                memflow::validate_config(cfg);
            }
            if (frozen_concentration) {
                cfg.frozen_concentration = true;
                memflow::validate_config(cfg);
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    }

    try {
        if (cmd_validate->parsed()) return do_validate(config_path);
        if (cmd_run->parsed()) return do_run(cfg, out_dir);
        const int failures = memflow::run_sweep(cfg, sweep_kinetics, out_dir);
        if (failures > 0) {
            std::fprintf(stderr, "%d of %zu sweep runs failed (see comparison.csv)\n",
                         failures, sweep_kinetics.size());
            return 2;
        }
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
