// kinbc: stability certificates, boundary-feedback design and simulation for
// linearized discrete-velocity kinetic models on boxes.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kinbc/app.hpp"

int main(int argc, char** argv) {
    CLI::App cli{"Boundary stabilization toolkit for discrete-velocity kinetic models"};
    cli.require_subcommand(1);

    int threads = 0;
    std::string output_dir;
    cli.add_option("--threads", threads, "Worker threads (default: KINBC_THREADS or 1)")->check(CLI::PositiveNumber);
    cli.add_option("--output-dir", output_dir, "Directory for reports and CSV files (overrides the config)");

    std::string config;
    auto* verify = cli.add_subcommand("verify", "Check the structural-stability decomposition");
    verify->add_option("config", config, "Run configuration")->required();
    auto* design = cli.add_subcommand("design", "Lyapunov certificate, gain bounds and admissibility");
    design->add_option("config", config, "Run configuration")->required();
    auto* simulate = cli.add_subcommand("simulate", "Run the upwind solver and fit the decay rate");
    simulate->add_option("config", config, "Run configuration")->required();
    auto* sweep = cli.add_subcommand("sweep", "Repeat simulate over a parameter range");
    std::string param;
    std::string range;
    sweep->add_option("config", config, "Run configuration")->required();
    sweep->add_option("--param", param, "k1, k2, k3, alpha or dt")->required();
    sweep->add_option("--range", range, "lo:hi:step or a comma-separated list")->required();

    for (auto* sub : {verify, design, simulate, sweep}) sub->fallthrough();

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : kinbc::kExitValidation;
    }

    kinbc::AppContext ctx;
    ctx.threads = 1;
    if (const char* env = std::getenv("KINBC_THREADS")) {
        try {
            ctx.threads = std::max(1, std::stoi(env));
        } catch (const std::exception&) {
            std::cerr << "warning: ignoring KINBC_THREADS='" << env << "'\n";
        }
    }
    if (threads > 0) ctx.threads = threads;
    if (!output_dir.empty()) ctx.output_dir = output_dir;

    if (verify->parsed()) return kinbc::cmd_verify(config, ctx);
    if (design->parsed()) return kinbc::cmd_design(config, ctx);
    if (simulate->parsed()) return kinbc::cmd_simulate(config, ctx);
    return kinbc::cmd_sweep(config, param, range, ctx);
}
