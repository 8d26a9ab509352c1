#include "commands.hpp"
#include "config.hpp"

#include "misciga/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace misciga;
using namespace misciga::cli;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string output_dir;
    std::string misc_dir;
    std::string mc_dir;
    std::vector<double> tolerances;
    long budget = 0;
    unsigned long long seed = 0;
    bool seed_set = false;
    bool budget_set = false;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("-c,--config", args.config_path, "experiment configuration (JSON)")
        ->required();
    sub->add_option("-o,--output-dir", args.output_dir, "override the output directory");
    sub->add_option("--tolerances", args.tolerances, "override the tolerance schedule");
    sub->add_option("--budget", args.budget, "override the solve budget")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", args.seed, "override the random seed");
}

ExperimentConfig load_with_overrides(const CommonArgs& args, const CLI::App* sub) {
    ExperimentConfig cfg = load_config(args.config_path);
    if (!args.output_dir.empty()) cfg.output_dir = args.output_dir;
    if (!args.misc_dir.empty()) cfg.misc_dir = args.misc_dir;
    if (!args.mc_dir.empty()) cfg.mc_dir = args.mc_dir;
    if (!args.tolerances.empty()) {
        for (std::size_t i = 0; i < args.tolerances.size(); ++i) {
            if (!(args.tolerances[i] > 0.0)) throw ConfigError("tolerances must be positive");
            if (i > 0 && args.tolerances[i] >= args.tolerances[i - 1])
                throw ConfigError("tolerance schedule must be strictly decreasing");
        }
        cfg.tolerances = args.tolerances;
    }
    if (sub->count("--budget")) cfg.budget = args.budget;
    if (sub->count("--seed")) cfg.seed = args.seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"misc-cli: multi-index stochastic collocation on isogeometric diffusion solvers"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* fit = app.add_subcommand("fit-rates", "fit spatial convergence and cost rates");
    add_common(fit, args);
    CLI::App* misc = app.add_subcommand("misc", "run the adaptive estimator over a tolerance schedule");
    add_common(misc, args);
    CLI::App* mc = app.add_subcommand("mc", "single-level Monte Carlo baseline");
    add_common(mc, args);
    CLI::App* conv = app.add_subcommand("convergence", "merge misc and mc results into an error-vs-work table");
    add_common(conv, args);
    conv->add_option("--misc-dir", args.misc_dir, "misc results directory");
    conv->add_option("--mc-dir", args.mc_dir, "mc results directory");

    CLI11_PARSE(app, argc, argv);

    const CLI::App* active = app.get_subcommands().front();
    try {
        const ExperimentConfig cfg = load_with_overrides(args, active);
        if (active == fit) return cmd_fit_rates(cfg);
        if (active == misc) return cmd_misc(cfg);
        if (active == mc) return cmd_mc(cfg);
        return cmd_convergence(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const AssemblyError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return exit_solver_failure;
    } catch (const EvaluationError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return exit_solver_failure;
    } catch (const GeometryError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return exit_solver_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_failure;
    }
}
