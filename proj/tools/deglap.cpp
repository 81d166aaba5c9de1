// deglap: numerical laboratory for the degenerate weighted p-Laplace problem.
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "deglap/common.hpp"
#include "deglap/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for degenerate weighted p-Laplace problems"};
    app.require_subcommand(1);

    struct Args {
        std::string config;
        std::string out;
        int parallel = 1;
    };
    Args args;

    const struct {
        const char* name;
        const char* desc;
    } commands[] = {
        {"solve", "minimize the discrete p-energy and write the solution field"},
        {"maxop", "fractional maximal field and its distribution curve"},
        {"norms", "Lorentz / generalized Lorentz / Morrey norms of a field"},
        {"weights", "log-oscillation, Muckenhoupt and A-infinity diagnostics"},
        {"verify", "run one inequality check and write its report"},
        {"sweep", "run a check across a parameter grid and write a CSV"},
    };
    for (const auto& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.desc);
        sub->add_option("--config", args.config, "experiment config (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--parallel", args.parallel, "worker threads for field scans");
        sub->add_option("--out", args.out, "output directory (overrides the config)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const deglap::ExperimentConfig cfg = deglap::load_config(
            app.get_subcommands().front()->get_name(), args.config, args.parallel, args.out);
        return deglap::run_experiment(cfg);
    } catch (const deglap::ConfigError& e) {
        std::fprintf(stderr, "deglap: config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "deglap: config error: %s\n", e.what());
        return 2;
    } catch (const deglap::NumericError& e) {
        std::fprintf(stderr, "deglap: numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "deglap: numerical failure: %s\n", e.what());
        return 3;
    }
}
