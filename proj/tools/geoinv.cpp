// geoinv: config-driven front end. One experiment per invocation.
#include "geoinv/cli/app.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    namespace cli = geoinv::cli;

    CLI::App app{"geoinv: inverse obstacle lab for coupled elliptic systems"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    std::size_t jobs = 1;
    std::uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "run the experiment described by a config");
    run->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    auto* run_out = run->add_option("--out", out, "output directory (overrides \"output\")");
    run->add_option("--jobs", jobs, "worker threads for sigma sweeps")->check(CLI::Range(1, 256));
    auto* run_seed = run->add_option("--seed", seed, "random seed (overrides \"seed\")");

    auto* validate = app.add_subcommand("validate", "schema and invariant checks, no solves");
    validate->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    auto* validate_out = validate->add_option("--out", out, "directory holding the mu1 cache");

    auto* plan = app.add_subcommand("plan", "expand plan.vary lists into one config per combination");
    plan->add_option("--config", config, "config with a plan block")->required()->check(CLI::ExistingFile);
    plan->add_option("--out", out, "directory for the expanded configs")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // usage errors share the schema exit code
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kExitSchema;
    }

    if (*run) {
        cli::RunOptions opts;
        if (*run_out) opts.out = out;
        if (*run_seed) opts.seed = seed;
        opts.jobs = jobs;
        return cli::run(config, opts, std::cout, std::cerr);
    }
    if (*validate) {
        std::optional<std::filesystem::path> cache;
        if (*validate_out) cache = std::filesystem::path(out) / "cache";
        return cli::validate(config, cache, std::cout);
    }
    return cli::plan(config, out, std::cout, std::cerr);
}
