#include "glab/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace glab;

namespace {

int report_config_error(const ConfigError& e, const std::string& path) {
    std::cerr << path;
    if (e.line > 0) std::cerr << ":" << e.line << ":" << e.column;
    std::cerr << ": error: " << e.what() << "\n";
    return 2;
}

int report_precondition(const PreconditionError& e) {
    std::cerr << "precondition violated [" << e.constraint << "]: " << e.what() << "\n";
    return 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"glab: thermal Lindbladian sampler laboratory"};
    app.require_subcommand(1);
    int workers = 0;
    std::string out_dir;
    unsigned long long seed = 0;
    app.add_option("--workers", workers, "worker threads (default: available parallelism)")->check(CLI::NonNegativeNumber);
    app.add_option("--out", out_dir, "output directory (overrides output_dir in the config)");
    auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides the config)");

    std::string path;
    auto* run = app.add_subcommand("run", "run the experiment in a config file");
    run->add_option("config", path, "config file")->required();
    auto* val = app.add_subcommand("validate", "parse and validate a config without computing");
    val->add_option("config", path, "config file")->required();
    auto* list = app.add_subcommand("list-experiments", "print the experiment catalog");

    for (auto* s : {run, val, list}) s->fallthrough();
    CLI11_PARSE(app, argc, argv);

    if (list->parsed()) {
        for (const auto& e : experiment_catalog()) std::cout << e.name << "\t" << e.description << "\n";
        return 0;
    }
    try {
        ExperimentConfig cfg = load_config(path);
        if (val->parsed()) {
            validate_config(cfg);
            std::cout << "ok\n";
            return 0;
        }
        RunOptions opt;
        opt.workers = workers;
        opt.out_dir = out_dir;
        opt.seed_set = seed_opt->count() > 0;
        opt.seed = seed;
        RunOutcome r = run_experiment(cfg, opt);
        for (const auto& c : r.checks) std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
        for (const auto& f : r.files) std::cout << "wrote " << f << "\n";
        return r.all_pass() ? 0 : 1;
    } catch (const ConfigError& e) {
        return report_config_error(e, path);
    } catch (const PreconditionError& e) {
        return report_precondition(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
