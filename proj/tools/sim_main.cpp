#include "sim/commands.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    CLI::App app{"committee-sim: online learning of two-layer soft committee machines"};
    app.require_subcommand(1);

    sim::cli::RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "run one experiment and write its trajectory");
    run->add_option("--config", run_args.config_path, "JSON config file");
    run->add_option("--scenario", run_args.scenario_name,
                    "named scenario (learnable_sgd, redundant_sgd, redundant_dropout, "
                    "singular_sgd, singular_dropout)");
    run->add_option("--set", run_args.overrides, "override, dotted path: key=value");
    run->add_option("--out", run_args.out_dir, "output directory")->required();

    sim::cli::RunArgs cmp_args;
    std::string variant_path;
    std::vector<std::uint64_t> seeds;
    CLI::App* cmp = app.add_subcommand("compare", "paired runs of two rules over several seeds");
    cmp->add_option("--config", cmp_args.config_path, "base JSON config file");
    cmp->add_option("--scenario", cmp_args.scenario_name, "named scenario as base");
    cmp->add_option("--set", cmp_args.overrides, "override applied to both configs");
    cmp->add_option("--variant", variant_path, "variant config (may differ only in rule)")
        ->required();
    cmp->add_option("--seeds", seeds, "comma-separated seed list (>= 3)")
        ->required()
        ->delimiter(',');
    cmp->add_option("--out", cmp_args.out_dir, "output directory")->required();

    std::string verify_out;
    int trials = 50;
    int max_m = 4;
    int max_k = 4;
    long long samples = 200000;
    std::uint64_t verify_seed = 1;
    CLI::App* verify = app.add_subcommand("verify", "analytic vs Monte-Carlo error check");
    verify->add_option("--trials", trials, "number of random states");
    verify->add_option("--max-m", max_m, "largest teacher width");
    verify->add_option("--max-k", max_k, "largest student width");
    verify->add_option("--samples", samples, "Monte-Carlo samples per trial");
    verify->add_option("--seed", verify_seed, "master seed");
    verify->add_option("--out", verify_out, "output directory")->required();

    sim::cli::RunArgs sweep_args;
    std::string param;
    std::vector<std::string> values;
    CLI::App* sweep = app.add_subcommand("sweep", "grid of runs over one config key");
    sweep->add_option("--config", sweep_args.config_path, "base JSON config file");
    sweep->add_option("--scenario", sweep_args.scenario_name, "named scenario as base");
    sweep->add_option("--set", sweep_args.overrides, "override applied to the base");
    sweep->add_option("--param", param, "dotted config key, e.g. rule.dropout.p or eta")
        ->required();
    sweep->add_option("--values", values, "comma-separated values")->required()->delimiter(',');
    sweep->add_option("--out", sweep_args.out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : sim::cli::kExitConfig;
    }

    if (run->parsed()) {
        return sim::cli::run_command(run_args);
    }
    if (cmp->parsed()) {
        return sim::cli::compare_command(cmp_args, variant_path, seeds);
    }
    if (verify->parsed()) {
        return sim::cli::verify_command(verify_out, trials, max_m, max_k, samples, verify_seed);
    }
    if (sweep->parsed()) {
        return sim::cli::sweep_command(sweep_args, param, values);
    }
    return sim::cli::kExitConfig;
}
