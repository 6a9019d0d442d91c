#include "lporl/cli.hpp"

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lporl/coverage.hpp"
#include "lporl/errors.hpp"
#include "lporl/harness.hpp"
#include "lporl/io.hpp"

namespace lporl {

namespace {

Policy policy_from_spec(const std::string& spec, const LinearMDP& mdp, Setting setting) {
    if (spec == "uniform") return uniform_policy(mdp.num_states, mdp.num_actions);
    if (spec == "optimal") return optimal_policy(mdp, setting).first;
    if (spec.rfind("eps:", 0) == 0) {
        const double eps = std::stod(spec.substr(4));
        return eps_mix_policy(optimal_policy(mdp, setting).first, eps);
    }
    throw ConfigInvalid("policy spec must be uniform, optimal or eps:<value>");
}

int run_gen_mdp(int states, int actions, int dim, std::uint64_t seed, double gamma,
                const std::string& kind, const std::string& out) {
    const LinearMDP mdp = kind == "tabular"
                              ? random_tabular_mdp(states, actions, seed, gamma)
                              : random_linear_mdp(states, actions, dim, seed, gamma);
    save_mdp(mdp, out);
    std::cout << "wrote " << out << " (" << states << " states, " << actions
              << " actions, dim " << mdp.dim << ")\n";
    return 0;
}

int run_solve(const std::string& config_path, std::int64_t seed_override,
              const std::string& out_override) {
    ExperimentConfig config = load_experiment_config(config_path);
    if (!out_override.empty()) config.output_dir = out_override;
    std::vector<std::uint64_t> seeds = config.seeds;
    if (seed_override >= 0) seeds = {static_cast<std::uint64_t>(seed_override)};
    for (std::uint64_t seed : seeds) {
        const RunArtifacts artifacts = run_experiment(config, seed);
        persist_run(artifacts, config.output_dir, seed);
        std::cout << artifacts.summary.dump(2) << "\n";
    }
    return 0;
}

int run_sweep(const std::string& config_path, const std::string& out_override) {
    ExperimentConfig config = load_experiment_config(config_path);
    if (!out_override.empty()) config.output_dir = out_override;
    const SweepResult result = sweep(config);
    std::cout << result.aggregate_csv;
    int failures = 0;
    for (const RunArtifacts& run : result.runs)
        if (run.failed) ++failures;
    if (failures > 0)
        std::cerr << failures << " of " << result.runs.size() << " runs failed\n";
    return 0;
}

int run_coverage(const std::string& mdp_path, const std::string& behavior_spec,
                 const std::string& target_spec, const std::string& setting_name,
                 const std::string& out) {
    const LinearMDP mdp = load_mdp(mdp_path);
    const Setting setting =
        setting_name == "average" ? Setting::average : Setting::discounted;
    const Policy behavior = policy_from_spec(behavior_spec, mdp, setting);
    const Policy target = policy_from_spec(target_spec, mdp, setting);
    const CoverageReport report = coverage_report(mdp, behavior, target, setting);

    Json j;
    j["c_phi_half"] = report.c_phi_half;
    j["c_phi_one"] = report.c_phi_one;
    j["c_diamond"] = report.c_diamond;
    j["c_dagger"] = report.c_dagger;
    if (!std::isnan(report.chi_square)) j["chi_square"] = report.chi_square;
    j["variance_term"] = report.variance_term;
    j["dim"] = report.dim;
    j["ordering_dagger_diamond"] = report.ordering_dagger_diamond;
    j["ordering_diamond_d_dagger"] = report.ordering_diamond_d_dagger;
    j["ordering_half_diamond"] = report.ordering_half_diamond;
    const std::string text = j.dump(2) + "\n";
    if (out.empty())
        std::cout << text;
    else
        write_text_file(out, text);
    return 0;
}

int run_diagnose(const std::string& config_path, std::int64_t seed_override) {
    ExperimentConfig config = load_experiment_config(config_path);
    const std::uint64_t seed =
        seed_override >= 0 ? static_cast<std::uint64_t>(seed_override) : config.seeds[0];
    const RunArtifacts artifacts = run_experiment(config, seed);
    const Json& gap = artifacts.summary.at("gap_report");
    Json j;
    j["gap_report"] = gap;
    j["suboptimality"] = artifacts.suboptimality;
    double terms = gap.at("term_theta").get<double>() + gap.at("term_beta").get<double>() +
                   gap.at("term_pi").get<double>();
    if (gap.contains("term_rho")) terms += gap.at("term_rho").get<double>();
    j["identity_gap_vs_subopt"] =
        std::abs(gap.at("gap").get<double>() - gap.at("suboptimality").get<double>());
    j["identity_gap_vs_terms"] = std::abs(gap.at("gap").get<double>() - terms);
    std::cout << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Offline primal-dual solver for linear MDPs"};
    app.require_subcommand(1);

    // gen-mdp
    auto* gen = app.add_subcommand("gen-mdp", "Generate a random linear MDP file");
    int states = 5, actions = 2, dim = 4;
    std::uint64_t gen_seed = 0;
    double gamma = 0.9;
    std::string kind = "linear", gen_out = "mdp.json";
    gen->add_option("--states", states)->required();
    gen->add_option("--actions", actions)->required();
    gen->add_option("--dim", dim, "feature dimension (linear kind only)");
    gen->add_option("--seed", gen_seed)->required();
    gen->add_option("--gamma", gamma);
    gen->add_option("--kind", kind)->check(CLI::IsMember({"linear", "tabular"}));
    gen->add_option("--out", gen_out)->required();

    // solve
    auto* solve = app.add_subcommand("solve", "Run one experiment from a config file");
    std::string solve_config;
    std::int64_t solve_seed = -1;
    std::string solve_out;
    solve->add_option("--config", solve_config)->required();
    solve->add_option("--seed", solve_seed, "override the config seed list");
    solve->add_option("--out", solve_out, "override output_dir");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a config's sweep grid");
    std::string sweep_config, sweep_out;
    sweep_cmd->add_option("--config", sweep_config)->required();
    sweep_cmd->add_option("--out", sweep_out, "override output_dir");

    // coverage
    auto* cov = app.add_subcommand("coverage", "Coverage-ratio report for an MDP file");
    std::string cov_mdp, cov_behavior = "uniform", cov_target = "optimal";
    std::string cov_setting = "discounted", cov_out;
    cov->add_option("--mdp", cov_mdp)->required();
    cov->add_option("--behavior", cov_behavior, "uniform | optimal | eps:<e>");
    cov->add_option("--target", cov_target, "uniform | optimal | eps:<e>");
    cov->add_option("--setting", cov_setting)
        ->check(CLI::IsMember({"discounted", "average"}));
    cov->add_option("--out", cov_out);

    // diagnose
    auto* diag = app.add_subcommand("diagnose", "Run and print duality-gap identities");
    std::string diag_config;
    std::int64_t diag_seed = -1;
    diag->add_option("--config", diag_config)->required();
    diag->add_option("--seed", diag_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed())
            return run_gen_mdp(states, actions, dim, gen_seed, gamma, kind, gen_out);
        if (solve->parsed()) return run_solve(solve_config, solve_seed, solve_out);
        if (sweep_cmd->parsed()) return run_sweep(sweep_config, sweep_out);
        if (cov->parsed())
            return run_coverage(cov_mdp, cov_behavior, cov_target, cov_setting, cov_out);
        if (diag->parsed()) return run_diagnose(diag_config, diag_seed);
    } catch (const ConfigInvalid& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace lporl
