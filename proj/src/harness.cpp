#include "lporl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <thread>

#include "lporl/coverage.hpp"
#include "lporl/errors.hpp"
#include "lporl/pd_average.hpp"
#include "lporl/pd_discounted.hpp"

namespace lporl {

namespace {

void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* key : allowed)
            if (it.key() == key) { ok = true; break; }
        if (!ok)
            throw ConfigInvalid("unknown key \"" + it.key() + "\" in " + where);
    }
}

LinearMDP build_mdp(const Json& spec) {
    reject_unknown_keys(spec, {"file", "inline", "tabular_random", "linear_random"},
                        "mdp");
    if (spec.size() != 1) throw ConfigInvalid("mdp must have exactly one variant key");
    if (spec.contains("file")) return load_mdp(spec.at("file").get<std::string>());
    if (spec.contains("inline")) return mdp_from_json(spec.at("inline"));
    if (spec.contains("tabular_random")) {
        const Json& g = spec.at("tabular_random");
        reject_unknown_keys(g, {"states", "actions", "seed", "gamma"}, "tabular_random");
        return random_tabular_mdp(g.at("states").get<int>(), g.at("actions").get<int>(),
                                  g.at("seed").get<std::uint64_t>(),
                                  g.value("gamma", 0.9));
    }
    const Json& g = spec.at("linear_random");
    reject_unknown_keys(g, {"states", "actions", "dim", "seed", "gamma"}, "linear_random");
    return random_linear_mdp(g.at("states").get<int>(), g.at("actions").get<int>(),
                             g.at("dim").get<int>(), g.at("seed").get<std::uint64_t>(),
                             g.value("gamma", 0.9));
}

/// Largest parameter norm over deterministic policies; the default theta
/// ball. The average setting measures the shifted parameter the gap
/// comparators use.
double oracle_d_theta(const LinearMDP& mdp, Setting setting) {
    const int n = mdp.num_states;
    const int na = mdp.num_actions;
    double total_policies = std::pow(static_cast<double>(na), n);
    if (total_policies > 65536.0)
        throw ConfigInvalid("oracle D_theta needs |A|^|X| <= 65536 deterministic policies");
    VarrhoVector varrho;
    if (setting == Setting::average) varrho = solve_varrho(mdp.features);

    double best = 0.0;
    std::vector<int> actions(n, 0);
    const long long count = static_cast<long long>(total_policies);
    for (long long idx = 0; idx < count; ++idx) {
        long long rem = idx;
        for (int x = 0; x < n; ++x) {
            actions[x] = static_cast<int>(rem % na);
            rem /= na;
        }
        const ValueSolution vals =
            policy_values(mdp, deterministic_policy(actions, na), setting);
        double norm;
        if (setting == Setting::average) {
            const Vector q = mdp.features * vals.theta;
            norm = (vals.theta - q.minCoeff() * varrho.varrho).norm();
            norm = std::max(norm, vals.theta.norm());
        } else {
            norm = vals.theta.norm();
        }
        best = std::max(best, norm);
    }
    return best * (1.0 + 1e-6);
}

struct ResolvedSolver {
    SolverConfig config;
    long long dataset_size = 0;
};

ResolvedSolver resolve_solver(const ExperimentConfig& config, const LinearMDP& mdp,
                              const Policy& comparator, const Covariance& lambda,
                              std::uint64_t seed, Json& summary) {
    ResolvedSolver out;
    if (!config.solver_auto) {
        out.config = solver_config_from_json(config.solver_json, config.setting);
        out.config.seed = seed;
    } else {
        const double c = config.auto_c;
        double d_theta = config.auto_d_theta.is_string()
                             ? oracle_d_theta(mdp, config.setting)
                             : config.auto_d_theta.get<double>();
        const OccupancyMeasure mu_star = occupancy(mdp, comparator, config.setting);
        const double ratio = generalized_ratio(mu_star.mu, lambda, mdp.features, c);
        double d_beta = config.auto_d_beta.is_string()
                            ? std::max(ratio, std::sqrt(ratio)) * (1.0 + 1e-6)
                            : config.auto_d_beta.get<double>();
        summary["coverage_ratio_c"] = ratio;

        TuneBounds bounds{mdp.bound_phi, mdp.discount, mdp.num_actions};
        TuneTarget target;
        target.t_outer = config.auto_t;
        target.epsilon = config.auto_epsilon;
        target.samples = config.auto_samples;
        const double lam_norm = lambda.norm2();
        const double lam_trace = lambda.trace_power(2.0 * c - 1.0);
        out.config = config.setting == Setting::discounted
                         ? tune(bounds, d_theta, d_beta, c, lam_norm, lam_trace, target,
                                config.eval_every, seed)
                         : tune_average(bounds, d_theta, d_beta, c, lam_norm, lam_trace,
                                        target, config.eval_every, seed);
    }
    out.dataset_size =
        static_cast<long long>(out.config.t_outer) *
        (static_cast<long long>(out.config.k_inner) +
         (config.setting == Setting::average ? 1 : 0));
    summary["d_theta_supplied"] = out.config.d_theta;
    summary["d_beta_supplied"] = out.config.d_beta;
    return out;
}

Json coverage_to_json(const CoverageReport& report) {
    Json j;
    j["c_phi_half"] = report.c_phi_half;
    j["c_phi_one"] = report.c_phi_one;
    j["c_diamond"] = report.c_diamond;
    j["c_dagger"] = report.c_dagger;
    if (!std::isnan(report.chi_square)) j["chi_square"] = report.chi_square;
    j["variance_term"] = report.variance_term;
    j["dim"] = report.dim;
    j["approximate"] = report.approximate;
    j["ordering_dagger_diamond"] = report.ordering_dagger_diamond;
    j["ordering_diamond_d_dagger"] = report.ordering_diamond_d_dagger;
    j["ordering_half_diamond"] = report.ordering_half_diamond;
    return j;
}

double quantile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = p * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

int worker_count() {
    if (const char* env = std::getenv("LPORL_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

ExperimentConfig parse_experiment_config(const Json& j) {
    reject_unknown_keys(j,
                        {"name", "mdp", "behavior", "setting", "solver", "seeds",
                         "sweep", "output_dir", "eval_every", "empirical_lambda"},
                        "experiment config");
    ExperimentConfig config;
    config.name = j.value("name", "experiment");
    config.mdp_spec = j.at("mdp");
    build_mdp(config.mdp_spec);  // validate eagerly

    const Json& behavior = j.at("behavior");
    if (behavior.is_string()) {
        if (behavior.get<std::string>() != "uniform")
            throw ConfigInvalid("behavior must be \"uniform\" or {\"eps_mix\": e}");
        config.behavior_kind = "uniform";
    } else {
        reject_unknown_keys(behavior, {"eps_mix"}, "behavior");
        config.behavior_kind = "eps_mix";
        config.behavior_eps = behavior.at("eps_mix").get<double>();
        if (config.behavior_eps < 0.0 || config.behavior_eps > 1.0)
            throw ConfigInvalid("eps_mix must lie in [0,1]");
    }

    const std::string setting = j.value("setting", "discounted");
    if (setting != "discounted" && setting != "average")
        throw ConfigInvalid("setting must be discounted or average");
    config.setting = setting == "average" ? Setting::average : Setting::discounted;

    const Json& solver = j.at("solver");
    if (solver.contains("auto")) {
        reject_unknown_keys(solver, {"auto"}, "solver");
        const Json& tune_spec = solver.at("auto");
        reject_unknown_keys(tune_spec, {"c", "D_theta", "D_beta", "T", "epsilon", "n"},
                            "solver.auto");
        config.solver_auto = true;
        config.auto_c = tune_spec.value("c", 1.0);
        config.auto_d_theta = tune_spec.value("D_theta", Json("oracle"));
        config.auto_d_beta = tune_spec.value("D_beta", Json("oracle"));
        int targets = 0;
        if (tune_spec.contains("T")) {
            config.auto_t = tune_spec.at("T").get<int>();
            ++targets;
        }
        if (tune_spec.contains("epsilon")) {
            config.auto_epsilon = tune_spec.at("epsilon").get<double>();
            ++targets;
        }
        if (tune_spec.contains("n")) {
            config.auto_samples = tune_spec.at("n").get<long long>();
            ++targets;
        }
        if (targets != 1)
            throw ConfigInvalid("solver.auto needs exactly one of T, epsilon, n");
    } else {
        config.solver_auto = false;
        config.solver_json = solver;
        solver_config_from_json(solver, config.setting);  // validate eagerly
    }

    config.eval_every = j.value("eval_every", 1);
    config.empirical_lambda = j.value("empirical_lambda", false);

    if (j.contains("seeds")) {
        config.seeds.clear();
        for (const Json& s : j.at("seeds")) config.seeds.push_back(s.get<std::uint64_t>());
        if (config.seeds.empty()) throw ConfigInvalid("seeds must be nonempty");
    }

    if (j.contains("sweep")) {
        const Json& sweep_spec = j.at("sweep");
        reject_unknown_keys(sweep_spec, {"n", "eps", "c"}, "sweep");
        if (sweep_spec.contains("n")) {
            if (!config.solver_auto)
                throw ConfigInvalid("sweeping n requires an auto-tuned solver");
            for (const Json& v : sweep_spec.at("n"))
                config.sweep_n.push_back(v.get<long long>());
        }
        if (sweep_spec.contains("eps"))
            for (const Json& v : sweep_spec.at("eps"))
                config.sweep_eps.push_back(v.get<double>());
        if (sweep_spec.contains("c")) {
            if (!config.solver_auto)
                throw ConfigInvalid("sweeping c requires an auto-tuned solver");
            for (const Json& v : sweep_spec.at("c"))
                config.sweep_c.push_back(v.get<double>());
        }
    }

    config.output_dir = j.value("output_dir", "");
    return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(Json::parse(read_text_file(path)));
}

RunArtifacts run_experiment(const ExperimentConfig& config, std::uint64_t seed) {
    RunArtifacts artifacts;
    artifacts.name = config.name;
    artifacts.setting = config.setting;

    const LinearMDP mdp = build_mdp(config.mdp_spec);
    const auto [pi_star, optimal_return] = optimal_policy(mdp, config.setting);
    const Policy behavior = config.behavior_kind == "uniform"
                                ? uniform_policy(mdp.num_states, mdp.num_actions)
                                : eps_mix_policy(pi_star, config.behavior_eps);
    const std::string behavior_spec =
        config.behavior_kind == "uniform"
            ? "uniform"
            : "eps_mix:" + format_double(config.behavior_eps);

    auto [mu_b, lambda] = behavior_occupancy(mdp, behavior, config.setting);

    Json summary;
    const ResolvedSolver solver =
        resolve_solver(config, mdp, pi_star, lambda, seed, summary);

    const Dataset data =
        draw_dataset(mdp, behavior, static_cast<std::size_t>(solver.dataset_size),
                     splitmix64(seed), config.setting);

    const Covariance lambda_hat =
        config.empirical_lambda ? empirical_lambda(data, mdp) : Covariance(lambda.lambda());
    LearnerInputs env;
    env.features = &mdp.features;
    env.num_actions = mdp.num_actions;
    env.gamma = mdp.discount;
    env.lambda = solver.config.c == 0.5 ? &lambda_hat : nullptr;
    env.lambda_empirical = config.empirical_lambda;

    OracleBundle oracle{&mdp, &behavior, &pi_star};

    const SolverResult result =
        config.setting == Setting::discounted
            ? run(env, data, solver.config, &oracle)
            : run_average(env, data, solver.config, &oracle);

    const GapReport gap =
        config.setting == Setting::discounted
            ? duality_gap_report(mdp, behavior, result, pi_star, solver.config.c)
            : duality_gap_report_avg(mdp, behavior, result, pi_star, solver.config.c);

    const CoverageReport coverage =
        coverage_report(mdp, behavior, pi_star, config.setting);

    summary["name"] = config.name;
    summary["setting"] = to_string(config.setting);
    summary["seed"] = seed;
    summary["mdp"] = Json{{"hash", mdp_hash(mdp)},
                          {"num_states", mdp.num_states},
                          {"num_actions", mdp.num_actions},
                          {"dim", mdp.dim},
                          {"gamma", mdp.discount}};
    summary["behavior"] = behavior_spec;
    // Everything needed to reproduce this run exactly.
    summary["experiment"] = Json{{"mdp", config.mdp_spec},
                                 {"eval_every", config.eval_every},
                                 {"empirical_lambda", config.empirical_lambda}};
    summary["solver"] = solver_config_to_json(solver.config, config.setting);
    summary["samples_used"] = result.samples_used;
    summary["mixture_return"] = result.mixture_return;
    summary["optimal_return"] = optimal_return;
    summary["suboptimality"] = optimal_return - result.mixture_return;
    summary["gap_report"] = gap_report_to_json(gap, config.setting);
    summary["coverage"] = coverage_to_json(coverage);
    summary["lambda_approximate"] = result.lambda_approximate;
    summary["wall_clock_sec"] = result.wall_clock_sec;

    artifacts.summary = std::move(summary);
    artifacts.trace = result.trace;
    artifacts.suboptimality = optimal_return - result.mixture_return;
    artifacts.mixture_return = result.mixture_return;
    return artifacts;
}

void persist_run(const RunArtifacts& run, const std::string& output_dir,
                 std::uint64_t seed) {
    if (output_dir.empty()) return;
    std::filesystem::create_directories(output_dir);
    const std::string stem =
        output_dir + "/" + run.name + "_seed" + std::to_string(seed);
    if (run.failed) {
        write_text_file(stem + "_error.txt", run.error + "\n");
        return;
    }
    write_trace_csv(run.trace, run.setting, stem + "_trace.csv");
    write_text_file(stem + "_summary.json", run.summary.dump(2) + "\n");
}

SweepResult sweep(const ExperimentConfig& config) {
    struct GridPoint {
        std::optional<long long> n;
        std::optional<double> eps;
        std::optional<double> c;
    };
    std::vector<GridPoint> grid;
    const auto ns = config.sweep_n.empty()
                        ? std::vector<long long>{-1}
                        : config.sweep_n;
    const auto epss = config.sweep_eps.empty() ? std::vector<double>{} : config.sweep_eps;
    const auto cs = config.sweep_c.empty() ? std::vector<double>{} : config.sweep_c;
    const std::size_t ne = std::max<std::size_t>(epss.size(), 1);
    const std::size_t nc = std::max<std::size_t>(cs.size(), 1);
    for (long long n : ns)
        for (std::size_t ie = 0; ie < ne; ++ie)
            for (std::size_t ic = 0; ic < nc; ++ic) {
                GridPoint point;
                if (n >= 0) point.n = n;
                if (!epss.empty()) point.eps = epss[ie];
                if (!cs.empty()) point.c = cs[ic];
                grid.push_back(point);
            }
    if (grid.empty()) throw ConfigInvalid("empty sweep grid");

    struct Task {
        std::size_t grid_index;
        std::size_t seed_index;
    };
    std::vector<Task> tasks;
    for (std::size_t g = 0; g < grid.size(); ++g)
        for (std::size_t s = 0; s < config.seeds.size(); ++s) tasks.push_back({g, s});

    SweepResult result;
    result.runs.resize(tasks.size());

    std::atomic<std::size_t> cursor{0};
    auto work = [&]() {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& task = tasks[i];
            const GridPoint& point = grid[task.grid_index];
            ExperimentConfig point_config = config;
            if (point.n) point_config.auto_samples = *point.n;
            if (point.eps) {
                point_config.behavior_kind = "eps_mix";
                point_config.behavior_eps = *point.eps;
            }
            if (point.c) point_config.auto_c = *point.c;
            const std::uint64_t seed = config.seeds[task.seed_index];
            try {
                result.runs[i] = run_experiment(point_config, seed);
            } catch (const std::exception& e) {
                result.runs[i].name = config.name;
                result.runs[i].setting = config.setting;
                result.runs[i].failed = true;
                result.runs[i].error = e.what();
            }
        }
    };
    const int workers =
        std::min<int>(worker_count(), static_cast<int>(tasks.size()));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers - 1; ++w) pool.emplace_back(work);
    work();
    for (std::thread& th : pool) th.join();

    // Aggregate, grid-major / seed-minor; median and IQR per grid point over
    // the successful seeds.
    std::ostringstream csv;
    csv << "grid_index,n,eps,c,seed,status,suboptimality,mixture_return,"
           "median_subopt,iqr_subopt\n";
    for (std::size_t g = 0; g < grid.size(); ++g) {
        std::vector<double> subopts;
        for (std::size_t s = 0; s < config.seeds.size(); ++s) {
            const RunArtifacts& run = result.runs[g * config.seeds.size() + s];
            if (!run.failed) subopts.push_back(run.suboptimality);
        }
        const double median = quantile(subopts, 0.5);
        const double iqr = quantile(subopts, 0.75) - quantile(subopts, 0.25);
        for (std::size_t s = 0; s < config.seeds.size(); ++s) {
            const RunArtifacts& run = result.runs[g * config.seeds.size() + s];
            const GridPoint& point = grid[g];
            csv << g << ',';
            csv << (point.n ? std::to_string(*point.n) : "") << ',';
            csv << (point.eps ? format_double(*point.eps) : "") << ',';
            csv << (point.c ? format_double(*point.c) : "") << ',';
            csv << config.seeds[s] << ',';
            csv << (run.failed ? "error" : "ok") << ',';
            csv << (run.failed ? "" : format_double(run.suboptimality)) << ',';
            csv << (run.failed ? "" : format_double(run.mixture_return)) << ',';
            csv << format_double(median) << ',' << format_double(iqr) << '\n';
        }
    }
    result.aggregate_csv = csv.str();

    if (!config.output_dir.empty()) {
        std::filesystem::create_directories(config.output_dir);
        for (std::size_t g = 0; g < grid.size(); ++g)
            for (std::size_t s = 0; s < config.seeds.size(); ++s) {
                RunArtifacts& run = result.runs[g * config.seeds.size() + s];
                run.name = config.name + "_g" + std::to_string(g);
                persist_run(run, config.output_dir, config.seeds[s]);
            }
        write_text_file(config.output_dir + "/sweep.csv", result.aggregate_csv);
    }
    return result;
}

}  // namespace lporl
