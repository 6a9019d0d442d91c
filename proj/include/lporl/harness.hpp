#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lporl/io.hpp"
#include "lporl/pd_common.hpp"

namespace lporl {

/// Parsed experiment description. See parse_experiment_config for the JSON
/// schema; unknown keys are rejected.
struct ExperimentConfig {
    std::string name = "experiment";
    Json mdp_spec;                       // {"file"|"inline"|"tabular_random"|"linear_random"}
    std::string behavior_kind = "uniform";  // "uniform" | "eps_mix"
    double behavior_eps = 1.0;               // eps of the eps_mix behavior
    Setting setting = Setting::discounted;

    bool solver_auto = false;
    Json solver_json;                    // explicit solver config when !solver_auto
    double auto_c = 1.0;
    Json auto_d_theta;                   // number or "oracle"
    Json auto_d_beta;                    // number or "oracle"
    std::optional<int> auto_t;
    std::optional<double> auto_epsilon;
    std::optional<long long> auto_samples;
    int eval_every = 1;
    bool empirical_lambda = false;       // feed the c = 1/2 path an estimated Lambda

    std::vector<std::uint64_t> seeds{0};

    // Optional sweep grid; empty axes are left at the base configuration.
    std::vector<long long> sweep_n;
    std::vector<double> sweep_eps;
    std::vector<double> sweep_c;

    std::string output_dir;
};

ExperimentConfig parse_experiment_config(const Json& j);
ExperimentConfig load_experiment_config(const std::string& path);

/// Everything one run produces, kept in memory so the orchestrator can
/// serialize files in a deterministic order.
struct RunArtifacts {
    std::string name;
    Setting setting = Setting::discounted;
    Json summary;
    std::vector<TraceRow> trace;
    bool failed = false;
    std::string error;
    double suboptimality = 0.0;
    double mixture_return = 0.0;
};

/// Builds the MDP, behavior occupancy and dataset, runs the solver, and
/// assembles oracle suboptimality, the coverage report and the duality-gap
/// report into a summary record. Writes nothing; persist_run does.
RunArtifacts run_experiment(const ExperimentConfig& config, std::uint64_t seed);

/// Writes <output_dir>/<name>_seed<seed>_trace.csv and _summary.json.
void persist_run(const RunArtifacts& run, const std::string& output_dir,
                 std::uint64_t seed);

struct SweepResult {
    std::vector<RunArtifacts> runs;  // grid-major, seed-minor order
    std::string aggregate_csv;       // written to <output_dir>/sweep.csv
};

/// One run per grid point and seed. Independent runs may execute
/// concurrently (LPORL_THREADS caps the worker count); collection and all
/// file writes happen afterwards in deterministic grid-major order.
/// Failures are recorded per point and do not abort the sweep.
SweepResult sweep(const ExperimentConfig& config);

}  // namespace lporl
