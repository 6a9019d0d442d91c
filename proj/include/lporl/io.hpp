#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lporl/linmdp.hpp"
#include "lporl/pd_common.hpp"
#include "lporl/sampling.hpp"

namespace lporl {

using Json = nlohmann::json;

/// Shortest-roundtrip decimal for a double; empty string for NaN (the CSV
/// convention for missing diagnostics).
std::string format_double(double v);

Json mdp_to_json(const LinearMDP& mdp);

/// Accepts the canonical linear form {num_states, num_actions, dim, phi,
/// psi, omega, nu0, gamma} with phi and psi row-major, or the tabular
/// shorthand {P, r, nu0, gamma}, which is routed through the one-hot
/// embedding.
LinearMDP mdp_from_json(const Json& j);

LinearMDP load_mdp(const std::string& path);
void save_mdp(const LinearMDP& mdp, const std::string& path);

/// FNV-1a over the canonical JSON serialization; identifies the MDP in
/// dataset sidecars and summaries.
std::string mdp_hash(const LinearMDP& mdp);

/// CSV with header x0,x,a,r,x_next (x0 empty in the average setting), plus
/// a JSON sidecar at <path>.meta.json recording provenance.
void save_dataset(const Dataset& data, const std::string& path,
                  const std::string& mdp_hash_hex, const std::string& behavior_spec);
Dataset load_dataset(const std::string& path);

/// Trace CSV: t,samples,exact_return,subopt,gap,term_theta,term_beta,term_pi
/// with trailing term_rho,rho_t columns in the average setting. NaN cells
/// are left empty.
void write_trace_csv(const std::vector<TraceRow>& trace, Setting setting,
                     const std::string& path);

Json solver_config_to_json(const SolverConfig& config, Setting setting);
SolverConfig solver_config_from_json(const Json& j, Setting setting);

Json gap_report_to_json(const GapReport& report, Setting setting);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace lporl
