#pragma once

#include <cstdint>
#include <vector>

#include "lporl/linmdp.hpp"
#include "lporl/numerics.hpp"
#include "lporl/sampling.hpp"
#include "lporl/types.hpp"

namespace lporl {

/// Softmax policy represented by the d-dimensional accumulator of averaged
/// inner-loop iterates: pi(a|x) proportional to exp(alpha <phi(x,a), accum>).
/// Probabilities are materialized per visited state, never for the whole
/// state space, except for diagnostics.
struct PolicyLogits {
    Vector accum;
    double alpha = 0.0;

    /// Action distribution at state x; O(|A| d).
    Vector probs_at(const Matrix& features, int num_actions, int x) const;

    /// Full |X| x |A| table (diagnostics only).
    Policy materialize(const Matrix& features, int num_states, int num_actions) const;
};

/// Iteration counts, learning rates and feasible-set radii for one solver
/// run. xi is the average-reward step for the scalar variable and is unused
/// in the discounted setting. Zero learning rates are allowed and leave the
/// corresponding iterate at its initial value.
struct SolverConfig {
    int t_outer = 1;        // T
    int k_inner = 1;        // K
    double c = 1.0;         // reparametrization exponent, 1/2 or 1
    double alpha = 0.0;     // policy step
    double zeta = 0.0;      // beta step
    double eta = 0.0;       // theta step
    double xi = 0.0;        // rho step (average setting only)
    double d_theta = 1.0;   // theta-ball radius
    double d_beta = 1.0;    // beta-ball radius
    int eval_every = 1;     // trace cadence
    std::uint64_t seed = 0;

    void validate(Setting setting) const;
};

/// One trace record. Diagnostic columns are NaN when the run had no oracle.
/// gap and the term columns are running means over rounds 1..t of the
/// exact-gradient duality-gap decomposition against the standard
/// comparators, so the final row matches the post-hoc gap report.
struct TraceRow {
    int t = 0;
    long long samples = 0;
    double exact_return = 0.0;  // mixture return of policies 1..t
    double subopt = 0.0;        // comparator return minus mixture return
    double gap = 0.0;
    double term_theta = 0.0;
    double term_beta = 0.0;
    double term_pi = 0.0;
    double term_rho = 0.0;      // average setting only
    double rho_t = 0.0;         // average setting only
};

/// Everything a run produces: per-round iterate snapshots (policies as
/// d-dimensional logit accumulators), diagnostics trace, and the exact
/// mixture return when an oracle was available.
struct SolverResult {
    SolverConfig config;
    Setting setting = Setting::discounted;
    std::vector<Vector> policy_accums;  // accum of pi_t, t = 1..T
    std::vector<Vector> thetas;         // theta_t
    std::vector<Vector> betas;          // beta_t used in round t
    std::vector<double> rhos;           // rho_t (average setting only)
    std::vector<TraceRow> trace;
    double mixture_return = 0.0;        // NaN without oracle
    double comparator_return = 0.0;     // NaN without oracle
    long long samples_used = 0;
    bool lambda_approximate = false;    // c = 1/2 fed with an empirical Lambda
    double wall_clock_sec = 0.0;

    Policy policy_at(const Matrix& features, int num_states, int num_actions,
                     int t) const;
    std::vector<Policy> all_policies(const Matrix& features, int num_states,
                                     int num_actions) const;
};

/// Average dynamic duality gap over a run, its exact-gradient regret-term
/// decomposition, and the mixture suboptimality it must equal.
struct GapReport {
    double gap = 0.0;
    double term_theta = 0.0;
    double term_beta = 0.0;
    double term_pi = 0.0;
    double term_rho = 0.0;  // zero in the discounted setting
    double suboptimality = 0.0;
};

/// Ground-truth side channel for diagnostics. The learner itself never
/// reads it; it only feeds the trace and the gap report.
struct OracleBundle {
    const LinearMDP* mdp = nullptr;
    const Policy* behavior = nullptr;    // defines the exact Lambda
    const Policy* comparator = nullptr;  // usually the optimal policy
};

/// What the learner is allowed to see. lambda must be supplied on the
/// c = 1/2 path (exact, or empirical with the flag set); the c = 1 path
/// ignores it entirely.
struct LearnerInputs {
    const Matrix* features = nullptr;
    int num_actions = 0;
    double gamma = 0.0;  // ignored in the average setting
    const Covariance* lambda = nullptr;
    bool lambda_empirical = false;
};

}  // namespace lporl
