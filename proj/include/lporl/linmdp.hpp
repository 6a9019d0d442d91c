#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lporl/policy.hpp"
#include "lporl/types.hpp"

namespace lporl {

/// Finite MDP whose transition kernel and reward are linear in a known
/// d-dimensional state-action feature map:
///
///   p(x' | x, a) = <phi(x,a), psi(x')>,   r(x, a) = <phi(x,a), omega>.
///
/// features stores phi(x,a) as row x * num_actions + a; next_state_factor
/// stores psi(x') as column x'. Values are immutable after construction and
/// safe to share across threads.
struct LinearMDP {
    int num_states = 0;
    int num_actions = 0;
    int dim = 0;
    Matrix features;           // (|X||A|) x d
    Matrix next_state_factor;  // d x |X|
    Vector reward_factor;      // d
    Vector init_dist;          // |X|
    double discount = 0.0;

    // Norm bounds: max ||phi(x,a)||, ||sum_x psi(x)||, ||omega||.
    double bound_phi = 0.0;
    double bound_psi = 0.0;
    double bound_omega = 0.0;

    int num_pairs() const { return num_states * num_actions; }
    int pair_index(int x, int a) const { return x * num_actions + a; }

    Eigen::Block<const Matrix> phi(int x, int a) const {
        return features.block(pair_index(x, a), 0, 1, dim);
    }

    /// Transition matrix P = features * next_state_factor, with entries in
    /// [-1e-12, 0) clamped to zero and rows renormalized.
    Matrix transition_matrix() const;

    /// Reward vector r = features * reward_factor over (x,a) pairs.
    Vector rewards() const { return features * reward_factor; }

    /// Fills bound_phi / bound_psi / bound_omega from the matrices.
    void compute_bounds();

    /// Checks all structural invariants; throws on the first violation.
    void validate() const;
};

/// State-action visitation distribution of a policy, together with its
/// state marginal.
struct OccupancyMeasure {
    Vector mu;  // over (x,a) pairs
    Vector nu;  // over states
    Setting setting = Setting::discounted;

    void validate(const LinearMDP& mdp) const;
};

/// Exact evaluation of a policy: the feature-space parameter theta with
/// q = features * theta, plus the q/v tables it represents.
struct ValueSolution {
    Vector theta;        // d
    Vector q;            // over (x,a) pairs
    Vector v;            // over states
    double rho = 0.0;    // average reward (average setting only)
    double q_span = 0.0; // max q - min q
};

/// One-hot embedding of a tabular MDP: d = |X||A|, features = identity,
/// next_state_factor rows = transition table, reward_factor = rewards.
/// p[x][a] must be a distribution over next states; r in [0,1].
LinearMDP tabular_to_linear(const std::vector<std::vector<Vector>>& p,
                            const std::vector<Vector>& r, const Vector& nu0,
                            double gamma);

/// Random tabular MDP (Dirichlet(1) transition rows, uniform rewards and
/// initial distribution), embedded one-hot. Deterministic in seed.
LinearMDP random_tabular_mdp(int num_states, int num_actions, std::uint64_t seed,
                             double gamma);

/// Random linear MDP by soft state aggregation: feature rows on the
/// d-simplex, latent rows of next_state_factor distributions over states,
/// reward_factor in [0,1]^d. Row-stochasticity of P and rewards in [0,1]
/// then hold by convexity. Deterministic in seed.
LinearMDP random_linear_mdp(int num_states, int num_actions, int dim,
                            std::uint64_t seed, double gamma = 0.9);

/// Policy transition matrix P_pi(x, y) = sum_a pi(a|x) p(y | x, a).
Matrix policy_transition(const LinearMDP& mdp, const Policy& policy);

/// Discounted occupancy: nu = (1-gamma) (I - gamma P_pi^T)^{-1} nu0,
/// mu(x,a) = pi(a|x) nu(x).
OccupancyMeasure discounted_occupancy(const LinearMDP& mdp, const Policy& policy);

/// Stationary distribution of P_pi by power iteration. Throws NotUnichain
/// if it fails to converge to 1e-10 within 1e5 iterations.
Vector stationary_distribution(const Matrix& p_pi);

/// Stationary occupancy mu(x,a) = pi(a|x) nu_pi(x) for the average setting.
OccupancyMeasure stationary_occupancy(const LinearMDP& mdp, const Policy& policy);

OccupancyMeasure occupancy(const LinearMDP& mdp, const Policy& policy, Setting setting);

/// Exact policy evaluation.
///
/// Discounted: v solves (I - gamma P_pi) v = r_pi, q = r + gamma P v,
/// theta = omega + gamma * next_state_factor * v.
/// Average: rho = <mu_pi, r>, bias solves (I - P_pi) v = r_pi - rho with
/// <nu_pi, v> = 0, and theta is the least-squares solution of
/// features * theta = q (residual above 1e-6 raises AssumptionViolated).
ValueSolution policy_values(const LinearMDP& mdp, const Policy& policy, Setting setting);

/// Exact optimum by policy iteration (discounted) or Howard policy
/// iteration on the gain (average). Returns the deterministic optimal
/// policy and its normalized return (discounted: (1-gamma)<nu0, v*>;
/// average: rho*), both in [0,1].
std::pair<Policy, double> optimal_policy(const LinearMDP& mdp, Setting setting,
                                         double tol = 1e-10);

/// Exact return <mu^pi, r> of a single policy under the given criterion.
double policy_return(const LinearMDP& mdp, const Policy& policy, Setting setting);

/// Mean exact return over a list of policies; the value of the mixture
/// policy that plays one of them selected uniformly at random.
double mixture_return(const LinearMDP& mdp, const std::vector<Policy>& policies,
                      Setting setting);

}  // namespace lporl
