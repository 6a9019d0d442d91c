#include "lporl/linmdp.hpp"

#include <cmath>
#include <string>

#include "lporl/errors.hpp"
#include "lporl/rng.hpp"

namespace lporl {

namespace {

void check_distribution(const Vector& p, double neg_tol, double sum_tol,
                        const std::string& what) {
    if (p.minCoeff() < -neg_tol)
        throw InvalidDistribution(what + " has entry " + std::to_string(p.minCoeff()));
    if (std::abs(p.sum() - 1.0) > sum_tol)
        throw InvalidDistribution(what + " sums to " + std::to_string(p.sum()));
}

double smallest_singular_value(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues().minCoeff();
}

}  // namespace

Matrix LinearMDP::transition_matrix() const {
    Matrix p = features * next_state_factor;
    for (int z = 0; z < p.rows(); ++z) {
        for (int x = 0; x < p.cols(); ++x) {
            if (p(z, x) < 0.0) {
                if (p(z, x) < -1e-12)
                    throw InvalidDistribution("transition row " + std::to_string(z) +
                                              " has entry " + std::to_string(p(z, x)));
                p(z, x) = 0.0;
            }
        }
        p.row(z) /= p.row(z).sum();
    }
    return p;
}

void LinearMDP::compute_bounds() {
    bound_phi = features.rowwise().norm().maxCoeff();
    bound_psi = Vector(next_state_factor.rowwise().sum()).norm();
    bound_omega = reward_factor.norm();
}

void LinearMDP::validate() const {
    if (num_states < 1 || num_actions < 1 || dim < 1)
        throw ConfigInvalid("num_states, num_actions and dim must be positive");
    if (features.rows() != num_pairs() || features.cols() != dim)
        throw ConfigInvalid("features must be (|X||A|) x d");
    if (next_state_factor.rows() != dim || next_state_factor.cols() != num_states)
        throw ConfigInvalid("next_state_factor must be d x |X|");
    if (reward_factor.size() != dim) throw ConfigInvalid("reward_factor must have length d");
    if (init_dist.size() != num_states) throw ConfigInvalid("init_dist must have length |X|");
    if (!(discount >= 0.0 && discount < 1.0)) throw ConfigInvalid("discount must be in [0,1)");

    const Matrix p = features * next_state_factor;
    for (int z = 0; z < p.rows(); ++z)
        check_distribution(p.row(z).transpose(), 1e-12, 1e-9,
                           "transition row " + std::to_string(z));

    const Vector r = rewards();
    if (r.minCoeff() < -1e-9 || r.maxCoeff() > 1.0 + 1e-9)
        throw RewardOutOfRange("rewards must lie in [0,1]; range is [" +
                               std::to_string(r.minCoeff()) + ", " +
                               std::to_string(r.maxCoeff()) + "]");

    check_distribution(init_dist, 0.0, 1e-12, "initial distribution");

    if (features.rowwise().norm().maxCoeff() > bound_phi + 1e-12)
        throw ConfigInvalid("feature norm exceeds bound_phi");
    if (Vector(next_state_factor.rowwise().sum()).norm() > bound_psi + 1e-12)
        throw ConfigInvalid("next-state factor norm exceeds bound_psi");
    if (reward_factor.norm() > bound_omega + 1e-12)
        throw ConfigInvalid("reward factor norm exceeds bound_omega");

    if (smallest_singular_value(features) <= 1e-10)
        throw RankDeficient("feature matrix is not full column rank");
}

void OccupancyMeasure::validate(const LinearMDP& mdp) const {
    if (mu.minCoeff() < 0.0)
        throw InvalidDistribution("occupancy has negative entry");
    if (std::abs(mu.sum() - 1.0) > 1e-9)
        throw InvalidDistribution("occupancy sums to " + std::to_string(mu.sum()));
    const Matrix p = mdp.transition_matrix();
    Vector flow = nu - p.transpose() * mu * (setting == Setting::discounted ? mdp.discount : 1.0);
    if (setting == Setting::discounted) flow -= (1.0 - mdp.discount) * mdp.init_dist;
    if (flow.cwiseAbs().maxCoeff() > 1e-8)
        throw InvalidDistribution("occupancy violates the flow constraint by " +
                                  std::to_string(flow.cwiseAbs().maxCoeff()));
}

LinearMDP tabular_to_linear(const std::vector<std::vector<Vector>>& p,
                            const std::vector<Vector>& r, const Vector& nu0,
                            double gamma) {
    const int num_states = static_cast<int>(p.size());
    if (num_states < 1) throw ConfigInvalid("empty transition table");
    const int num_actions = static_cast<int>(p[0].size());
    const int d = num_states * num_actions;

    LinearMDP mdp;
    mdp.num_states = num_states;
    mdp.num_actions = num_actions;
    mdp.dim = d;
    mdp.discount = gamma;
    mdp.features = Matrix::Identity(d, d);
    mdp.next_state_factor = Matrix::Zero(d, num_states);
    mdp.reward_factor = Vector::Zero(d);
    mdp.init_dist = nu0;

    for (int x = 0; x < num_states; ++x) {
        for (int a = 0; a < num_actions; ++a) {
            check_distribution(p[x][a], 1e-12, 1e-9,
                               "transition row (" + std::to_string(x) + "," +
                                   std::to_string(a) + ")");
            const double rxa = r[x][a];
            if (rxa < -1e-9 || rxa > 1.0 + 1e-9)
                throw RewardOutOfRange("reward (" + std::to_string(x) + "," +
                                       std::to_string(a) + ") = " + std::to_string(rxa));
            const int z = mdp.pair_index(x, a);
            mdp.next_state_factor.row(z) = p[x][a].transpose();
            mdp.reward_factor[z] = rxa;
        }
    }
    mdp.compute_bounds();
    mdp.validate();
    return mdp;
}

LinearMDP random_tabular_mdp(int num_states, int num_actions, std::uint64_t seed,
                             double gamma) {
    Rng rng(seed);
    std::vector<std::vector<Vector>> p(num_states);
    for (int x = 0; x < num_states; ++x) {
        p[x].resize(num_actions);
        for (int a = 0; a < num_actions; ++a) p[x][a] = rng.simplex(num_states);
    }
    std::vector<Vector> r(num_states);
    for (int x = 0; x < num_states; ++x) {
        r[x] = Vector(num_actions);
        for (int a = 0; a < num_actions; ++a) r[x][a] = rng.uniform();
    }
    return tabular_to_linear(p, r, rng.simplex(num_states), gamma);
}

LinearMDP random_linear_mdp(int num_states, int num_actions, int dim,
                            std::uint64_t seed, double gamma) {
    if (dim > num_states * num_actions)
        throw ConfigInvalid("dim must not exceed |X||A|");
    Rng rng(seed);

    LinearMDP mdp;
    mdp.num_states = num_states;
    mdp.num_actions = num_actions;
    mdp.dim = dim;
    mdp.discount = gamma;

    mdp.features = Matrix(mdp.num_pairs(), dim);
    for (int z = 0; z < mdp.num_pairs(); ++z)
        mdp.features.row(z) = rng.simplex(dim).transpose();

    mdp.next_state_factor = Matrix(dim, num_states);
    for (int j = 0; j < dim; ++j)
        mdp.next_state_factor.row(j) = rng.simplex(num_states).transpose();

    mdp.reward_factor = Vector(dim);
    for (int j = 0; j < dim; ++j) mdp.reward_factor[j] = rng.uniform();
    mdp.init_dist = rng.simplex(num_states);

    // Simplex rows are almost surely independent; perturb and renormalize in
    // the rare degenerate case.
    int retries = 0;
    while (smallest_singular_value(mdp.features) <= 1e-10) {
        if (++retries > 50)
            throw RankDeficient("could not reach full column rank after 50 retries");
        for (int z = 0; z < mdp.num_pairs(); ++z) {
            Vector noise = rng.simplex(dim);
            mdp.features.row(z) = 0.99 * mdp.features.row(z) + 0.01 * noise.transpose();
        }
    }

    mdp.compute_bounds();
    mdp.validate();
    return mdp;
}

Matrix policy_transition(const LinearMDP& mdp, const Policy& policy) {
    const Matrix p = mdp.transition_matrix();
    Matrix p_pi = Matrix::Zero(mdp.num_states, mdp.num_states);
    for (int x = 0; x < mdp.num_states; ++x)
        for (int a = 0; a < mdp.num_actions; ++a)
            p_pi.row(x) += policy.probs(x, a) * p.row(mdp.pair_index(x, a));
    return p_pi;
}

OccupancyMeasure discounted_occupancy(const LinearMDP& mdp, const Policy& policy) {
    const double gamma = mdp.discount;
    const Matrix p_pi = policy_transition(mdp, policy);
    const Matrix a = Matrix::Identity(mdp.num_states, mdp.num_states) -
                     gamma * p_pi.transpose();
    Vector nu = a.partialPivLu().solve((1.0 - gamma) * mdp.init_dist);
    if ((a * nu - (1.0 - gamma) * mdp.init_dist).cwiseAbs().maxCoeff() > 1e-9)
        throw SingularSystem("discounted flow system did not solve");
    nu = nu.cwiseMax(0.0);

    OccupancyMeasure occ;
    occ.setting = Setting::discounted;
    occ.nu = nu;
    occ.mu = Vector(mdp.num_pairs());
    for (int x = 0; x < mdp.num_states; ++x)
        for (int a2 = 0; a2 < mdp.num_actions; ++a2)
            occ.mu[mdp.pair_index(x, a2)] = policy.probs(x, a2) * nu[x];
    return occ;
}

Vector stationary_distribution(const Matrix& p_pi) {
    const int n = static_cast<int>(p_pi.rows());
    // Lazy chain (I + P)/2 has the same stationary vector and no periodic
    // modes, so plain power iteration converges whenever the chain has a
    // single recurrent class.
    const Matrix lazy_t = 0.5 * (Matrix::Identity(n, n) + p_pi).transpose();
    Vector nu = Vector::Constant(n, 1.0 / n);
    for (int it = 0; it < 100000; ++it) {
        Vector next = lazy_t * nu;
        next /= next.sum();
        const double diff = (next - nu).cwiseAbs().maxCoeff();
        nu = next;
        if (diff <= 1e-10) {
            // Convergence alone does not rule out multiple recurrent classes.
            Eigen::FullPivLU<Matrix> lu(Matrix::Identity(n, n) - p_pi);
            lu.setThreshold(1e-9);
            if (lu.rank() != n - 1)
                throw NotUnichain("stationary distribution is not unique");
            return nu;
        }
    }
    throw NotUnichain("power iteration did not converge within 1e5 iterations");
}

OccupancyMeasure stationary_occupancy(const LinearMDP& mdp, const Policy& policy) {
    const Vector nu = stationary_distribution(policy_transition(mdp, policy));
    OccupancyMeasure occ;
    occ.setting = Setting::average;
    occ.nu = nu;
    occ.mu = Vector(mdp.num_pairs());
    for (int x = 0; x < mdp.num_states; ++x)
        for (int a = 0; a < mdp.num_actions; ++a)
            occ.mu[mdp.pair_index(x, a)] = policy.probs(x, a) * nu[x];
    return occ;
}

OccupancyMeasure occupancy(const LinearMDP& mdp, const Policy& policy, Setting setting) {
    return setting == Setting::discounted ? discounted_occupancy(mdp, policy)
                                          : stationary_occupancy(mdp, policy);
}

ValueSolution policy_values(const LinearMDP& mdp, const Policy& policy, Setting setting) {
    const int n = mdp.num_states;
    const Matrix p = mdp.transition_matrix();
    const Matrix p_pi = policy_transition(mdp, policy);
    const Vector r = mdp.rewards();
    Vector r_pi = Vector::Zero(n);
    for (int x = 0; x < n; ++x)
        for (int a = 0; a < mdp.num_actions; ++a)
            r_pi[x] += policy.probs(x, a) * r[mdp.pair_index(x, a)];

    ValueSolution sol;
    if (setting == Setting::discounted) {
        const double gamma = mdp.discount;
        const Matrix a = Matrix::Identity(n, n) - gamma * p_pi;
        sol.v = a.partialPivLu().solve(r_pi);
        if ((a * sol.v - r_pi).cwiseAbs().maxCoeff() > 1e-9)
            throw SingularSystem("discounted Bellman system did not solve");
        sol.q = r + gamma * p * sol.v;
        sol.theta = mdp.reward_factor + gamma * mdp.next_state_factor * sol.v;
        sol.rho = 0.0;
    } else {
        const Vector nu = stationary_distribution(p_pi);
        sol.rho = 0.0;
        for (int x = 0; x < n; ++x) sol.rho += nu[x] * r_pi[x];
        // (I - P_pi) v = r_pi - rho is solvable up to a constant shift; adding
        // the rank-one term 1 nu^T pins the solution with <nu, v> = 0.
        const Matrix a = Matrix::Identity(n, n) - p_pi +
                         Matrix(Vector::Ones(n) * nu.transpose());
        const Vector b = r_pi.array() - sol.rho;
        sol.v = a.partialPivLu().solve(b);
        if ((a * sol.v - b).cwiseAbs().maxCoeff() > 1e-9)
            throw SingularSystem("bias system did not solve");
        sol.q = (r.array() - sol.rho).matrix() + p * sol.v;
        sol.theta = mdp.features.colPivHouseholderQr().solve(sol.q);
        const double residual = (mdp.features * sol.theta - sol.q).cwiseAbs().maxCoeff();
        if (residual > 1e-6)
            throw AssumptionViolated(
                "action-value function is not realizable in the feature span "
                "(residual " + std::to_string(residual) + ")");
    }
    sol.q_span = sol.q.maxCoeff() - sol.q.minCoeff();
    return sol;
}

std::pair<Policy, double> optimal_policy(const LinearMDP& mdp, Setting setting,
                                         double tol) {
    if (!(tol > 0.0)) throw ConfigInvalid("tol must be positive");
    const int n = mdp.num_states;
    const int na = mdp.num_actions;
    const Vector r = mdp.rewards();
    const Matrix p = mdp.transition_matrix();

    // Start greedy on immediate reward.
    std::vector<int> actions(n, 0);
    for (int x = 0; x < n; ++x) {
        int best = 0;
        for (int a = 1; a < na; ++a)
            if (r[mdp.pair_index(x, a)] > r[mdp.pair_index(x, best)]) best = a;
        actions[x] = best;
    }

    const int max_iters = 10000;
    for (int it = 0; it < max_iters; ++it) {
        Policy pi = deterministic_policy(actions, na);
        ValueSolution vals = policy_values(mdp, pi, setting);
        bool changed = false;
        for (int x = 0; x < n; ++x) {
            int best = actions[x];
            double best_q = vals.q[mdp.pair_index(x, best)];
            for (int a = 0; a < na; ++a) {
                const double qa = vals.q[mdp.pair_index(x, a)];
                if (qa > best_q + tol) {
                    best = a;
                    best_q = qa;
                }
            }
            if (best != actions[x]) {
                actions[x] = best;
                changed = true;
            }
        }
        if (!changed) {
            const double ret = setting == Setting::discounted
                                   ? (1.0 - mdp.discount) * mdp.init_dist.dot(vals.v)
                                   : vals.rho;
            return {pi, ret};
        }
    }
    throw NoConvergence("policy iteration did not converge within 10000 iterations");
}

double policy_return(const LinearMDP& mdp, const Policy& policy, Setting setting) {
    return occupancy(mdp, policy, setting).mu.dot(mdp.rewards());
}

double mixture_return(const LinearMDP& mdp, const std::vector<Policy>& policies,
                      Setting setting) {
    if (policies.empty()) throw ConfigInvalid("mixture of zero policies");
    double total = 0.0;
    for (const Policy& pi : policies) total += policy_return(mdp, pi, setting);
    return total / static_cast<double>(policies.size());
}

}  // namespace lporl
