#include <doctest.h>

#include "lporl/linmdp.hpp"
#include "lporl/rng.hpp"
#include "oracles.hpp"

using namespace lporl;

TEST_CASE("one-hot embedding of trivial and cycle MDPs") {
    // 1 state, 1 action, r = 1
    std::vector<std::vector<Vector>> p{{Vector{{1.0}}}};
    std::vector<Vector> r{Vector{{1.0}}};
    const LinearMDP unit = tabular_to_linear(p, r, Vector{{1.0}}, 0.9);
    CHECK(unit.dim == 1);
    CHECK(unit.features(0, 0) == 1.0);
    CHECK(unit.next_state_factor(0, 0) == 1.0);
    CHECK(unit.reward_factor[0] == 1.0);
    CHECK(unit.bound_phi == doctest::Approx(1.0));

    const LinearMDP cyc = testing::cycle2(0.5);
    CHECK(cyc.dim == 2);
    const Matrix pm = cyc.transition_matrix();
    CHECK(pm(0, 1) == doctest::Approx(1.0));
    CHECK(pm(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("one-hot embedding reproduces a random tabular transition table") {
    const LinearMDP mdp = random_tabular_mdp(4, 2, 7, 0.8);
    mdp.validate();
    // P = Phi Psi must reproduce next_state_factor rows elementwise.
    const Matrix p = mdp.features * mdp.next_state_factor;
    CHECK((p - mdp.next_state_factor).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tabular embedding rejects bad inputs") {
    std::vector<std::vector<Vector>> p{{Vector{{0.5, 0.2}}}, {Vector{{0.0, 1.0}}}};
    std::vector<Vector> r{Vector{{0.5}}, Vector{{0.5}}};
    CHECK_THROWS_AS(tabular_to_linear(p, r, Vector{{1.0, 0.0}}, 0.9),
                    InvalidDistribution);

    std::vector<std::vector<Vector>> p2{{Vector{{1.0, 0.0}}}, {Vector{{0.0, 1.0}}}};
    std::vector<Vector> r2{Vector{{1.5}}, Vector{{0.5}}};
    CHECK_THROWS_AS(tabular_to_linear(p2, r2, Vector{{1.0, 0.0}}, 0.9), RewardOutOfRange);
}

TEST_CASE("random linear MDPs are valid, deterministic and full rank") {
    const LinearMDP a = random_linear_mdp(2, 1, 2, 0);
    const Matrix p = a.features * a.next_state_factor;
    for (int z = 0; z < p.rows(); ++z)
        CHECK(std::abs(p.row(z).sum() - 1.0) < 1e-12);

    const LinearMDP b1 = random_linear_mdp(5, 3, 4, 42);
    const LinearMDP b2 = random_linear_mdp(5, 3, 4, 42);
    CHECK((b1.features - b2.features).cwiseAbs().maxCoeff() == 0.0);
    CHECK((b1.next_state_factor - b2.next_state_factor).cwiseAbs().maxCoeff() == 0.0);
    CHECK((b1.reward_factor - b2.reward_factor).cwiseAbs().maxCoeff() == 0.0);

    const LinearMDP c = random_linear_mdp(6, 2, 3, 1);
    Eigen::JacobiSVD<Matrix> svd(c.features);
    CHECK(svd.singularValues().minCoeff() > 1e-10);

    CHECK_THROWS_AS(random_linear_mdp(2, 1, 5, 0), ConfigInvalid);
}

TEST_CASE("discounted occupancy of the cycle and flow residuals") {
    const LinearMDP cyc = testing::cycle2(0.5);
    const Policy only = uniform_policy(2, 1);
    const OccupancyMeasure occ = discounted_occupancy(cyc, only);
    CHECK(occ.nu[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(occ.nu[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    occ.validate(cyc);

    const LinearMDP one = testing::bandit(Vector{{0.7}}, 0.3);
    CHECK(discounted_occupancy(one, uniform_policy(1, 1)).nu[0] == doctest::Approx(1.0));

    const LinearMDP mdp = random_tabular_mdp(4, 2, 19, 0.85);
    const Policy uni = uniform_policy(4, 2);
    const OccupancyMeasure o = discounted_occupancy(mdp, uni);
    const Matrix p = mdp.transition_matrix();
    const Vector resid =
        o.nu - (1.0 - mdp.discount) * mdp.init_dist - mdp.discount * p.transpose() * o.mu;
    CHECK(resid.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("policy evaluation on the cycle, both settings") {
    const LinearMDP cyc = testing::cycle2(0.5);
    const Policy only = uniform_policy(2, 1);

    const ValueSolution disc = policy_values(cyc, only, Setting::discounted);
    CHECK(disc.q[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(disc.q[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK((cyc.features * disc.theta - disc.q).cwiseAbs().maxCoeff() < 1e-12);

    const ValueSolution avg = policy_values(cyc, only, Setting::average);
    CHECK(avg.rho == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(avg.v[0] == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(avg.v[1] == doctest::Approx(-0.25).epsilon(1e-9));
}

TEST_CASE("realizability residual on a random instance") {
    const LinearMDP mdp = random_tabular_mdp(5, 2, 23, 0.9);
    const Policy uni = uniform_policy(5, 2);
    const ValueSolution vals = policy_values(mdp, uni, Setting::discounted);
    CHECK((mdp.features * vals.theta - vals.q).cwiseAbs().maxCoeff() < 1e-8);
    // q = r + gamma P v
    const Vector rhs =
        mdp.rewards() + mdp.discount * mdp.transition_matrix() * vals.v;
    CHECK((vals.q - rhs).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("theta norm bound and the two return forms") {
    Rng seeds(99);
    for (int i = 0; i < 5; ++i) {
        const LinearMDP mdp = random_tabular_mdp(4, 3, seeds.next_u64(), 0.7);
        const Policy pi = eps_mix_policy(optimal_policy(mdp, Setting::discounted).first,
                                         0.3 * i / 5.0 + 0.2);
        const ValueSolution vals = policy_values(mdp, pi, Setting::discounted);
        CHECK(vals.theta.norm() <=
              mdp.bound_omega + mdp.bound_psi / (1.0 - mdp.discount) + 1e-9);
        const double via_mu = discounted_occupancy(mdp, pi).mu.dot(mdp.rewards());
        const double via_v = (1.0 - mdp.discount) * mdp.init_dist.dot(vals.v);
        CHECK(via_mu == doctest::Approx(via_v).epsilon(1e-9));
    }
}

TEST_CASE("average-setting Bellman residual and gain range") {
    const LinearMDP mdp = random_tabular_mdp(5, 2, 31, 0.9);
    const Policy uni = uniform_policy(5, 2);
    const ValueSolution vals = policy_values(mdp, uni, Setting::average);
    const Vector resid = vals.q - (mdp.rewards().array() - vals.rho).matrix() -
                         mdp.transition_matrix() * vals.v;
    CHECK(resid.cwiseAbs().maxCoeff() < 1e-8);
    CHECK(vals.rho >= 0.0);
    CHECK(vals.rho <= 1.0);
    // bias normalization <nu, v> = 0
    const Vector nu = stationary_distribution(policy_transition(mdp, uni));
    CHECK(std::abs(nu.dot(vals.v)) < 1e-9);
}

TEST_CASE("stationary distribution handles the periodic cycle and detects multichain") {
    const LinearMDP cyc = testing::cycle2(0.5);
    const Vector nu = stationary_distribution(policy_transition(cyc, uniform_policy(2, 1)));
    CHECK(nu[0] == doctest::Approx(0.5).epsilon(1e-9));

    Matrix two_classes = Matrix::Identity(2, 2);
    CHECK_THROWS_AS(stationary_distribution(two_classes), NotUnichain);
}

TEST_CASE("optimal policy: bandit, cycle, and brute-force cross-check") {
    const LinearMDP two = testing::bandit(Vector{{0.2, 0.9}}, 0.5);
    const auto [pi, ret] = optimal_policy(two, Setting::discounted);
    CHECK(pi.probs(0, 1) == 1.0);
    CHECK(ret == doctest::Approx(0.9).epsilon(1e-12));

    const LinearMDP cyc = testing::cycle2(0.5);
    CHECK(optimal_policy(cyc, Setting::discounted).second ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-10));

    const LinearMDP mdp = random_tabular_mdp(6, 3, 3, 0.8);
    const double best = optimal_policy(mdp, Setting::discounted).second;
    const double brute = testing::best_deterministic_return(mdp, Setting::discounted);
    CHECK(best == doctest::Approx(brute).epsilon(1e-8));

    const double best_avg = optimal_policy(mdp, Setting::average).second;
    const double brute_avg = testing::best_deterministic_return(mdp, Setting::average);
    CHECK(best_avg == doctest::Approx(brute_avg).epsilon(1e-7));
}

TEST_CASE("optimal policy dominates every deterministic policy") {
    const LinearMDP mdp = random_tabular_mdp(4, 2, 17, 0.75);
    const double best = optimal_policy(mdp, Setting::discounted, 1e-10).second;
    for (const Policy& pi : testing::all_deterministic_policies(mdp))
        CHECK(best >= testing::iterative_return_discounted(mdp, pi) - 1e-8);
}

TEST_CASE("mixture return averages exact policy returns") {
    const LinearMDP two = testing::bandit(Vector{{0.0, 1.0}}, 0.5);
    const Policy best = deterministic_policy({1}, 2);
    const Policy worst = deterministic_policy({0}, 2);
    CHECK(mixture_return(two, {best}, Setting::discounted) == doctest::Approx(1.0));
    CHECK(mixture_return(two, {best, best}, Setting::discounted) == doctest::Approx(1.0));
    CHECK(mixture_return(two, {best, worst}, Setting::discounted) ==
          doctest::Approx(0.5));
    CHECK_THROWS_AS(mixture_return(two, {}, Setting::discounted), ConfigInvalid);
}
