#include <doctest.h>

#include "lporl/pd_discounted.hpp"
#include "lporl/rng.hpp"
#include "oracles.hpp"

using namespace lporl;

namespace {

PolicyLogits random_logits(int dim, double alpha, Rng& rng) {
    return PolicyLogits{rng.normal_vector(dim), alpha};
}

SolverResult random_trace(const LinearMDP& mdp, int rounds, double alpha,
                          double d_theta, double d_beta, std::uint64_t seed) {
    Rng rng(seed);
    SolverResult result;
    result.setting = Setting::discounted;
    result.config.alpha = alpha;
    result.config.t_outer = rounds;
    result.config.d_theta = d_theta;
    result.config.d_beta = d_beta;
    const BallDomain tb(d_theta), bb(d_beta);
    for (int t = 0; t < rounds; ++t) {
        result.policy_accums.push_back(rng.normal_vector(mdp.dim));
        result.thetas.push_back(project_ball(d_theta * rng.normal_vector(mdp.dim), tb));
        result.betas.push_back(project_ball(d_beta * rng.normal_vector(mdp.dim), bb));
    }
    return result;
}

}  // namespace

TEST_CASE("theta gradient estimate: hand values on the cycle") {
    const LinearMDP cyc = testing::cycle2(0.5);
    const PolicyLogits uniform{Vector::Zero(2), 1.0};
    const Vector beta{{1.0, 0.0}};
    const Transition sample{0, 0, 0, 1.0, 1};

    const Vector g = grad_theta_estimate(sample, uniform, beta, cyc.features,
                                         cyc.features, 1, 0.5);
    CHECK(g[0] == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(g[1] == doctest::Approx(0.5).epsilon(1e-15));

    const Vector g0 = grad_theta_estimate(sample, uniform, Vector::Zero(2), cyc.features,
                                          cyc.features, 1, 0.5);
    CHECK(g0[0] == doctest::Approx(0.5).epsilon(1e-15));  // (1-gamma) phi(x0)
    CHECK(g0[1] == doctest::Approx(0.0));
}

TEST_CASE("beta gradient estimate: hand values on the cycle") {
    const LinearMDP cyc = testing::cycle2(0.5);
    const PolicyLogits uniform{Vector::Zero(2), 1.0};
    const Transition sample{0, 0, 0, 1.0, 1};

    const Vector g = grad_beta_estimate(sample, uniform, Vector{{1.0, 0.0}},
                                        cyc.features, cyc.features, 1, 0.5);
    CHECK(std::abs(g[0]) < 1e-15);  // 1 + 0.5*0 - 1 = 0
    CHECK(std::abs(g[1]) < 1e-15);

    const Vector gr = grad_beta_estimate(sample, uniform, Vector::Zero(2), cyc.features,
                                         cyc.features, 1, 0.5);
    CHECK(gr[0] == doctest::Approx(1.0));  // phi(x,a) * r
    CHECK(gr[1] == doctest::Approx(0.0));
}

TEST_CASE("gradient estimators are unbiased under exhaustive expectation") {
    Rng rng(2024);
    for (std::uint64_t seed : {7ULL, 8ULL}) {
        const LinearMDP mdp = random_tabular_mdp(4, 2, seed, 0.85);
        const auto [occ_b, lambda] =
            behavior_occupancy(mdp, uniform_policy(4, 2), Setting::discounted);
        for (double c : {0.5, 1.0}) {
            const PolicyLogits policy = random_logits(mdp.dim, 0.7, rng);
            const Vector beta = 1.5 * rng.simplex(mdp.dim);
            const Vector theta = rng.normal_vector(mdp.dim);
            const Policy pi = policy.materialize(mdp.features, 4, 2);

            const Vector lhs_theta =
                testing::exhaustive_grad_theta(mdp, occ_b.mu, lambda, policy, beta, c);
            const Vector rhs_theta = testing::exact_grad_theta(mdp, lambda, pi, beta, c);
            CHECK((lhs_theta - rhs_theta).cwiseAbs().maxCoeff() < 1e-10);

            const Vector lhs_beta =
                testing::exhaustive_grad_beta(mdp, occ_b.mu, lambda, policy, theta, c);
            const Vector rhs_beta = testing::exact_grad_beta(mdp, lambda, pi, theta, c);
            CHECK((lhs_beta - rhs_beta).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("tuning constants and rates") {
    // G_theta^2 = 3 * (0.25 + 1.25 * 0.5) = 2.625 for these inputs.
    TuneBounds bounds{1.0, 0.5, 2};
    TuneTarget target;
    target.t_outer = 100;
    const SolverConfig config = tune(bounds, 1.0, 1.0, 1.0, 0.5, 1.0, target);
    const double g_theta =
        2.0 * config.d_theta / (config.eta * std::sqrt(static_cast<double>(config.k_inner)));
    CHECK(g_theta * g_theta == doctest::Approx(2.625).epsilon(1e-12));
    const double g_beta =
        2.0 * config.d_beta / (config.zeta * std::sqrt(static_cast<double>(config.t_outer)));
    CHECK(g_beta * g_beta == doctest::Approx(3.0 * (1.0 + 1.25)).epsilon(1e-12));
    CHECK(config.alpha ==
          doctest::Approx(std::sqrt(2.0 * std::log(2.0)) / 10.0).epsilon(1e-12));

    // c = 1/2 kills the norm factor entirely.
    const SolverConfig half_a = tune(bounds, 1.0, 1.0, 0.5, 0.5, 4.0, target);
    const SolverConfig half_b = tune(bounds, 1.0, 1.0, 0.5, 5.0, 4.0, target);
    CHECK(half_a.eta == doctest::Approx(half_b.eta).epsilon(1e-14));

    // Larger gamma means larger G_theta, hence smaller eta.
    double prev_eta = 1e100;
    for (double gamma : {0.5, 0.7, 0.9, 0.99}) {
        TuneBounds b{1.0, gamma, 2};
        const SolverConfig cfg = tune(b, 1.0, 1.0, 1.0, 0.5, 1.0, target);
        CHECK(cfg.eta < prev_eta);
        prev_eta = cfg.eta;
    }

    // Sample-budget target respects T K <= n.
    TuneTarget by_n;
    by_n.samples = 10000;
    const SolverConfig cfg_n = tune(bounds, 1.0, 1.0, 1.0, 0.5, 1.0, by_n);
    CHECK(static_cast<long long>(cfg_n.t_outer) * cfg_n.k_inner <= 10000);
    CHECK(cfg_n.t_outer >= 1);

    // Epsilon target shrinks with the target accuracy.
    TuneTarget eps1, eps2;
    eps1.epsilon = 0.5;
    eps2.epsilon = 0.25;
    CHECK(tune(bounds, 1.0, 1.0, 1.0, 0.5, 1.0, eps2).t_outer >=
          4 * tune(bounds, 1.0, 1.0, 1.0, 0.5, 1.0, eps1).t_outer - 1);
}

TEST_CASE("no-op run returns the initial policy") {
    const LinearMDP mdp = random_tabular_mdp(3, 2, 41, 0.8);
    const Policy uni = uniform_policy(3, 2);
    const Dataset data = draw_dataset(mdp, uni, 5, 3, Setting::discounted);

    SolverConfig config;  // T = K = 1, zero rates
    config.d_theta = 1.0;
    config.d_beta = 1.0;
    LearnerInputs env{&mdp.features, 2, mdp.discount, nullptr, false};
    const Policy pi_star = optimal_policy(mdp, Setting::discounted).first;
    OracleBundle oracle{&mdp, &uni, &pi_star};
    const SolverResult result = run(env, data, config, &oracle);

    CHECK(result.samples_used == 1);
    CHECK(result.thetas[0].cwiseAbs().maxCoeff() == 0.0);
    CHECK(result.betas[0].cwiseAbs().maxCoeff() == 0.0);
    const Policy pi1 = result.policy_at(mdp.features, 3, 2, 0);
    CHECK((pi1.probs - uni.probs).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(result.mixture_return ==
          doctest::Approx(policy_return(mdp, uni, Setting::discounted)).epsilon(1e-10));
}

TEST_CASE("single-action MDP always returns its only value") {
    const LinearMDP cyc = testing::cycle2(0.5);
    const Policy only = uniform_policy(2, 1);
    const Dataset data = draw_dataset(cyc, only, 64, 5, Setting::discounted);
    SolverConfig config;
    config.t_outer = 4;
    config.k_inner = 16;
    config.alpha = 0.3;
    config.zeta = 0.1;
    config.eta = 0.1;
    config.d_theta = 5.0;
    config.d_beta = 5.0;
    LearnerInputs env{&cyc.features, 1, 0.5, nullptr, false};
    OracleBundle oracle{&cyc, &only, &only};
    const SolverResult result = run(env, data, config, &oracle);
    CHECK(result.mixture_return == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
    CHECK(result.samples_used == 64);
}

TEST_CASE("iterates stay feasible and runs are deterministic") {
    const LinearMDP mdp = random_tabular_mdp(4, 2, 47, 0.9);
    const Policy uni = uniform_policy(4, 2);
    SolverConfig config;
    config.t_outer = 20;
    config.k_inner = 10;
    config.alpha = 0.05;
    config.zeta = 0.2;
    config.eta = 0.2;
    config.d_theta = 3.0;
    config.d_beta = 2.0;
    const Dataset data = draw_dataset(mdp, uni, 200, 8, Setting::discounted);
    LearnerInputs env{&mdp.features, 2, mdp.discount, nullptr, false};

    const SolverResult a = run(env, data, config);
    const SolverResult b = run(env, data, config);
    CHECK(a.samples_used == 200);
    for (int t = 0; t < 20; ++t) {
        CHECK(a.thetas[t].norm() <= 3.0);
        CHECK(a.betas[t].norm() <= 2.0);
        CHECK((a.thetas[t] - b.thetas[t]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a.betas[t] - b.betas[t]).cwiseAbs().maxCoeff() == 0.0);
    }

    SolverConfig too_big = config;
    too_big.t_outer = 21;
    CHECK_THROWS_AS(run(env, data, too_big), DatasetExhausted);
}

TEST_CASE("c = 1/2 requires a covariance") {
    const LinearMDP mdp = random_tabular_mdp(3, 2, 53, 0.8);
    const Policy uni = uniform_policy(3, 2);
    const Dataset data = draw_dataset(mdp, uni, 10, 2, Setting::discounted);
    SolverConfig config;
    config.c = 0.5;
    LearnerInputs env{&mdp.features, 2, mdp.discount, nullptr, false};
    CHECK_THROWS_AS(run(env, data, config), ConfigInvalid);
}

TEST_CASE("symbolic occupancy at the comparator point reconstructs the true one") {
    const LinearMDP mdp = random_tabular_mdp(4, 2, 59, 0.85);
    const Policy behavior = uniform_policy(4, 2);
    const Policy target =
        eps_mix_policy(optimal_policy(mdp, Setting::discounted).first, 0.25);
    for (double c : {0.5, 1.0}) {
        const auto [occ_b, lambda] = behavior_occupancy(mdp, behavior, Setting::discounted);
        const OccupancyMeasure occ_star = discounted_occupancy(mdp, target);
        const Vector beta_star =
            lambda.power(-c) * (mdp.features.transpose() * occ_star.mu);
        const Vector s = mdp.next_state_factor.transpose() * (lambda.power(c) * beta_star);
        Vector mu_sym(mdp.num_pairs());
        for (int x = 0; x < 4; ++x)
            for (int a = 0; a < 2; ++a)
                mu_sym[mdp.pair_index(x, a)] =
                    target.probs(x, a) *
                    ((1.0 - mdp.discount) * mdp.init_dist[x] + mdp.discount * s[x]);
        CHECK((mu_sym - occ_star.mu).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("duality gap vanishes at a saddle point") {
    const LinearMDP mdp = random_tabular_mdp(4, 2, 61, 0.8);
    const Policy behavior = uniform_policy(4, 2);
    const Policy comparator = uniform_policy(4, 2);  // compare against itself
    const double c = 1.0;

    const auto [occ_b, lambda] = behavior_occupancy(mdp, behavior, Setting::discounted);
    const Vector theta_star = policy_values(mdp, comparator, Setting::discounted).theta;
    const Vector beta_star =
        lambda.power(-c) *
        (mdp.features.transpose() * discounted_occupancy(mdp, comparator).mu);

    SolverResult result;
    result.setting = Setting::discounted;
    result.config.alpha = 1.0;
    for (int t = 0; t < 3; ++t) {
        result.policy_accums.push_back(Vector::Zero(mdp.dim));  // uniform policy
        result.thetas.push_back(theta_star);
        result.betas.push_back(beta_star);
    }
    const GapReport report = duality_gap_report(mdp, behavior, result, comparator, c);
    CHECK(std::abs(report.gap) < 1e-9);
    CHECK(std::abs(report.suboptimality) < 1e-9);
    CHECK(std::abs(report.term_theta) < 1e-9);
    CHECK(std::abs(report.term_beta) < 1e-9);
    CHECK(std::abs(report.term_pi) < 1e-9);
}

TEST_CASE("gap equals mixture suboptimality and its decomposition on arbitrary traces") {
    Rng seeds(31337);
    for (int i = 0; i < 6; ++i) {
        const LinearMDP mdp = random_tabular_mdp(4, 2, seeds.next_u64(), 0.8);
        const Policy behavior = uniform_policy(4, 2);
        const Policy comparator = optimal_policy(mdp, Setting::discounted).first;
        const double c = i % 2 == 0 ? 1.0 : 0.5;
        const SolverResult trace = random_trace(mdp, 5, 0.4, 2.0, 2.0, seeds.next_u64());

        const GapReport report = duality_gap_report(mdp, behavior, trace, comparator, c);
        CHECK(report.gap == doctest::Approx(report.suboptimality).epsilon(1e-8));
        CHECK(report.gap ==
              doctest::Approx(report.term_theta + report.term_beta + report.term_pi)
                  .epsilon(1e-9));

        // Cross-check the suboptimality against the mixture oracle.
        const double mix = mixture_return(mdp, trace.all_policies(mdp.features, 4, 2),
                                          Setting::discounted);
        const double opt = policy_return(mdp, comparator, Setting::discounted);
        CHECK(report.suboptimality == doctest::Approx(opt - mix).epsilon(1e-10));
    }
}

TEST_CASE("trace diagnostics agree with the post-hoc gap report") {
    const LinearMDP mdp = random_tabular_mdp(4, 2, 67, 0.85);
    const Policy uni = uniform_policy(4, 2);
    const Policy pi_star = optimal_policy(mdp, Setting::discounted).first;
    SolverConfig config;
    config.t_outer = 8;
    config.k_inner = 6;
    config.alpha = 0.1;
    config.zeta = 0.3;
    config.eta = 0.3;
    config.d_theta = 4.0;
    config.d_beta = 4.0;
    const Dataset data = draw_dataset(mdp, uni, 48, 15, Setting::discounted);
    LearnerInputs env{&mdp.features, 2, mdp.discount, nullptr, false};
    OracleBundle oracle{&mdp, &uni, &pi_star};
    const SolverResult result = run(env, data, config, &oracle);

    const GapReport report = duality_gap_report(mdp, uni, result, pi_star, config.c);
    const TraceRow& last = result.trace.back();
    CHECK(last.t == 8);
    CHECK(last.gap == doctest::Approx(report.gap).epsilon(1e-10));
    CHECK(last.term_theta == doctest::Approx(report.term_theta).epsilon(1e-10));
    CHECK(last.term_beta == doctest::Approx(report.term_beta).epsilon(1e-10));
    CHECK(last.term_pi == doctest::Approx(report.term_pi).epsilon(1e-10));
    CHECK(last.subopt == doctest::Approx(report.suboptimality).epsilon(1e-10));
    CHECK(result.trace.size() == 8);  // eval_every = 1
}

TEST_CASE("exhaustive second moments respect the tuning constants") {
    Rng rng(85);
    const LinearMDP mdp = random_tabular_mdp(4, 2, 95, 0.85);
    const Policy behavior = uniform_policy(4, 2);
    const auto [occ_b, lambda] = behavior_occupancy(mdp, behavior, Setting::discounted);
    const Matrix p = mdp.transition_matrix();
    const Vector r = mdp.rewards();
    const double gamma = mdp.discount;
    for (double c : {0.5, 1.0}) {
        const Matrix lam_features = weighted_features(mdp.features, &lambda, c);
        const PolicyLogits policy{rng.normal_vector(mdp.dim), 0.5};
        const Vector beta = 2.0 * rng.simplex(mdp.dim);
        const Vector theta = rng.normal_vector(mdp.dim);
        const double d_phi = mdp.bound_phi;
        const double d_theta = theta.norm();
        const double beta_weighted = beta.dot(lambda.power(2.0 * c - 1.0) * beta);

        double m2_theta = 0.0, m2_beta = 0.0;
        for (int x0 = 0; x0 < mdp.num_states; ++x0)
            for (int z = 0; z < mdp.num_pairs(); ++z)
                for (int xn = 0; xn < mdp.num_states; ++xn) {
                    const double w3 = mdp.init_dist[x0] * occ_b.mu[z] * p(z, xn);
                    if (w3 == 0.0) continue;
                    Transition w{x0, z / 2, z % 2, r[z], xn};
                    m2_theta += w3 * grad_theta_estimate(w, policy, beta, mdp.features,
                                                         lam_features, 2, gamma)
                                         .squaredNorm();
                    m2_beta += w3 * grad_beta_estimate(w, policy, theta, mdp.features,
                                                       lam_features, 2, gamma)
                                        .squaredNorm();
                }
        CHECK(m2_theta <= 3.0 * d_phi * d_phi *
                              ((1.0 - gamma) * (1.0 - gamma) +
                               (1.0 + gamma * gamma) * beta_weighted) +
                          1e-12);
        CHECK(m2_beta <=
              3.0 * (1.0 + (1.0 + gamma * gamma) * d_phi * d_phi * d_theta * d_theta) *
                      lambda.trace_power(2.0 * c - 1.0) +
                  1e-12);
    }
}

TEST_CASE("trace cadence produces ceil(T / eval_every) rows") {
    const LinearMDP mdp = random_tabular_mdp(3, 2, 101, 0.8);
    const Policy uni = uniform_policy(3, 2);
    const Policy pi_star = optimal_policy(mdp, Setting::discounted).first;
    SolverConfig config;
    config.t_outer = 8;
    config.k_inner = 2;
    config.eval_every = 3;
    config.d_theta = 1.0;
    config.d_beta = 1.0;
    const Dataset data = draw_dataset(mdp, uni, 16, 1, Setting::discounted);
    LearnerInputs env{&mdp.features, 2, mdp.discount, nullptr, false};
    OracleBundle oracle{&mdp, &uni, &pi_star};
    const SolverResult result = run(env, data, config, &oracle);
    REQUIRE(result.trace.size() == 3);  // ceil(8 / 3)
    CHECK(result.trace[0].t == 1);
    CHECK(result.trace[1].t == 4);
    CHECK(result.trace[2].t == 7);
}
