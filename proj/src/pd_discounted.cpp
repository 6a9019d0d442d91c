#include "lporl/pd_discounted.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "lporl/errors.hpp"

namespace lporl {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

Matrix weighted_features(const Matrix& features, const Covariance* lambda, double c) {
    if (c == 1.0) return features;
    if (lambda == nullptr)
        throw ConfigInvalid("c = 1/2 requires the behavior covariance");
    return features * lambda->power(c - 1.0);
}

Vector grad_theta_estimate(const Transition& sample, const PolicyLogits& policy,
                           const Vector& beta, const Matrix& features,
                           const Matrix& lam_features, int num_actions, double gamma) {
    const int z = sample.x * num_actions + sample.a;
    const double coupling = lam_features.row(z).dot(beta);  // <phi, Lambda^(c-1) beta>

    Vector g = Vector::Zero(features.cols());
    const Vector probs0 = policy.probs_at(features, num_actions, sample.x0);
    const Vector probs_next = policy.probs_at(features, num_actions, sample.x_next);
    for (int a = 0; a < num_actions; ++a) {
        g += ((1.0 - gamma) * probs0[a]) *
             features.row(sample.x0 * num_actions + a).transpose();
        g += (gamma * coupling * probs_next[a]) *
             features.row(sample.x_next * num_actions + a).transpose();
    }
    g -= features.row(z).dot(beta) * lam_features.row(z).transpose();
    return g;
}

Vector grad_beta_estimate(const Transition& sample, const PolicyLogits& policy,
                          const Vector& theta, const Matrix& features,
                          const Matrix& lam_features, int num_actions, double gamma) {
    const int z = sample.x * num_actions + sample.a;
    const Vector probs_next = policy.probs_at(features, num_actions, sample.x_next);
    double v_next = 0.0;
    for (int a = 0; a < num_actions; ++a)
        v_next += probs_next[a] *
                  features.row(sample.x_next * num_actions + a).dot(theta);
    const double scale = sample.r + gamma * v_next - features.row(z).dot(theta);
    return scale * lam_features.row(z).transpose();
}

SolverConfig tune(const TuneBounds& bounds, double d_theta, double d_beta, double c,
                  double lambda_norm2, double lambda_trace, const TuneTarget& target,
                  int eval_every, std::uint64_t seed) {
    if (!(bounds.d_phi > 0.0) || !(d_theta > 0.0) || !(d_beta > 0.0))
        throw ConfigInvalid("bounds must be positive");
    if (c != 0.5 && c != 1.0) throw ConfigInvalid("c must be 1/2 or 1");
    const double gamma = bounds.gamma;
    const double log_a = std::log(static_cast<double>(bounds.num_actions));
    const double lam_pow = std::pow(lambda_norm2, 2.0 * c - 1.0);

    const double g2_theta = 3.0 * bounds.d_phi * bounds.d_phi *
                            ((1.0 - gamma) * (1.0 - gamma) +
                             (1.0 + gamma * gamma) * d_beta * d_beta * lam_pow);
    const double g2_beta =
        3.0 * (1.0 + (1.0 + gamma * gamma) * bounds.d_phi * bounds.d_phi * d_theta * d_theta) *
        lambda_trace;
    const double g_theta = std::sqrt(g2_theta);
    const double g_beta = std::sqrt(g2_beta);

    const double kappa = (2.0 * d_beta * d_beta * g2_beta +
                          d_theta * d_theta * bounds.d_phi * bounds.d_phi * log_a) /
                         (2.0 * d_theta * d_theta * g2_theta);

    long long t_outer = 0;
    if (target.t_outer) {
        t_outer = *target.t_outer;
    } else if (target.epsilon) {
        if (!(*target.epsilon > 0.0)) throw ConfigInvalid("epsilon must be positive");
        const double c1 = 2.0 * d_beta * g_beta +
                          d_theta * bounds.d_phi * std::sqrt(2.0 * log_a) +
                          2.0 * d_theta * g_theta / std::sqrt(kappa);
        t_outer = static_cast<long long>(std::ceil((c1 / *target.epsilon) * (c1 / *target.epsilon)));
    } else if (target.samples) {
        t_outer = static_cast<long long>(
            std::floor(std::sqrt(static_cast<double>(*target.samples) / kappa)));
    } else {
        throw ConfigInvalid("tune target must set T, epsilon or a sample budget");
    }
    if (t_outer < 1) t_outer = 1;
    if (t_outer > (1LL << 31) - 1) throw ConfigInvalid("tuned T does not fit an int");

    auto k_of = [&](long long t) {
        long long k = static_cast<long long>(std::ceil(kappa * static_cast<double>(t)));
        return k < 1 ? 1LL : k;
    };
    long long k_inner = k_of(t_outer);
    if (target.samples) {
        while (t_outer > 1 && t_outer * k_of(t_outer) > *target.samples) --t_outer;
        k_inner = k_of(t_outer);
        if (t_outer == 1 && k_inner > *target.samples) k_inner = *target.samples;
    }

    if (k_inner > (1LL << 31) - 1) throw ConfigInvalid("tuned K does not fit an int");

    SolverConfig config;
    config.t_outer = static_cast<int>(t_outer);
    config.k_inner = static_cast<int>(k_inner);
    config.c = c;
    config.eta = 2.0 * d_theta / (g_theta * std::sqrt(static_cast<double>(config.k_inner)));
    config.zeta = 2.0 * d_beta / (g_beta * std::sqrt(static_cast<double>(config.t_outer)));
    config.alpha = std::sqrt(2.0 * log_a) /
                   (bounds.d_phi * d_theta * std::sqrt(static_cast<double>(config.t_outer)));
    config.d_theta = d_theta;
    config.d_beta = d_beta;
    config.eval_every = eval_every;
    config.seed = seed;
    return config;
}

DiscountedGapEvaluator::DiscountedGapEvaluator(const LinearMDP& mdp, const Policy& behavior,
                                               const Policy& comparator, double c)
    : mdp_(&mdp),
      c_(c),
      lambda_(behavior_occupancy(mdp, behavior, Setting::discounted).second),
      comparator_(comparator) {
    const OccupancyMeasure occ_star = discounted_occupancy(mdp, comparator);
    mu_star_ = occ_star.mu;
    nu_star_ = occ_star.nu;
    rewards_ = mdp.rewards();
    lambda_c_ = lambda_.power(c);
    phimu_star_ = mdp.features.transpose() * mu_star_;
    beta_star_ = lambda_.power(-c) * phimu_star_;
    lambda_c_omega_ = lambda_c_ * mdp.reward_factor;
    comparator_return_ = mu_star_.dot(rewards_);
    f_left_const_ = beta_star_.dot(lambda_c_omega_);

    // Gradient of the left f slot in theta: Phi^T mu_{beta*,pi*} - Lambda^c beta*,
    // evaluated from the symbolic occupancy, not from mu* directly.
    const Vector s_star = mdp.next_state_factor.transpose() * (lambda_c_ * beta_star_);
    Vector mu_sym(mdp.num_pairs());
    for (int x = 0; x < mdp.num_states; ++x)
        for (int a = 0; a < mdp.num_actions; ++a)
            mu_sym[mdp.pair_index(x, a)] =
                comparator.probs(x, a) *
                ((1.0 - mdp.discount) * mdp.init_dist[x] + mdp.discount * s_star[x]);
    f_left_grad_ = mdp.features.transpose() * mu_sym - lambda_c_ * beta_star_;
}

DiscountedGapEvaluator::Round DiscountedGapEvaluator::eval_round(const Policy& pi_t,
                                                                 const Vector& theta_t,
                                                                 const Vector& beta_t) const {
    const LinearMDP& mdp = *mdp_;
    const double gamma = mdp.discount;
    Round round;

    const ValueSolution vals = policy_values(mdp, pi_t, Setting::discounted);
    const Vector& theta_star = vals.theta;

    // g_theta = Phi^T mu_{beta_t, pi_t} - Lambda^c beta_t
    const Vector lam_beta = lambda_c_ * beta_t;
    const Vector s = mdp.next_state_factor.transpose() * lam_beta;
    Vector mu_t(mdp.num_pairs());
    for (int x = 0; x < mdp.num_states; ++x)
        for (int a = 0; a < mdp.num_actions; ++a)
            mu_t[mdp.pair_index(x, a)] =
                pi_t.probs(x, a) * ((1.0 - gamma) * mdp.init_dist[x] + gamma * s[x]);
    const Vector g_theta = mdp.features.transpose() * mu_t - lam_beta;

    // g_beta = Lambda^c (omega + gamma Psi v_{theta_t, pi_t} - theta_t)
    const Vector q_t = mdp.features * theta_t;
    Vector v_t = Vector::Zero(mdp.num_states);
    for (int x = 0; x < mdp.num_states; ++x)
        for (int a = 0; a < mdp.num_actions; ++a)
            v_t[x] += pi_t.probs(x, a) * q_t[mdp.pair_index(x, a)];
    const Vector g_beta =
        lambda_c_ * (mdp.reward_factor + gamma * mdp.next_state_factor * v_t - theta_t);

    round.term_theta = (theta_t - theta_star).dot(g_theta);
    round.term_beta = (beta_star_ - beta_t).dot(g_beta);
    round.term_pi = 0.0;
    for (int x = 0; x < mdp.num_states; ++x) {
        double inner = 0.0;
        for (int a = 0; a < mdp.num_actions; ++a)
            inner += (comparator_.probs(x, a) - pi_t.probs(x, a)) *
                     q_t[mdp.pair_index(x, a)];
        round.term_pi += nu_star_[x] * inner;
    }

    // f(beta*, pi*; theta_t) and f(beta_t, pi_t; theta*_t), evaluated through
    // the two algebraic forms of the reduced Lagrangian.
    const double f_left = f_left_const_ + theta_t.dot(f_left_grad_);
    const Vector q_star = mdp.features * theta_star;
    Vector v_star = Vector::Zero(mdp.num_states);
    for (int x = 0; x < mdp.num_states; ++x)
        for (int a = 0; a < mdp.num_actions; ++a)
            v_star[x] += pi_t.probs(x, a) * q_star[mdp.pair_index(x, a)];
    const double f_right =
        (1.0 - gamma) * mdp.init_dist.dot(v_star) +
        lam_beta.dot(mdp.reward_factor + gamma * mdp.next_state_factor * v_star - theta_star);
    round.gap = f_left - f_right;

    round.policy_return = discounted_occupancy(mdp, pi_t).mu.dot(rewards_);
    return round;
}

SolverResult run(const LearnerInputs& env, SampleSource& samples,
                 const SolverConfig& config, const OracleBundle* oracle) {
    config.validate(Setting::discounted);
    const Matrix& features = *env.features;
    const int num_actions = env.num_actions;
    const int d = static_cast<int>(features.cols());
    const double gamma = env.gamma;
    const Matrix lam_features = weighted_features(features, env.lambda, config.c);

    const auto start = std::chrono::steady_clock::now();

    const BallDomain ball_theta(config.d_theta);
    const BallDomain ball_beta(config.d_beta);
    Vector theta = Vector::Zero(d);
    Vector beta = Vector::Zero(d);
    PolicyLogits policy{Vector::Zero(d), config.alpha};

    SolverResult res;
    res.config = config;
    res.setting = Setting::discounted;
    res.lambda_approximate = env.lambda_empirical && config.c == 0.5;
    res.policy_accums.reserve(config.t_outer);
    res.thetas.reserve(config.t_outer);
    res.betas.reserve(config.t_outer);

    std::optional<DiscountedGapEvaluator> gap_eval;
    if (oracle != nullptr)
        gap_eval.emplace(*oracle->mdp, *oracle->behavior, *oracle->comparator, config.c);
    double sum_return = 0.0, sum_gap = 0.0;
    double sum_theta = 0.0, sum_beta = 0.0, sum_pi = 0.0;

    for (int t = 1; t <= config.t_outer; ++t) {
        res.policy_accums.push_back(policy.accum);
        res.betas.push_back(beta);

        Vector theta_cur = theta;
        Vector theta_sum = theta_cur;
        for (int k = 1; k <= config.k_inner - 1; ++k) {
            const Transition w = samples.next();
            ++res.samples_used;
            const Vector g = grad_theta_estimate(w, policy, beta, features, lam_features,
                                                 num_actions, gamma);
            theta_cur = project_ball(theta_cur - config.eta * g, ball_theta);
            theta_sum += theta_cur;
        }
        theta = theta_sum / static_cast<double>(config.k_inner);
        res.thetas.push_back(theta);

        const Transition w = samples.next();
        ++res.samples_used;
        const Vector gb = grad_beta_estimate(w, policy, theta, features, lam_features,
                                             num_actions, gamma);
        beta = project_ball(beta + config.zeta * gb, ball_beta);

        if (gap_eval) {
            const Policy pi_t =
                policy.materialize(features, oracle->mdp->num_states, num_actions);
            const auto round = gap_eval->eval_round(pi_t, theta, res.betas.back());
            sum_return += round.policy_return;
            sum_gap += round.gap;
            sum_theta += round.term_theta;
            sum_beta += round.term_beta;
            sum_pi += round.term_pi;
        }
        if ((t - 1) % config.eval_every == 0) {
            TraceRow row;
            row.t = t;
            row.samples = res.samples_used;
            const double inv_t = 1.0 / static_cast<double>(t);
            row.exact_return = gap_eval ? sum_return * inv_t : kNaN;
            row.subopt =
                gap_eval ? gap_eval->comparator_return() - sum_return * inv_t : kNaN;
            row.gap = gap_eval ? sum_gap * inv_t : kNaN;
            row.term_theta = gap_eval ? sum_theta * inv_t : kNaN;
            row.term_beta = gap_eval ? sum_beta * inv_t : kNaN;
            row.term_pi = gap_eval ? sum_pi * inv_t : kNaN;
            row.term_rho = kNaN;
            row.rho_t = kNaN;
            res.trace.push_back(row);
        }

        policy.accum += theta;
    }

    const double t_total = static_cast<double>(config.t_outer);
    res.mixture_return = gap_eval ? sum_return / t_total : kNaN;
    res.comparator_return = gap_eval ? gap_eval->comparator_return() : kNaN;
    res.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

SolverResult run(const LearnerInputs& env, const Dataset& data,
                 const SolverConfig& config, const OracleBundle* oracle) {
    const long long needed =
        static_cast<long long>(config.t_outer) * static_cast<long long>(config.k_inner);
    if (static_cast<long long>(data.size()) < needed)
        throw DatasetExhausted("run needs " + std::to_string(needed) + " samples, dataset has " +
                               std::to_string(data.size()));
    DatasetCursor cursor(data);
    return run(env, cursor, config, oracle);
}

GapReport duality_gap_report(const LinearMDP& mdp, const Policy& behavior,
                             const SolverResult& result, const Policy& comparator,
                             double c) {
    const DiscountedGapEvaluator eval(mdp, behavior, comparator, c);
    const int t_total = static_cast<int>(result.policy_accums.size());
    if (t_total == 0) throw ConfigInvalid("empty solver trace");

    GapReport report;
    double sum_return = 0.0;
    for (int t = 0; t < t_total; ++t) {
        const Policy pi_t =
            result.policy_at(mdp.features, mdp.num_states, mdp.num_actions, t);
        const auto round = eval.eval_round(pi_t, result.thetas[t], result.betas[t]);
        report.gap += round.gap;
        report.term_theta += round.term_theta;
        report.term_beta += round.term_beta;
        report.term_pi += round.term_pi;
        sum_return += round.policy_return;
    }
    const double inv_t = 1.0 / static_cast<double>(t_total);
    report.gap *= inv_t;
    report.term_theta *= inv_t;
    report.term_beta *= inv_t;
    report.term_pi *= inv_t;
    report.term_rho = 0.0;
    report.suboptimality = eval.comparator_return() - sum_return * inv_t;
    return report;
}

}  // namespace lporl
