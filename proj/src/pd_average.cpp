#include "lporl/pd_average.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "lporl/errors.hpp"

namespace lporl {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Substream id for the solver's own action draws, separate from any dataset.
constexpr std::uint64_t kActionStream = 0xA5A5A5A5ULL;
}  // namespace

VarrhoVector solve_varrho(const Matrix& features) {
    const Vector ones = Vector::Ones(features.rows());
    VarrhoVector out;
    out.varrho = features.colPivHouseholderQr().solve(ones);
    out.residual = (features * out.varrho - ones).cwiseAbs().maxCoeff();
    if (out.residual > 1e-8)
        throw AssumptionViolated(
            "all-ones function is not in the feature span (residual " +
            std::to_string(out.residual) + ")");
    return out;
}

std::pair<double, Vector> inner_grads_avg_at(const Transition& sample, const Vector& beta,
                                             const Matrix& features,
                                             const Matrix& lam_features, int num_actions,
                                             int a_next) {
    const int z = sample.x * num_actions + sample.a;
    const double coupling = lam_features.row(z).dot(beta);
    Vector g_theta =
        coupling * (features.row(sample.x_next * num_actions + a_next) - features.row(z))
            .transpose();
    return {1.0 - coupling, std::move(g_theta)};
}

std::pair<double, Vector> inner_grads_avg(const Transition& sample,
                                          const PolicyLogits& policy, const Vector& beta,
                                          const Matrix& features,
                                          const Matrix& lam_features, int num_actions,
                                          Rng& rng) {
    const Vector probs_next = policy.probs_at(features, num_actions, sample.x_next);
    const int a_next = rng.categorical(probs_next);
    return inner_grads_avg_at(sample, beta, features, lam_features, num_actions, a_next);
}

Vector outer_grad_beta_avg(const Transition& sample, const PolicyLogits& policy,
                           const Vector& theta, double rho, const Matrix& features,
                           const Matrix& lam_features, int num_actions) {
    const int z = sample.x * num_actions + sample.a;
    const Vector probs_next = policy.probs_at(features, num_actions, sample.x_next);
    double v_next = 0.0;
    for (int a = 0; a < num_actions; ++a)
        v_next += probs_next[a] *
                  features.row(sample.x_next * num_actions + a).dot(theta);
    const double scale = sample.r + v_next - features.row(z).dot(theta) - rho;
    return scale * lam_features.row(z).transpose();
}

SolverConfig tune_average(const TuneBounds& bounds, double d_theta, double d_beta,
                          double c, double lambda_norm2, double lambda_trace,
                          const TuneTarget& target, int eval_every, std::uint64_t seed) {
    if (!(bounds.d_phi > 0.0) || !(d_theta > 0.0) || !(d_beta > 0.0))
        throw ConfigInvalid("bounds must be positive");
    if (c != 0.5 && c != 1.0) throw ConfigInvalid("c must be 1/2 or 1");
    const double log_a = std::log(static_cast<double>(bounds.num_actions));
    const double lam_pow = std::pow(lambda_norm2, 2.0 * c - 1.0);

    const double one_plus = 1.0 + 2.0 * d_theta * bounds.d_phi;
    const double g2_beta = lambda_trace * one_plus * one_plus;
    const double g2_rho = 2.0 * (1.0 + d_beta * d_beta * lam_pow);
    const double g2_theta = 4.0 * bounds.d_phi * bounds.d_phi * d_beta * d_beta * lam_pow;
    if (!(g2_theta > 0.0)) throw ConfigInvalid("degenerate covariance bound");
    const double g_beta = std::sqrt(g2_beta);
    const double g_rho = std::sqrt(g2_rho);
    const double g_theta = std::sqrt(g2_theta);

    const double kappa =
        (4.0 * d_beta * d_beta * g2_beta +
         2.0 * d_theta * d_theta * bounds.d_phi * bounds.d_phi * log_a) /
        (g2_rho + 4.0 * d_theta * d_theta * g2_theta);

    long long t_outer = 0;
    if (target.t_outer) {
        t_outer = *target.t_outer;
    } else if (target.epsilon) {
        if (!(*target.epsilon > 0.0)) throw ConfigInvalid("epsilon must be positive");
        const double c1 = 2.0 * d_beta * g_beta +
                          d_theta * bounds.d_phi * std::sqrt(2.0 * log_a) +
                          (g_rho + 2.0 * d_theta * g_theta) / std::sqrt(kappa);
        t_outer = static_cast<long long>(std::ceil((c1 / *target.epsilon) * (c1 / *target.epsilon)));
    } else if (target.samples) {
        const double n = static_cast<double>(*target.samples);
        t_outer = static_cast<long long>(
            std::floor((-1.0 + std::sqrt(1.0 + 4.0 * kappa * n)) / (2.0 * kappa)));
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
        while (t_outer > 1 && t_outer * (k_of(t_outer) + 1) > *target.samples) --t_outer;
        k_inner = k_of(t_outer);
        if (t_outer == 1 && k_inner + 1 > *target.samples) {
            if (*target.samples < 2) throw ConfigInvalid("sample budget below 2");
            k_inner = *target.samples - 1;
        }
    }

    if (k_inner > (1LL << 31) - 1) throw ConfigInvalid("tuned K does not fit an int");

    SolverConfig config;
    config.t_outer = static_cast<int>(t_outer);
    config.k_inner = static_cast<int>(k_inner);
    config.c = c;
    config.zeta = 2.0 * d_beta / (g_beta * std::sqrt(static_cast<double>(config.t_outer)));
    config.alpha = std::sqrt(2.0 * log_a) /
                   (d_theta * bounds.d_phi * std::sqrt(static_cast<double>(config.t_outer)));
    config.xi = 1.0 / (g_rho * std::sqrt(static_cast<double>(config.k_inner)));
    config.eta = 2.0 * d_theta / (g_theta * std::sqrt(static_cast<double>(config.k_inner)));
    config.d_theta = d_theta;
    config.d_beta = d_beta;
    config.eval_every = eval_every;
    config.seed = seed;
    return config;
}

AverageGapEvaluator::AverageGapEvaluator(const LinearMDP& mdp, const Policy& behavior,
                                         const Policy& comparator, double c)
    : mdp_(&mdp),
      c_(c),
      lambda_(behavior_occupancy(mdp, behavior, Setting::average).second),
      comparator_(comparator),
      varrho_(solve_varrho(mdp.features)) {
    const OccupancyMeasure occ_star = stationary_occupancy(mdp, comparator);
    mu_star_ = occ_star.mu;
    nu_star_ = occ_star.nu;
    rewards_ = mdp.rewards();
    lambda_c_ = lambda_.power(c);
    beta_star_ = lambda_.power(-c) * (mdp.features.transpose() * mu_star_);
    lambda_c_varrho_ = lambda_c_ * varrho_.varrho;
    comparator_return_ = mu_star_.dot(rewards_);
}

AverageGapEvaluator::Round AverageGapEvaluator::eval_round(const Policy& pi_t,
                                                           double rho_t,
                                                           const Vector& theta_t,
                                                           const Vector& beta_t) const {
    const LinearMDP& mdp = *mdp_;
    Round round;

    const ValueSolution vals = policy_values(mdp, pi_t, Setting::average);
    const double rho_star = vals.rho;
    const Vector q_pi = mdp.features * vals.theta;
    const Vector theta_star = vals.theta - q_pi.minCoeff() * varrho_.varrho;

    // g_theta = Phi^T mu_{beta_t, pi_t} - Lambda^c beta_t with
    // mu_{beta_t, pi_t}(x,a) = pi_t(a|x) <psi(x), Lambda^c beta_t>.
    const Vector lam_beta = lambda_c_ * beta_t;
    const Vector s = mdp.next_state_factor.transpose() * lam_beta;
    Vector mu_t(mdp.num_pairs());
    for (int x = 0; x < mdp.num_states; ++x)
        for (int a = 0; a < mdp.num_actions; ++a)
            mu_t[mdp.pair_index(x, a)] = pi_t.probs(x, a) * s[x];
    const Vector g_theta = mdp.features.transpose() * mu_t - lam_beta;

    const double g_rho = 1.0 - beta_t.dot(lambda_c_varrho_);

    const Vector q_t = mdp.features * theta_t;
    Vector v_t = Vector::Zero(mdp.num_states);
    for (int x = 0; x < mdp.num_states; ++x)
        for (int a = 0; a < mdp.num_actions; ++a)
            v_t[x] += pi_t.probs(x, a) * q_t[mdp.pair_index(x, a)];
    const Vector g_beta =
        lambda_c_ * (mdp.reward_factor + mdp.next_state_factor * v_t - theta_t -
                     rho_t * varrho_.varrho);

    round.term_theta = (theta_t - theta_star).dot(g_theta);
    round.term_rho = (rho_t - rho_star) * g_rho;
    round.term_beta = (beta_star_ - beta_t).dot(g_beta);
    round.term_pi = 0.0;
    for (int x = 0; x < mdp.num_states; ++x) {
        double inner = 0.0;
        for (int a = 0; a < mdp.num_actions; ++a)
            inner += (comparator_.probs(x, a) - pi_t.probs(x, a)) *
                     q_t[mdp.pair_index(x, a)];
        round.term_pi += nu_star_[x] * inner;
    }

    // f(beta, pi; rho, theta) = rho + <beta, Lambda^c (omega + Psi v - theta - rho varrho)>
    Vector v_comp = Vector::Zero(mdp.num_states);  // v_{theta_t, pi*}
    for (int x = 0; x < mdp.num_states; ++x)
        for (int a = 0; a < mdp.num_actions; ++a)
            v_comp[x] += comparator_.probs(x, a) * q_t[mdp.pair_index(x, a)];
    round.f_left =
        rho_t + beta_star_.dot(lambda_c_ * (mdp.reward_factor +
                                            mdp.next_state_factor * v_comp - theta_t -
                                            rho_t * varrho_.varrho));

    const Vector q_star_shift = mdp.features * theta_star;
    Vector v_star = Vector::Zero(mdp.num_states);  // v_{theta*_t, pi_t}
    for (int x = 0; x < mdp.num_states; ++x)
        for (int a = 0; a < mdp.num_actions; ++a)
            v_star[x] += pi_t.probs(x, a) * q_star_shift[mdp.pair_index(x, a)];
    const double f_right =
        rho_star + beta_t.dot(lambda_c_ * (mdp.reward_factor +
                                           mdp.next_state_factor * v_star - theta_star -
                                           rho_star * varrho_.varrho));

    round.gap = round.f_left - f_right;
    round.policy_return = rho_star;
    return round;
}

SolverResult run_average(const LearnerInputs& env, SampleSource& samples,
                         const SolverConfig& config, const OracleBundle* oracle) {
    config.validate(Setting::average);
    const Matrix& features = *env.features;
    const int num_actions = env.num_actions;
    const int d = static_cast<int>(features.cols());
    const Matrix lam_features = weighted_features(features, env.lambda, config.c);

    const auto start = std::chrono::steady_clock::now();

    const BallDomain ball_theta(config.d_theta);
    const BallDomain ball_beta(config.d_beta);
    Vector theta = Vector::Zero(d);
    Vector beta = Vector::Zero(d);
    double rho = 0.0;
    PolicyLogits policy{Vector::Zero(d), config.alpha};
    Rng rng = Rng::substream(config.seed, kActionStream);

    SolverResult res;
    res.config = config;
    res.setting = Setting::average;
    res.lambda_approximate = env.lambda_empirical && config.c == 0.5;
    res.policy_accums.reserve(config.t_outer);

    std::optional<AverageGapEvaluator> gap_eval;
    if (oracle != nullptr)
        gap_eval.emplace(*oracle->mdp, *oracle->behavior, *oracle->comparator, config.c);
    double sum_return = 0.0, sum_gap = 0.0;
    double sum_theta = 0.0, sum_beta = 0.0, sum_pi = 0.0, sum_rho = 0.0;

    for (int t = 1; t <= config.t_outer; ++t) {
        res.policy_accums.push_back(policy.accum);
        res.betas.push_back(beta);

        Vector theta_cur = theta;
        double rho_cur = rho;
        Vector theta_sum = Vector::Zero(d);
        double rho_iter_sum = 0.0;
        for (int i = 1; i <= config.k_inner; ++i) {
            theta_sum += theta_cur;
            rho_iter_sum += rho_cur;
            const Transition w = samples.next();
            ++res.samples_used;
            const auto [g_rho, g_theta] = inner_grads_avg(w, policy, beta, features,
                                                          lam_features, num_actions, rng);
            rho_cur = clamp_interval(rho_cur - config.xi * g_rho, 0.0, 1.0);
            theta_cur = project_ball(theta_cur - config.eta * g_theta, ball_theta);
        }
        theta = theta_sum / static_cast<double>(config.k_inner);
        rho = rho_iter_sum / static_cast<double>(config.k_inner);
        res.thetas.push_back(theta);
        res.rhos.push_back(rho);

        const Transition w = samples.next();
        ++res.samples_used;
        const Vector gb = outer_grad_beta_avg(w, policy, theta, rho, features,
                                              lam_features, num_actions);
        beta = project_ball(beta + config.zeta * gb, ball_beta);

        if (gap_eval) {
            const Policy pi_t =
                policy.materialize(features, oracle->mdp->num_states, num_actions);
            const auto round = gap_eval->eval_round(pi_t, rho, theta, res.betas.back());
            sum_return += round.policy_return;
            sum_gap += round.gap;
            sum_theta += round.term_theta;
            sum_beta += round.term_beta;
            sum_pi += round.term_pi;
            sum_rho += round.term_rho;
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
            row.term_rho = gap_eval ? sum_rho * inv_t : kNaN;
            row.rho_t = rho;
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

SolverResult run_average(const LearnerInputs& env, const Dataset& data,
                         const SolverConfig& config, const OracleBundle* oracle) {
    const long long needed = static_cast<long long>(config.t_outer) *
                             (static_cast<long long>(config.k_inner) + 1);
    if (static_cast<long long>(data.size()) < needed)
        throw DatasetExhausted("run needs " + std::to_string(needed) + " samples, dataset has " +
                               std::to_string(data.size()));
    DatasetCursor cursor(data);
    return run_average(env, cursor, config, oracle);
}

GapReport duality_gap_report_avg(const LinearMDP& mdp, const Policy& behavior,
                                 const SolverResult& result, const Policy& comparator,
                                 double c) {
    const AverageGapEvaluator eval(mdp, behavior, comparator, c);
    const int t_total = static_cast<int>(result.policy_accums.size());
    if (t_total == 0) throw ConfigInvalid("empty solver trace");

    GapReport report;
    double sum_return = 0.0;
    for (int t = 0; t < t_total; ++t) {
        const Policy pi_t =
            result.policy_at(mdp.features, mdp.num_states, mdp.num_actions, t);
        const auto round =
            eval.eval_round(pi_t, result.rhos[t], result.thetas[t], result.betas[t]);
        report.gap += round.gap;
        report.term_theta += round.term_theta;
        report.term_beta += round.term_beta;
        report.term_pi += round.term_pi;
        report.term_rho += round.term_rho;
        sum_return += round.policy_return;
    }
    const double inv_t = 1.0 / static_cast<double>(t_total);
    report.gap *= inv_t;
    report.term_theta *= inv_t;
    report.term_beta *= inv_t;
    report.term_pi *= inv_t;
    report.term_rho *= inv_t;
    report.suboptimality = eval.comparator_return() - sum_return * inv_t;
    return report;
}

}  // namespace lporl
