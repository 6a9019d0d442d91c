#pragma once

#include <optional>

#include "lporl/pd_common.hpp"

namespace lporl {

/// Phi * Lambda^(c-1): row z is (Lambda^(c-1) phi(z))^T. For c = 1 this is
/// the feature matrix itself, so that path never touches Lambda.
Matrix weighted_features(const Matrix& features, const Covariance* lambda, double c);

/// Stochastic gradient in theta at one sample, the feature image of the
/// two-point measure carried by (x0, x') minus the quadratic term:
///
///   g = (1-gamma) phibar(x0) + gamma <phi, L beta> phibar(x')
///       - (L phi) <phi, beta>,
///
/// where L = Lambda^(c-1), phi = phi(x,a) and phibar(x) is the
/// policy-averaged feature at x. Cost O(|A| d).
Vector grad_theta_estimate(const Transition& sample, const PolicyLogits& policy,
                           const Vector& beta, const Matrix& features,
                           const Matrix& lam_features, int num_actions, double gamma);

/// Stochastic gradient in beta at one sample:
///   g = (L phi) (r + gamma v(x') - <phi, theta>),
/// with v(x') = sum_a pi(a|x') <phi(x',a), theta>. Cost O(|A| d).
Vector grad_beta_estimate(const Transition& sample, const PolicyLogits& policy,
                          const Vector& theta, const Matrix& features,
                          const Matrix& lam_features, int num_actions, double gamma);

/// Environment bounds the tuner needs.
struct TuneBounds {
    double d_phi = 1.0;
    double gamma = 0.9;
    int num_actions = 2;
};

/// Exactly one of these fixes the schedule length: the outer iteration
/// count, a target accuracy for the closed-form bound, or a total sample
/// budget (T K <= n for the discounted solver, T (K+1) <= n for the
/// average-reward solver).
struct TuneTarget {
    std::optional<int> t_outer;
    std::optional<double> epsilon;
    std::optional<long long> samples;
};

/// Learning rates and iteration split from the closed-form analysis:
///
///   G_theta^2 = 3 D_phi^2 ((1-gamma)^2 + (1+gamma^2) D_beta^2 |Lambda|^(2c-1))
///   G_beta^2  = 3 (1 + (1+gamma^2) D_phi^2 D_theta^2) tr(Lambda^(2c-1))
///   eta  = 2 D_theta / (G_theta sqrt(K)),  zeta = 2 D_beta / (G_beta sqrt(T)),
///   alpha = sqrt(2 log|A|) / (D_phi D_theta sqrt(T)),
///   K = T (2 D_beta^2 G_beta^2 + D_theta^2 D_phi^2 log|A|) / (2 D_theta^2 G_theta^2).
///
/// lambda_norm2 is |Lambda|_2 and lambda_trace is tr(Lambda^(2c-1)); pass
/// their upper bounds (D_phi^2 each, and d for the trace at c = 1/2) when
/// Lambda is unknown.
SolverConfig tune(const TuneBounds& bounds, double d_theta, double d_beta, double c,
                  double lambda_norm2, double lambda_trace, const TuneTarget& target,
                  int eval_every = 1, std::uint64_t seed = 0);

/// Double-loop projected primal-dual solver, discounted setting. Per outer
/// round: K-1 inner descent steps on theta, the K iterates averaged; one
/// ascent step on beta; softmax policy update through the logit
/// accumulator. Consumes exactly T K samples. The oracle, when given, only
/// fills diagnostics.
SolverResult run(const LearnerInputs& env, SampleSource& samples,
                 const SolverConfig& config, const OracleBundle* oracle = nullptr);

/// Dataset-mode overload; checks the length bound upfront.
SolverResult run(const LearnerInputs& env, const Dataset& data,
                 const SolverConfig& config, const OracleBundle* oracle = nullptr);

/// Exact-expectation evaluator for the dynamic duality gap against the
/// standard comparators (theta*_t the true value parameter of pi_t, beta*
/// the reparametrized comparator occupancy image). Oracle-side only.
class DiscountedGapEvaluator {
  public:
    DiscountedGapEvaluator(const LinearMDP& mdp, const Policy& behavior,
                           const Policy& comparator, double c);

    struct Round {
        double policy_return = 0.0;  // <mu^{pi_t}, r>
        double gap = 0.0;            // f(beta*, pi*; theta_t) - f(beta_t, pi_t; theta*_t)
        double term_theta = 0.0;
        double term_beta = 0.0;
        double term_pi = 0.0;
    };

    Round eval_round(const Policy& pi_t, const Vector& theta_t, const Vector& beta_t) const;

    double comparator_return() const { return comparator_return_; }
    const Covariance& lambda() const { return lambda_; }
    const Vector& beta_star() const { return beta_star_; }

  private:
    const LinearMDP* mdp_;
    double c_;
    Covariance lambda_;
    Policy comparator_;
    Vector mu_star_, nu_star_;
    Vector beta_star_;
    Vector rewards_;
    Matrix lambda_c_;
    Vector lambda_c_omega_;
    Vector phimu_star_;          // Phi^T mu*
    Vector f_left_grad_;         // Phi^T mu_{beta*,pi*} - Lambda^c beta*
    double comparator_return_ = 0.0;
    double f_left_const_ = 0.0;  // <beta*, Lambda^c omega>
};

/// Post-hoc gap report for a finished run: average gap, its three-term
/// regret decomposition with exact gradients, and the mixture
/// suboptimality the gap must equal.
GapReport duality_gap_report(const LinearMDP& mdp, const Policy& behavior,
                             const SolverResult& result, const Policy& comparator,
                             double c);

}  // namespace lporl
