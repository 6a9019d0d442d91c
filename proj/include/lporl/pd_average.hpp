#pragma once

#include <optional>
#include <utility>

#include "lporl/pd_common.hpp"
#include "lporl/pd_discounted.hpp"
#include "lporl/rng.hpp"

namespace lporl {

/// Feature-space anchor with <phi(x,a), varrho> = 1 for every pair; the
/// average-reward machinery needs the all-ones function in the feature span.
struct VarrhoVector {
    Vector varrho;
    double residual = 0.0;  // max_z |<phi(z), varrho> - 1|
};

/// Least-squares solve of Phi varrho = 1. Throws AssumptionViolated when
/// the residual exceeds 1e-8.
VarrhoVector solve_varrho(const Matrix& features);

/// Inner-loop gradient estimates at one sample:
///   g_rho   = 1 - <phi, Lambda^(c-1) beta>
///   g_theta = (phi(x', a') - phi(x, a)) <phi, Lambda^(c-1) beta>,
/// with a' drawn from the current policy at x' using the run's RNG stream.
std::pair<double, Vector> inner_grads_avg(const Transition& sample,
                                          const PolicyLogits& policy, const Vector& beta,
                                          const Matrix& features,
                                          const Matrix& lam_features, int num_actions,
                                          Rng& rng);

/// Same estimates with the follow-up action fixed; inner_grads_avg draws
/// a_next and delegates here.
std::pair<double, Vector> inner_grads_avg_at(const Transition& sample, const Vector& beta,
                                             const Matrix& features,
                                             const Matrix& lam_features, int num_actions,
                                             int a_next);

/// Outer gradient estimate
///   g_beta = Lambda^(c-1) phi (r + v(x') - <theta, phi> - rho).
Vector outer_grad_beta_avg(const Transition& sample, const PolicyLogits& policy,
                           const Vector& theta, double rho, const Matrix& features,
                           const Matrix& lam_features, int num_actions);

/// Average-reward analogue of tune():
///   G_beta^2  = tr(Lambda^(2c-1)) (1 + 2 D_theta D_phi)^2
///   G_rho^2   = 2 (1 + D_beta^2 |Lambda|^(2c-1))
///   G_theta^2 = 4 D_phi^2 D_beta^2 |Lambda|^(2c-1)
///   zeta = 2 D_beta / (G_beta sqrt(T)),  alpha = sqrt(2 log|A|)/(D_theta D_phi sqrt(T)),
///   xi = 1 / (G_rho sqrt(K)),  eta = 2 D_theta / (G_theta sqrt(K)),
///   K = T (4 D_beta^2 G_beta^2 + 2 D_theta^2 D_phi^2 log|A|) / (G_rho^2 + 4 D_theta^2 G_theta^2).
/// A sample budget n resolves T through n = T (K + 1).
SolverConfig tune_average(const TuneBounds& bounds, double d_theta, double d_beta,
                          double c, double lambda_norm2, double lambda_trace,
                          const TuneTarget& target, int eval_every = 1,
                          std::uint64_t seed = 0);

/// Double-loop solver for the average-reward setting. Per outer round:
/// K inner steps jointly updating rho (clamped to [0,1]) and theta
/// (ball-projected), the K iterates averaged; one beta ascent step; softmax
/// policy update. Consumes exactly T (K+1) samples; action draws a' come
/// from a dedicated substream of config.seed.
SolverResult run_average(const LearnerInputs& env, SampleSource& samples,
                         const SolverConfig& config, const OracleBundle* oracle = nullptr);

SolverResult run_average(const LearnerInputs& env, const Dataset& data,
                         const SolverConfig& config, const OracleBundle* oracle = nullptr);

/// Exact-expectation gap evaluator for the average setting. Comparators:
/// rho*_t the true average reward of pi_t, theta*_t the value parameter of
/// pi_t shifted so its smallest action value is zero, beta* the
/// reparametrized image of the comparator occupancy.
class AverageGapEvaluator {
  public:
    AverageGapEvaluator(const LinearMDP& mdp, const Policy& behavior,
                        const Policy& comparator, double c);

    struct Round {
        double policy_return = 0.0;  // rho^{pi_t}
        double gap = 0.0;
        double term_theta = 0.0;
        double term_beta = 0.0;
        double term_pi = 0.0;
        double term_rho = 0.0;
        double f_left = 0.0;  // f(beta*, pi*; rho_t, theta_t); equals <mu*, r>
    };

    Round eval_round(const Policy& pi_t, double rho_t, const Vector& theta_t,
                     const Vector& beta_t) const;

    double comparator_return() const { return comparator_return_; }
    const Covariance& lambda() const { return lambda_; }
    const Vector& beta_star() const { return beta_star_; }
    const VarrhoVector& varrho() const { return varrho_; }

  private:
    const LinearMDP* mdp_;
    double c_;
    Covariance lambda_;
    Policy comparator_;
    VarrhoVector varrho_;
    Vector mu_star_, nu_star_;
    Vector beta_star_;
    Vector rewards_;
    Matrix lambda_c_;
    Vector lambda_c_varrho_;
    double comparator_return_ = 0.0;
};

/// Post-hoc gap report with the four-term decomposition.
GapReport duality_gap_report_avg(const LinearMDP& mdp, const Policy& behavior,
                                 const SolverResult& result, const Policy& comparator,
                                 double c);

}  // namespace lporl
