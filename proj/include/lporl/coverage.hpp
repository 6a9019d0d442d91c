#pragma once

#include "lporl/linmdp.hpp"
#include "lporl/sampling.hpp"
#include "lporl/types.hpp"

namespace lporl {

/// The coverage-ratio family between a target occupancy mu* and the
/// behavior occupancy that defines Lambda. In the tabular (one-hot) case
/// these specialize to
///   c_phi_half = sum mu*^2 / mu_B,   c_phi_one = sum (mu*/mu_B)^2,
///   c_diamond  = sum mu* / mu_B,     chi_square = sum (mu*-mu_B)^2 / mu_B,
/// so c_phi_half = 1 + chi_square. (The analogous identity does not hold
/// for c_phi_one: with mu_B = (1/2,1/2) and mu* = (1,0) it evaluates to 4
/// while 1 + chi_square = 2.)
struct CoverageReport {
    double c_phi_half = 0.0;   // E[phi]^T Lambda^-1 E[phi]
    double c_phi_one = 0.0;    // E[phi]^T Lambda^-2 E[phi]
    double c_diamond = 0.0;    // E[phi^T Lambda^-1 phi]
    double c_dagger = 0.0;     // lambda_max(Lambda^-1/2 M Lambda^-1/2)
    double chi_square = 0.0;   // chi^2(mu* || mu_B); NaN off one-hot support
    double variance_term = 0.0;  // c_diamond - c_phi_half
    int dim = 0;
    bool approximate = false;  // set when built from empirical inputs

    // Ordering flags: c_dagger <= c_diamond <= d * c_dagger and
    // c_phi_half <= c_diamond, each within 1e-9.
    bool ordering_dagger_diamond = false;
    bool ordering_diamond_d_dagger = false;
    bool ordering_half_diamond = false;
};

/// Generalized ratio E_{mu*}[phi]^T Lambda^{-2c} E_{mu*}[phi], c in {1/2, 1}.
double generalized_ratio(const Vector& mu_star, const Covariance& lambda,
                         const Matrix& features, double c);

/// Feature coverage ratio E_{mu*}[phi^T Lambda^{-1} phi] = Tr(M Lambda^{-1})
/// with M = E_{mu*}[phi phi^T].
double diamond_ratio(const Vector& mu_star, const Covariance& lambda,
                     const Matrix& features);

/// Worst-direction ratio: the largest eigenvalue of the whitened
/// second-moment matrix Lambda^{-1/2} M Lambda^{-1/2}.
double dagger_ratio(const Vector& mu_star, const Covariance& lambda,
                    const Matrix& features);

/// Chi-square divergence sum_z (mu*(z) - mu_B(z))^2 / mu_B(z). Requires
/// supp(mu*) within supp(mu_B); throws UnsupportedPoint otherwise.
double chi_square(const Vector& mu_star, const Vector& mu_b);

/// Full report from exact occupancies of the behavior and target policies.
CoverageReport coverage_report(const LinearMDP& mdp, const Policy& behavior,
                               const Policy& target,
                               Setting setting = Setting::discounted);

/// Report from explicitly supplied (possibly empirical) quantities; flagged
/// approximate when announced as such.
CoverageReport coverage_report_from(const Vector& mu_star, const Vector& mu_b,
                                    const Covariance& lambda, const Matrix& features,
                                    bool approximate);

}  // namespace lporl
