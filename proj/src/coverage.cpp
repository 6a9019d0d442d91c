#include "lporl/coverage.hpp"

#include <cmath>
#include <limits>

#include "lporl/errors.hpp"

namespace lporl {

namespace {

Matrix second_moment(const Vector& mu_star, const Matrix& features) {
    return features.transpose() * mu_star.asDiagonal() * features;
}

/// True when every feature row is a standard basis vector, in which case the
/// chi-square identity applies verbatim.
bool one_hot_features(const Matrix& features) {
    if (features.rows() != features.cols()) return false;
    return (features - Matrix::Identity(features.rows(), features.cols()))
               .cwiseAbs()
               .maxCoeff() < 1e-12;
}

}  // namespace

double generalized_ratio(const Vector& mu_star, const Covariance& lambda,
                         const Matrix& features, double c) {
    if (c != 0.5 && c != 1.0) throw ConfigInvalid("c must be 1/2 or 1");
    const Vector mean_phi = features.transpose() * mu_star;
    return mean_phi.dot(lambda.power(-2.0 * c) * mean_phi);
}

double diamond_ratio(const Vector& mu_star, const Covariance& lambda,
                     const Matrix& features) {
    return (second_moment(mu_star, features) * lambda.power(-1.0)).trace();
}

double dagger_ratio(const Vector& mu_star, const Covariance& lambda,
                    const Matrix& features) {
    const Matrix& white = lambda.power(-0.5);
    Matrix w = white * second_moment(mu_star, features) * white;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (w + w.transpose()));
    if (eig.info() != Eigen::Success) throw NearSingular("whitening failed");
    return eig.eigenvalues().maxCoeff();
}

double chi_square(const Vector& mu_star, const Vector& mu_b) {
    double total = 0.0;
    for (int z = 0; z < mu_star.size(); ++z) {
        if (mu_b[z] <= 0.0) {
            if (mu_star[z] > 0.0)
                throw UnsupportedPoint("target occupancy puts mass " +
                                       std::to_string(mu_star[z]) +
                                       " where the behavior has none (index " +
                                       std::to_string(z) + ")");
            continue;
        }
        const double diff = mu_star[z] - mu_b[z];
        total += diff * diff / mu_b[z];
    }
    return total;
}

CoverageReport coverage_report_from(const Vector& mu_star, const Vector& mu_b,
                                    const Covariance& lambda, const Matrix& features,
                                    bool approximate) {
    CoverageReport report;
    report.dim = lambda.dim();
    report.approximate = approximate;
    report.c_phi_half = generalized_ratio(mu_star, lambda, features, 0.5);
    report.c_phi_one = generalized_ratio(mu_star, lambda, features, 1.0);
    report.c_diamond = diamond_ratio(mu_star, lambda, features);
    report.c_dagger = dagger_ratio(mu_star, lambda, features);
    report.variance_term = report.c_diamond - report.c_phi_half;
    report.chi_square = one_hot_features(features)
                            ? chi_square(mu_star, mu_b)
                            : std::numeric_limits<double>::quiet_NaN();

    const double tol = 1e-9;
    report.ordering_dagger_diamond = report.c_dagger <= report.c_diamond + tol;
    report.ordering_diamond_d_dagger =
        report.c_diamond <= report.dim * report.c_dagger + tol;
    report.ordering_half_diamond = report.c_phi_half <= report.c_diamond + tol;

    // Internal consistency: the gap to the diamond ratio is exactly the
    // variance of the whitened feature under mu*.
    const Matrix& white = lambda.power(-0.5);
    const Vector mean_z = white * (features.transpose() * mu_star);
    double second = 0.0;
    for (int z = 0; z < features.rows(); ++z)
        second += mu_star[z] * (white * features.row(z).transpose()).squaredNorm();
    const double var = second - mean_z.squaredNorm();
    if (std::abs(report.c_phi_half + var - report.c_diamond) > 1e-9)
        throw NearSingular("variance identity violated by " +
                           std::to_string(report.c_phi_half + var - report.c_diamond));
    return report;
}

CoverageReport coverage_report(const LinearMDP& mdp, const Policy& behavior,
                               const Policy& target, Setting setting) {
    auto [mu_b, lambda] = behavior_occupancy(mdp, behavior, setting);
    const OccupancyMeasure mu_star = occupancy(mdp, target, setting);
    return coverage_report_from(mu_star.mu, mu_b.mu, lambda, mdp.features, false);
}

}  // namespace lporl
