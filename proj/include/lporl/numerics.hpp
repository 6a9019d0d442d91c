#pragma once

#include "lporl/policy.hpp"
#include "lporl/types.hpp"

namespace lporl {

/// Euclidean ball of a given radius, the feasible set for solver iterates.
struct BallDomain {
    double radius;

    explicit BallDomain(double r) : radius(r) {
        if (!(r > 0.0)) throw ConfigInvalid("ball radius must be positive");
    }
};

/// Symmetric PSD matrix power via eigendecomposition.
///
/// Negative eigenvalues are clamped to zero. For negative exponents any
/// eigenvalue below `floor` raises NearSingular instead of silently
/// regularizing. p = 0 returns the identity exactly.
Matrix psd_power(const Matrix& m, double p, double floor = 1e-10);

/// Power from a precomputed eigendecomposition (shared by Covariance so all
/// cached powers of one matrix commute to machine precision).
Matrix psd_power_from_eig(const Vector& eigenvalues, const Matrix& eigenvectors,
                          double p, double floor);

/// Project v onto the ball: identity inside, radial rescale outside.
/// Idempotent: the returned vector projects to itself.
Vector project_ball(const Vector& v, const BallDomain& domain);

inline double clamp_interval(double x, double lo, double hi) {
    return x < lo ? lo : (x > hi ? hi : x);
}

/// Row-wise stabilized softmax. Throws NonFinite on non-finite input.
Policy softmax_rows(const Matrix& logits);

/// Softmax of a single logit vector.
Vector softmax(const Vector& logits);

}  // namespace lporl
