#include "lporl/numerics.hpp"

#include <cmath>

namespace lporl {

Matrix psd_power_from_eig(const Vector& eigenvalues, const Matrix& eigenvectors,
                          double p, double floor) {
    const int n = static_cast<int>(eigenvalues.size());
    if (p == 0.0) return Matrix::Identity(n, n);

    Vector d(n);
    for (int i = 0; i < n; ++i) {
        double ev = eigenvalues[i] < 0.0 ? 0.0 : eigenvalues[i];
        if (p < 0.0 && ev < floor)
            throw NearSingular("matrix power " + std::to_string(p) +
                               " requested with eigenvalue " + std::to_string(eigenvalues[i]) +
                               " below floor " + std::to_string(floor));
        d[i] = std::pow(ev, p);
    }
    Matrix result = eigenvectors * d.asDiagonal() * eigenvectors.transpose();
    return 0.5 * (result + result.transpose());
}

Matrix psd_power(const Matrix& m, double p, double floor) {
    if (m.rows() != m.cols()) throw NotSymmetric("matrix is not square");
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10)
        throw NotSymmetric("matrix is not symmetric (max asymmetry " +
                           std::to_string(asym) + ")");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
    if (eig.info() != Eigen::Success) throw NearSingular("eigendecomposition failed");
    return psd_power_from_eig(eig.eigenvalues(), eig.eigenvectors(), p, floor);
}

Vector project_ball(const Vector& v, const BallDomain& domain) {
    double norm = v.norm();
    if (norm <= domain.radius) return v;
    Vector w = v * (domain.radius / norm);
    // Rounding can leave the rescaled vector a hair outside; shrink until the
    // result is a fixed point of the projection.
    norm = w.norm();
    while (norm > domain.radius) {
        w *= domain.radius / norm;
        norm = w.norm();
    }
    return w;
}

Vector softmax(const Vector& logits) {
    if (!logits.allFinite()) throw NonFinite("softmax input has non-finite entries");
    Vector z = (logits.array() - logits.maxCoeff()).exp();
    return z / z.sum();
}

Policy softmax_rows(const Matrix& logits) {
    if (!logits.allFinite()) throw NonFinite("softmax input has non-finite entries");
    Matrix p(logits.rows(), logits.cols());
    for (int x = 0; x < logits.rows(); ++x)
        p.row(x) = softmax(logits.row(x).transpose()).transpose();
    return Policy{p};
}

}  // namespace lporl
