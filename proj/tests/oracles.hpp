#pragma once

// Test-only reference implementations, kept independent of the library's
// solver paths on purpose.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>

namespace oracles {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline double soft(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

/// Projected proximal-gradient minimization of
///   tr(Gamma Theta) - log|Theta| + lambda |Theta|_{1,off}.
/// Gradient step on the smooth part, off-diagonal soft thresholding,
/// eigenvalue projection back onto the PD cone when a step leaves it.
inline Matrix glasso_projected_gradient(const Matrix& gamma, double lambda,
                                        double step = 1e-3, long iterations = 1000000) {
    const Eigen::Index p = gamma.rows();
    Matrix theta = gamma.diagonal().cwiseInverse().asDiagonal();
    for (long it = 0; it < iterations; ++it) {
        Eigen::LLT<Matrix> llt(theta);
        if (llt.info() != Eigen::Success) {
            Eigen::SelfAdjointEigenSolver<Matrix> eig(theta);
            Vector vals = eig.eigenvalues().cwiseMax(1e-8);
            theta = eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
            llt.compute(theta);
        }
        const Matrix inv = llt.solve(Matrix::Identity(p, p));
        Matrix next = theta - step * (gamma - inv);
        for (Eigen::Index j = 0; j < p; ++j) {
            for (Eigen::Index i = 0; i < p; ++i) {
                if (i != j) next(i, j) = soft(next(i, j), step * lambda);
            }
        }
        next = 0.5 * (next + next.transpose());
        theta = next;
    }
    return theta;
}

}  // namespace oracles
