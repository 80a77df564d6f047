#include "mvgls/kernels.hpp"

#include <Eigen/Eigenvalues>

#include "mvgls/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mvgls {

bool in_parallel_region() {
#ifdef _OPENMP
    return omp_in_parallel() != 0;
#else
    return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_threads(int threads) {
#ifdef _OPENMP
    if (threads > 0) {
        omp_set_num_threads(threads);
    } else {
        omp_set_num_threads(omp_get_num_procs());
    }
#else
    (void)threads;
#endif
}

namespace {

// Upper-triangle entries computed one per (i, j); the dot product order is
// fixed by Eigen's sequential kernel, so scheduling cannot change bits.
Matrix gram_cols_impl(const Matrix& x, bool parallel) {
    const Eigen::Index m = x.cols();
    Matrix g(m, m);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 4) if (parallel && !omp_in_parallel())
#endif
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
            const double v = x.col(i).dot(x.col(j));
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    (void)parallel;
    return g;
}

}  // namespace

Matrix gram_cols(const Matrix& x) { return gram_cols_impl(x, true); }

Matrix gram_cols_serial(const Matrix& x) { return gram_cols_impl(x, false); }

Matrix gram_rows(const Matrix& x) {
    Matrix xt = x.transpose();
    return gram_cols_impl(xt, true);
}

Matrix gram_rows_serial(const Matrix& x) {
    Matrix xt = x.transpose();
    return gram_cols_impl(xt, false);
}

Matrix symmetric_sqrt(const Matrix& spd) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(spd);
    if (eig.info() != Eigen::Success) {
        throw InvalidParameter("symmetric_sqrt: eigendecomposition failed");
    }
    const Vector& evals = eig.eigenvalues();
    if (evals.minCoeff() <= 0.0) {
        throw InvalidParameter("symmetric_sqrt: matrix is not positive definite");
    }
    return eig.eigenvectors() * evals.cwiseSqrt().asDiagonal() *
           eig.eigenvectors().transpose();
}

}  // namespace mvgls
