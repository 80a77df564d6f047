#include "mvgls/glasso.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "mvgls/errors.hpp"

namespace mvgls {

namespace {

double soft_threshold(double z, double lambda) {
    if (z > lambda) return z - lambda;
    if (z < -lambda) return z + lambda;
    return 0.0;
}

// Cyclic coordinate descent for
//   min_beta 0.5 beta^T W11 beta - s12^T beta + lambda |beta|_1.
// `r` carries W11 * beta and is kept in sync across calls.
void lasso_cd(const Matrix& w11, const Vector& s12, double lambda, Vector& beta,
              Vector& r, double tol, int max_pass) {
    const Eigen::Index q = s12.size();
    for (int pass = 0; pass < max_pass; ++pass) {
        double max_delta = 0.0;
        for (Eigen::Index k = 0; k < q; ++k) {
            const double old = beta[k];
            const double z = s12[k] - (r[k] - w11(k, k) * old);
            const double next = soft_threshold(z, lambda) / w11(k, k);
            if (next != old) {
                beta[k] = next;
                r += w11.col(k) * (next - old);
                max_delta = std::max(max_delta, std::abs(next - old));
            }
        }
        if (max_delta <= tol) break;
    }
}

}  // namespace

double kkt_residual(const Matrix& gamma_hat, const Matrix& theta, double lambda) {
    const Eigen::Index p = theta.rows();
    Eigen::LDLT<Matrix> ldlt(theta);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        !(ldlt.vectorD().minCoeff() > 0.0)) {
        throw SingularInput("kkt_residual: theta is not positive definite");
    }
    Matrix sigma = ldlt.solve(Matrix::Identity(p, p));
    double res = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < p; ++i) {
            const double g = gamma_hat(i, j) - sigma(i, j);
            double v;
            if (i == j) {
                v = std::abs(g);
            } else if (theta(i, j) != 0.0) {
                v = std::abs(g + lambda * (theta(i, j) > 0.0 ? 1.0 : -1.0));
            } else {
                v = std::max(std::abs(g) - lambda, 0.0);
            }
            res = std::max(res, v);
        }
    }
    return res;
}

double glasso_objective(const Matrix& gamma_hat, const Matrix& theta, double lambda) {
    Eigen::LLT<Matrix> llt(theta);
    if (llt.info() != Eigen::Success) {
        return std::numeric_limits<double>::infinity();
    }
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < theta.rows(); ++i) {
        logdet += 2.0 * std::log(llt.matrixL()(i, i));
    }
    double l1_off = theta.cwiseAbs().sum() - theta.diagonal().cwiseAbs().sum();
    return (gamma_hat * theta).trace() - logdet + lambda * l1_off;
}

PenalizedPrecisionFit glasso_fit(const Matrix& gamma_hat, double lambda,
                                 const SolverConfig& config, const Matrix* warm_start) {
    const Eigen::Index p = gamma_hat.rows();
    if (p == 0 || gamma_hat.cols() != p) {
        throw InvalidParameter("glasso_fit: input must be square and nonempty");
    }
    if ((gamma_hat - gamma_hat.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
        throw InvalidParameter("glasso_fit: input must be symmetric");
    }
    if (gamma_hat.diagonal().minCoeff() <= 0.0) {
        throw InvalidParameter("glasso_fit: diagonal entries must be positive");
    }
    if (lambda < 0.0) throw InvalidParameter("glasso_fit: lambda must be >= 0");
    if (config.tol <= 0.0 || config.max_iter < 1) {
        throw InvalidParameter("glasso_fit: bad solver config");
    }
    if (lambda == 0.0) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(gamma_hat, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() <=
            1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff())) {
            throw SingularInput("glasso_fit: lambda = 0 requires positive definite input");
        }
    }

    // W tracks the working covariance; its diagonal never moves (the
    // diagonal is unpenalized, so sigma_ii = gamma_ii at the optimum).
    Matrix w = gamma_hat;
    if (config.diagonal_penalized) {
        w.diagonal().array() += lambda;
    }

    // beta_all.col(j): lasso coefficients for column j, packed over i != j.
    Matrix beta_all = Matrix::Zero(p == 1 ? 1 : p - 1, p);
    if (warm_start != nullptr && warm_start->rows() == p && warm_start->cols() == p) {
        for (Eigen::Index j = 0; j < p; ++j) {
            const double tjj = (*warm_start)(j, j);
            if (tjj <= 0.0) continue;
            Eigen::Index r = 0;
            for (Eigen::Index i = 0; i < p; ++i) {
                if (i == j) continue;
                beta_all(r++, j) = -(*warm_start)(i, j) / tjj;
            }
        }
    }

    PenalizedPrecisionFit fit;
    fit.lambda = lambda;

    Matrix w11(p > 1 ? p - 1 : 0, p > 1 ? p - 1 : 0);
    Vector s12(p > 1 ? p - 1 : 0), r_vec(p > 1 ? p - 1 : 0), beta(p > 1 ? p - 1 : 0);
    const double inner_tol = std::max(config.tol * 1e-2, 1e-14);
    const int inner_cap = 1000;

    double last_kkt = std::numeric_limits<double>::infinity();
    for (int sweep = 1; sweep <= config.max_iter; ++sweep) {
        for (Eigen::Index j = 0; j < p && p > 1; ++j) {
            Eigen::Index r = 0;
            for (Eigen::Index i = 0; i < p; ++i) {
                if (i == j) continue;
                s12[r] = gamma_hat(i, j);
                Eigen::Index c = 0;
                for (Eigen::Index k = 0; k < p; ++k) {
                    if (k == j) continue;
                    w11(r, c++) = w(i, k);
                }
                ++r;
            }
            beta = beta_all.col(j);
            r_vec.noalias() = w11 * beta;
            lasso_cd(w11, s12, lambda, beta, r_vec, inner_tol, inner_cap);
            beta_all.col(j) = beta;
            Eigen::Index t = 0;
            for (Eigen::Index i = 0; i < p; ++i) {
                if (i == j) continue;
                w(i, j) = r_vec[t];
                w(j, i) = r_vec[t];
                ++t;
            }
        }
        fit.iterations = sweep;

        // Assemble theta from the coefficient vectors; zeros stay exact.
        Matrix theta = Matrix::Zero(p, p);
        bool valid = true;
        for (Eigen::Index j = 0; j < p; ++j) {
            double dot = 0.0;
            Eigen::Index t = 0;
            for (Eigen::Index i = 0; i < p; ++i) {
                if (i == j) continue;
                dot += w(i, j) * beta_all(t++, j);
            }
            const double denom = w(j, j) - dot;
            if (!(denom > 0.0)) {
                valid = false;
                break;
            }
            const double tjj = 1.0 / denom;
            theta(j, j) = tjj;
            t = 0;
            for (Eigen::Index i = 0; i < p; ++i) {
                if (i == j) continue;
                const double b = beta_all(t++, j);
                theta(i, j) = (b == 0.0) ? 0.0 : -b * tjj;
            }
        }
        if (!valid) continue;

        for (Eigen::Index j = 0; j < p; ++j) {
            for (Eigen::Index i = 0; i < j; ++i) {
                if (theta(i, j) == 0.0 && theta(j, i) == 0.0) continue;
                const double v = 0.5 * (theta(i, j) + theta(j, i));
                theta(i, j) = v;
                theta(j, i) = v;
            }
        }

        const double obj = glasso_objective(gamma_hat, theta, lambda);
        if (std::isfinite(obj)) fit.objective_path.push_back(obj);

        double kkt;
        try {
            kkt = kkt_residual(gamma_hat, theta, lambda);
        } catch (const SingularInput&) {
            continue;
        }
        last_kkt = kkt;
        if (kkt <= config.tol &&
            (w * theta - Matrix::Identity(p, p)).cwiseAbs().maxCoeff() <= config.tol) {
            fit.theta = std::move(theta);
            fit.sigma = std::move(w);
            fit.kkt_residual = kkt;
            return fit;
        }
    }
    throw ConvergenceFailure("glasso_fit: no convergence within max_iter", last_kkt);
}

}  // namespace mvgls
