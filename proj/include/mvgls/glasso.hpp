#pragma once

#include <optional>
#include <vector>

#include "mvgls/types.hpp"

namespace mvgls {

struct SolverConfig {
    double tol = 1e-6;          // KKT residual target
    int max_iter = 500;         // outer sweep cap
    bool diagonal_penalized = false;  // kept false; the Gemini objectives
                                      // penalize off-diagonals only
};

/// Solution of argmin_{Theta > 0} tr(Gamma Theta) - log|Theta| + lambda |Theta|_{1,off}.
struct PenalizedPrecisionFit {
    Matrix theta;   // estimated precision (inverse correlation)
    Matrix sigma;   // its inverse; diagonal equals diag(Gamma) exactly
    double lambda = 0.0;
    int iterations = 0;
    double kkt_residual = 0.0;
    std::vector<double> objective_path;  // primal objective per sweep
};

/// Block coordinate descent over columns; each row subproblem is a lasso
/// solved by cyclic coordinate descent. Accepts rank-deficient gamma_hat
/// whenever lambda > 0. An optional warm start seeds the precision.
PenalizedPrecisionFit glasso_fit(const Matrix& gamma_hat, double lambda,
                                 const SolverConfig& config = {},
                                 const Matrix* warm_start = nullptr);

/// Max-norm violation of the stationarity conditions:
///   off-diagonal, theta_ij != 0:  |gamma_ij - (theta^-1)_ij + lambda sign(theta_ij)|
///   off-diagonal, theta_ij == 0:  (|gamma_ij - (theta^-1)_ij| - lambda)_+
///   diagonal:                     |gamma_ii - (theta^-1)_ii|
double kkt_residual(const Matrix& gamma_hat, const Matrix& theta, double lambda);

/// Primal objective tr(Gamma Theta) - log|Theta| + lambda |Theta|_{1,off};
/// +inf when theta is not positive definite.
double glasso_objective(const Matrix& gamma_hat, const Matrix& theta, double lambda);

}  // namespace mvgls
