#pragma once

#include <optional>
#include <vector>

#include "mvgls/glasso.hpp"
#include "mvgls/types.hpp"

namespace mvgls {

enum class CenteringKind { Group, Global, ModelSelection };

struct CenteringScheme {
    CenteringKind kind = CenteringKind::Group;
    std::vector<int> j0;  // group-centered columns (ModelSelection only)

    static CenteringScheme group() { return {CenteringKind::Group, {}}; }
    static CenteringScheme global() { return {CenteringKind::Global, {}}; }
    static CenteringScheme model_selection(std::vector<int> j0) {
        return {CenteringKind::ModelSelection, std::move(j0)};
    }
};

struct CenteredData {
    Matrix x_cen;
    CenteringScheme scheme;
    Matrix m_hat;  // the mean estimate that was removed
};

/// Gemini state: sample moments, penalized correlation fits, and the
/// rescaled inverse estimates. The A-side members are filled only when
/// the variable-wise fit is requested.
struct GeminiFit {
    Matrix s_b;                       // n x n sample covariance
    Matrix gamma_hat_b;               // n x n sample correlation
    std::optional<Matrix> s_a;        // m x m sample covariance
    std::optional<Matrix> gamma_hat_a;
    Matrix b_rho;                     // penalized correlation estimate of rho(B)
    std::optional<Matrix> a_rho;
    Vector w2;                        // sqrt(m) * sqrt(diag(S_B))
    std::optional<Vector> w1;         // sqrt(n) * sqrt(diag(S_A))
    Matrix b_inv;                     // m * W2^-1 (B_rho)^-1 W2^-1
    std::optional<Matrix> a_inv;      // (|X_cen|_F^2 / m) W1^-1 (A_rho)^-1 W1^-1
    Matrix b_rho_inv;                 // solver theta for the B side
    std::optional<Matrix> a_rho_inv;
    double lambda_a = 0.0;            // penalty used when fitting B_rho
    double lambda_b = 0.0;            // penalty used when fitting A_rho
};

/// Factored Kronecker covariance estimate; the full (mn x mn) product is
/// never materialized.
struct KroneckerEstimate {
    Matrix factor_a;  // W1 A_rho W1
    Matrix factor_b;  // W2 B_rho W2
    double divisor = 1.0;  // |X_cen|_F^2
};

/// Remove the scheme's mean estimate column by column. Group and grand
/// means are computed as arithmetic means, so the ModelSelection scheme
/// with every column in J0 is bit-identical to the Group scheme.
CenteredData center(const DataMatrix& x, const TwoGroupDesign& design,
                    const CenteringScheme& scheme);

/// S_B = X_cen X_cen^T / m and S_A = X_cen^T X_cen / n.
std::pair<Matrix, Matrix> sample_covariances(const CenteredData& cen);

/// Normalize a covariance to unit diagonal; throws DegenerateVariance
/// (with the offending index) when a diagonal entry is not positive.
Matrix sample_correlation(const Matrix& s);

/// Rescale penalized correlation fits into inverse covariance estimates.
GeminiFit rescale_inverses(GeminiFit fit, const PenalizedPrecisionFit& b_fit,
                           const std::optional<PenalizedPrecisionFit>& a_fit,
                           const Matrix& x_cen);

KroneckerEstimate kronecker_estimate(const GeminiFit& fit, const Matrix& x_cen);

/// || factor_a (x) factor_b / divisor - a (x) b ||_F via the factored form.
double kronecker_frobenius_distance(const KroneckerEstimate& est, const Matrix& a,
                                    const Matrix& b);

/// Trace of the implied Kronecker product.
double kronecker_trace(const KroneckerEstimate& est);

}  // namespace mvgls
