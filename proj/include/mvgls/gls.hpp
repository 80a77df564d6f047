#pragma once

#include <utility>
#include <vector>

#include "mvgls/types.hpp"

namespace mvgls {

struct GlsResult {
    Matrix beta_hat;           // 2 x m group mean estimates
    Vector gamma_hat;          // delta^T beta_hat
    Eigen::Matrix2d omega_hat; // (D^T B^-1 D)^-1
    double design_effect = 0.0;
    Vector t_stats;
    Vector p_values;           // two-sided standard normal
    Vector fdr_adjusted;
};

enum class TTestFlavor { Unpaired, Paired };

struct TTestResult {
    Vector t_stats;
    TTestFlavor flavor = TTestFlavor::Unpaired;
    int dof = 0;
    Vector p_values;  // two-sided, t reference with `dof` degrees of freedom
};

struct OlsFit {
    Matrix beta_hat;   // 2 x m group sample means
    Vector gamma_hat;  // mean difference
};

/// Weighted two-group fit with weights b_inv; Wald statistics against the
/// standard normal and BH-adjusted p-values.
GlsResult gls_fit(const DataMatrix& x, const TwoGroupDesign& design, const Matrix& b_inv);

/// delta^T (D^T B^-1 D)^-1 delta, the variance of the oracle difference.
double design_effect(const TwoGroupDesign& design, const Matrix& b_inv);

/// sqrt(u^T B u / design_effect(B^-1)): efficiency headroom of GLS over
/// the sample-mean difference. Takes the covariance itself.
double sd_ratio(const Matrix& b, const TwoGroupDesign& design);

/// Per-group arithmetic means and their difference.
OlsFit ols_fit(const DataMatrix& x, const TwoGroupDesign& design);

/// Pooled-variance two-sample t statistics, dof = n1 + n2 - 2.
TTestResult unpaired_t(const DataMatrix& x, const TwoGroupDesign& design);

/// Paired t statistics over explicit row pairs, dof = n/2 - 1.
TTestResult paired_t(const DataMatrix& x, const std::vector<std::pair<int, int>>& pairing);

/// Default pairing i <-> i + n/2.
std::vector<std::pair<int, int>> half_split_pairing(int n);

/// Benjamini-Hochberg step-up adjustment, clipped to 1.
Vector bh_adjust(const Vector& p_values);

/// Rejections at level q among BH-adjusted values.
int bh_rejections(const Vector& adjusted, double q);

}  // namespace mvgls
