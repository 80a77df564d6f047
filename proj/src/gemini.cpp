#include "mvgls/gemini.hpp"

#include <algorithm>
#include <cmath>

#include "mvgls/errors.hpp"
#include "mvgls/kernels.hpp"

namespace mvgls {

namespace {

// Per-column mean removal shared by all schemes. Group g means are plain
// arithmetic means over that group's rows.
void center_column_group(const DataMatrix& x, const TwoGroupDesign& design,
                         Eigen::Index j, Matrix& x_cen, Matrix& m_hat) {
    double sum1 = 0.0, sum2 = 0.0;
    for (int i = 0; i < x.n; ++i) {
        (design.groups[i] == 1 ? sum1 : sum2) += x.values(i, j);
    }
    const double mean1 = sum1 / design.n1;
    const double mean2 = sum2 / design.n2;
    for (int i = 0; i < x.n; ++i) {
        const double mu = design.groups[i] == 1 ? mean1 : mean2;
        m_hat(i, j) = mu;
        x_cen(i, j) = x.values(i, j) - mu;
    }
}

void center_column_global(const DataMatrix& x, Eigen::Index j, Matrix& x_cen,
                          Matrix& m_hat) {
    const double mean = x.values.col(j).sum() / x.n;
    for (int i = 0; i < x.n; ++i) {
        m_hat(i, j) = mean;
        x_cen(i, j) = x.values(i, j) - mean;
    }
}

}  // namespace

CenteredData center(const DataMatrix& x, const TwoGroupDesign& design,
                    const CenteringScheme& scheme) {
    if (x.n != design.n || x.groups != design.groups) {
        throw InvalidParameter("center: data and design disagree");
    }
    Matrix x_cen(x.n, x.m);
    Matrix m_hat(x.n, x.m);
    switch (scheme.kind) {
        case CenteringKind::Group:
            for (int j = 0; j < x.m; ++j) center_column_group(x, design, j, x_cen, m_hat);
            break;
        case CenteringKind::Global:
            for (int j = 0; j < x.m; ++j) center_column_global(x, j, x_cen, m_hat);
            break;
        case CenteringKind::ModelSelection: {
            std::vector<char> in_j0(static_cast<std::size_t>(x.m), 0);
            for (int j : scheme.j0) {
                if (j < 0 || j >= x.m) {
                    throw InvalidParameter("center: J0 index out of range");
                }
                in_j0[static_cast<std::size_t>(j)] = 1;
            }
            for (int j = 0; j < x.m; ++j) {
                if (in_j0[static_cast<std::size_t>(j)]) {
                    center_column_group(x, design, j, x_cen, m_hat);
                } else {
                    center_column_global(x, j, x_cen, m_hat);
                }
            }
            break;
        }
    }
    return CenteredData{std::move(x_cen), scheme, std::move(m_hat)};
}

std::pair<Matrix, Matrix> sample_covariances(const CenteredData& cen) {
    const double n = static_cast<double>(cen.x_cen.rows());
    const double m = static_cast<double>(cen.x_cen.cols());
    Matrix s_b = gram_rows(cen.x_cen) / m;
    Matrix s_a = gram_cols(cen.x_cen) / n;
    return {std::move(s_b), std::move(s_a)};
}

Matrix sample_correlation(const Matrix& s) {
    const Eigen::Index p = s.rows();
    if (s.cols() != p) throw InvalidParameter("sample_correlation: matrix must be square");
    for (Eigen::Index i = 0; i < p; ++i) {
        if (!(s(i, i) > 1e-12)) {
            throw DegenerateVariance(
                "sample_correlation: nonpositive variance at index " + std::to_string(i),
                static_cast<int>(i));
        }
    }
    Vector inv_sd = s.diagonal().cwiseSqrt().cwiseInverse();
    Matrix corr = inv_sd.asDiagonal() * s * inv_sd.asDiagonal();
    corr.diagonal().setOnes();
    return corr;
}

GeminiFit rescale_inverses(GeminiFit fit, const PenalizedPrecisionFit& b_fit,
                           const std::optional<PenalizedPrecisionFit>& a_fit,
                           const Matrix& x_cen) {
    const double m = static_cast<double>(x_cen.cols());
    if (b_fit.theta.rows() != fit.s_b.rows()) {
        throw PreconditionViolation("rescale_inverses: B fit missing or mis-sized");
    }
    fit.b_rho = b_fit.sigma;
    fit.b_rho_inv = b_fit.theta;
    fit.lambda_a = b_fit.lambda;
    fit.w2 = (m * fit.s_b.diagonal()).cwiseSqrt();
    Vector w2_inv = fit.w2.cwiseInverse();
    fit.b_inv = m * (w2_inv.asDiagonal() * b_fit.theta * w2_inv.asDiagonal());

    if (a_fit.has_value()) {
        if (!fit.s_a.has_value() || a_fit->theta.rows() != fit.s_a->rows()) {
            throw PreconditionViolation("rescale_inverses: A fit missing or mis-sized");
        }
        const double n = static_cast<double>(x_cen.rows());
        fit.a_rho = a_fit->sigma;
        fit.a_rho_inv = a_fit->theta;
        fit.lambda_b = a_fit->lambda;
        fit.w1 = (n * fit.s_a->diagonal()).cwiseSqrt();
        Vector w1_inv = fit.w1->cwiseInverse();
        fit.a_inv = (x_cen.squaredNorm() / m) *
                    (w1_inv.asDiagonal() * a_fit->theta * w1_inv.asDiagonal());
    }
    return fit;
}

KroneckerEstimate kronecker_estimate(const GeminiFit& fit, const Matrix& x_cen) {
    if (!fit.a_rho.has_value() || fit.b_rho.size() == 0) {
        throw PreconditionViolation("kronecker_estimate: both penalized fits required");
    }
    const double fro2 = x_cen.squaredNorm();
    if (!(fro2 > 0.0)) {
        throw DegenerateVariance("kronecker_estimate: centered data has zero norm", -1);
    }
    KroneckerEstimate est;
    est.factor_a = fit.w1->asDiagonal() * (*fit.a_rho) * fit.w1->asDiagonal();
    est.factor_b = fit.w2.asDiagonal() * fit.b_rho * fit.w2.asDiagonal();
    est.divisor = fro2;
    return est;
}

double kronecker_frobenius_distance(const KroneckerEstimate& est, const Matrix& a,
                                    const Matrix& b) {
    // |U (x) V - A (x) B|_F^2 expands into pure factor inner products.
    const double c = 1.0 / est.divisor;
    const double uu = est.factor_a.squaredNorm() * est.factor_b.squaredNorm() * c * c;
    const double ua = est.factor_a.cwiseProduct(a).sum() *
                      est.factor_b.cwiseProduct(b).sum() * c;
    const double aa = a.squaredNorm() * b.squaredNorm();
    return std::sqrt(std::max(uu - 2.0 * ua + aa, 0.0));
}

double kronecker_trace(const KroneckerEstimate& est) {
    return est.factor_a.trace() * est.factor_b.trace() / est.divisor;
}

}  // namespace mvgls
