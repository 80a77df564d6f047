#include "mvgls/gls.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "mvgls/errors.hpp"

namespace mvgls {

namespace {

Eigen::Matrix2d quadratic_form(const TwoGroupDesign& design, const Matrix& b_inv) {
    if (b_inv.rows() != design.n || b_inv.cols() != design.n) {
        throw InvalidParameter("b_inv must be n x n");
    }
    Eigen::Matrix2d q = design.d.transpose() * b_inv * design.d;
    return q;
}

Eigen::Matrix2d invert_2x2(const Eigen::Matrix2d& q) {
    const double det = q(0, 0) * q(1, 1) - q(0, 1) * q(1, 0);
    const double scale = q.cwiseAbs().maxCoeff();
    if (!(std::abs(det) > 1e-14 * scale * scale)) {
        throw SingularDesign("D^T B^-1 D is singular");
    }
    Eigen::Matrix2d inv;
    inv << q(1, 1), -q(0, 1), -q(1, 0), q(0, 0);
    return inv / det;
}

double normal_two_sided_p(double t) {
    return std::erfc(std::abs(t) / std::sqrt(2.0));
}

}  // namespace

GlsResult gls_fit(const DataMatrix& x, const TwoGroupDesign& design, const Matrix& b_inv) {
    const Eigen::Matrix2d q = quadratic_form(design, b_inv);
    const Eigen::Matrix2d omega = invert_2x2(q);

    GlsResult res;
    res.omega_hat = omega;
    res.beta_hat = omega * (design.d.transpose() * (b_inv * x.values));
    res.gamma_hat = res.beta_hat.row(0) - res.beta_hat.row(1);
    res.design_effect = design.delta.transpose() * omega * design.delta;
    if (!(res.design_effect > 0.0)) {
        throw SingularDesign("design effect is not positive");
    }
    const double se = std::sqrt(res.design_effect);
    res.t_stats = res.gamma_hat / se;
    res.p_values.resize(x.m);
    for (int j = 0; j < x.m; ++j) {
        res.p_values[j] = normal_two_sided_p(res.t_stats[j]);
    }
    res.fdr_adjusted = bh_adjust(res.p_values);
    return res;
}

double design_effect(const TwoGroupDesign& design, const Matrix& b_inv) {
    const Eigen::Matrix2d omega = invert_2x2(quadratic_form(design, b_inv));
    return design.delta.transpose() * omega * design.delta;
}

double sd_ratio(const Matrix& b, const TwoGroupDesign& design) {
    Eigen::LLT<Matrix> llt(b);
    if (llt.info() != Eigen::Success) {
        throw InvalidParameter("sd_ratio: B must be positive definite");
    }
    Matrix b_inv = llt.solve(Matrix::Identity(design.n, design.n));
    Vector u(design.n);
    for (int i = 0; i < design.n; ++i) {
        u[i] = design.groups[i] == 1 ? 1.0 / design.n1 : -1.0 / design.n2;
    }
    const double ols_var = u.dot(b * u);
    const double gls_var = design_effect(design, b_inv);
    return std::sqrt(ols_var / gls_var);
}

OlsFit ols_fit(const DataMatrix& x, const TwoGroupDesign& design) {
    OlsFit fit;
    fit.beta_hat.resize(2, x.m);
    for (int j = 0; j < x.m; ++j) {
        double sum1 = 0.0, sum2 = 0.0;
        for (int i = 0; i < x.n; ++i) {
            (design.groups[i] == 1 ? sum1 : sum2) += x.values(i, j);
        }
        fit.beta_hat(0, j) = sum1 / design.n1;
        fit.beta_hat(1, j) = sum2 / design.n2;
    }
    fit.gamma_hat = fit.beta_hat.row(0) - fit.beta_hat.row(1);
    return fit;
}

TTestResult unpaired_t(const DataMatrix& x, const TwoGroupDesign& design) {
    if (design.n1 + design.n2 <= 2) {
        throw InvalidParameter("unpaired_t: need n1 + n2 > 2");
    }
    const OlsFit means = ols_fit(x, design);
    const int dof = design.n1 + design.n2 - 2;
    const double scale = 1.0 / std::sqrt(1.0 / design.n1 + 1.0 / design.n2);
    boost::math::students_t dist(dof);

    TTestResult res;
    res.flavor = TTestFlavor::Unpaired;
    res.dof = dof;
    res.t_stats.resize(x.m);
    res.p_values.resize(x.m);
    for (int j = 0; j < x.m; ++j) {
        double ss = 0.0;
        for (int i = 0; i < x.n; ++i) {
            const double d = x.values(i, j) - means.beta_hat(design.groups[i] == 1 ? 0 : 1, j);
            ss += d * d;
        }
        const double pooled_var = ss / dof;
        if (!(pooled_var > 0.0)) {
            throw DegenerateVariance("unpaired_t: zero pooled variance at column " +
                                         std::to_string(j),
                                     j);
        }
        res.t_stats[j] = means.gamma_hat[j] / std::sqrt(pooled_var) * scale;
        res.p_values[j] = 2.0 * boost::math::cdf(dist, -std::abs(res.t_stats[j]));
    }
    return res;
}

std::vector<std::pair<int, int>> half_split_pairing(int n) {
    if (n % 2 != 0) throw InvalidParameter("half_split_pairing: n must be even");
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(n / 2));
    for (int i = 0; i < n / 2; ++i) pairs.emplace_back(i, i + n / 2);
    return pairs;
}

TTestResult paired_t(const DataMatrix& x, const std::vector<std::pair<int, int>>& pairing) {
    const int k = static_cast<int>(pairing.size());
    if (2 * k != x.n) {
        throw InvalidParameter("paired_t: pairing must cover all rows exactly once");
    }
    std::vector<char> seen(static_cast<std::size_t>(x.n), 0);
    for (auto [a, b] : pairing) {
        if (a < 0 || b < 0 || a >= x.n || b >= x.n || seen[a] || seen[b] || a == b) {
            throw InvalidParameter("paired_t: pairing is not a bijection");
        }
        seen[a] = seen[b] = 1;
    }
    if (k < 2) throw InvalidParameter("paired_t: need at least two pairs");

    const int dof = k - 1;
    boost::math::students_t dist(dof);
    TTestResult res;
    res.flavor = TTestFlavor::Paired;
    res.dof = dof;
    res.t_stats.resize(x.m);
    res.p_values.resize(x.m);
    for (int j = 0; j < x.m; ++j) {
        double dbar = 0.0;
        for (auto [a, b] : pairing) dbar += x.values(a, j) - x.values(b, j);
        dbar /= k;
        double ss = 0.0;
        for (auto [a, b] : pairing) {
            const double d = x.values(a, j) - x.values(b, j) - dbar;
            ss += d * d;
        }
        if (!(ss > 0.0)) {
            throw DegenerateVariance("paired_t: zero difference variance at column " +
                                         std::to_string(j),
                                     j);
        }
        res.t_stats[j] = dbar * std::sqrt(static_cast<double>(dof)) / std::sqrt(ss);
        // the statistic is the classical paired t deflated by sqrt(k), so
        // its null law is t_{k-1} / sqrt(k)
        res.p_values[j] = 2.0 * boost::math::cdf(
                                    dist, -std::sqrt(static_cast<double>(k)) *
                                              std::abs(res.t_stats[j]));
    }
    return res;
}

Vector bh_adjust(const Vector& p_values) {
    const Eigen::Index m = p_values.size();
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!(p_values[i] >= 0.0 && p_values[i] <= 1.0)) {
            throw InvalidParameter("bh_adjust: p-value outside [0, 1]");
        }
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return p_values[a] < p_values[b]; });

    Vector adjusted(m);
    double running = 1.0;
    for (Eigen::Index r = m - 1; r >= 0; --r) {
        const Eigen::Index idx = order[static_cast<std::size_t>(r)];
        running = std::min(running, p_values[idx] * m / static_cast<double>(r + 1));
        adjusted[idx] = running;
    }
    return adjusted;
}

int bh_rejections(const Vector& adjusted, double q) {
    int count = 0;
    for (Eigen::Index i = 0; i < adjusted.size(); ++i) {
        if (adjusted[i] <= q) ++count;
    }
    return count;
}

}  // namespace mvgls
