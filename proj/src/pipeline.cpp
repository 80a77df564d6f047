#include "mvgls/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mvgls/errors.hpp"
#include "mvgls/kernels.hpp"

namespace mvgls {

namespace {

double l1_operator_norm(const Matrix& a) {
    return a.cwiseAbs().colwise().sum().maxCoeff();
}

std::vector<int> rank_by_magnitude(const Vector& values) {
    std::vector<int> idx(static_cast<std::size_t>(values.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        const double va = std::abs(values[a]);
        const double vb = std::abs(values[b]);
        if (va != vb) return va > vb;
        return a < b;
    });
    return idx;
}

}  // namespace

double penalty_value(const PenaltyPolicy& policy, const PenaltyContext& context,
                     PenaltySide side) {
    switch (policy.kind) {
        case PenaltyKind::Explicit:
            if (!policy.explicit_value.has_value()) {
                throw PreconditionViolation("penalty_value: explicit value not set");
            }
            return *policy.explicit_value;
        case PenaltyKind::Plugin: {
            if (context.n <= 0 || context.m <= 0) {
                throw PreconditionViolation("penalty_value: plugin needs n and m");
            }
            const double n = context.n, m = context.m;
            const double variance_term =
                side == PenaltySide::Sample
                    ? std::sqrt(std::log(m) / m)
                    : std::sqrt(std::log(std::max(m, n)) / n);
            return policy.multiplier * (variance_term + 3.0 / n);
        }
        case PenaltyKind::Oracle: {
            if (context.a_true == nullptr || context.b_true == nullptr) {
                throw PreconditionViolation("penalty_value: oracle needs the true (A, B)");
            }
            if (context.n_min <= 0) {
                throw PreconditionViolation("penalty_value: oracle needs n_min");
            }
            const double n = context.n, m = context.m;
            const double log_term = std::sqrt(std::log(std::max(m, n)));
            const double bias = l1_operator_norm(*context.b_true) / context.n_min;
            double variance_term;
            if (side == PenaltySide::Sample) {
                const double c_a = std::sqrt(m) * context.a_true->norm() /
                                   context.a_true->trace();
                variance_term = c_a * policy.subgaussian_k * log_term / std::sqrt(m);
            } else {
                const double c_b = std::sqrt(n) * context.b_true->norm() /
                                   context.b_true->trace();
                variance_term = c_b * policy.subgaussian_k * log_term / std::sqrt(n);
            }
            return policy.multiplier * (variance_term + bias);
        }
    }
    throw InvalidParameter("penalty_value: unknown kind");
}

namespace {

struct GeminiChainResult {
    GeminiFit fit;
    Matrix x_cen;
};

// Shared by Algorithms 1/2 and the stability iteration: centered data in,
// rescaled inverse estimates out.
GeminiChainResult gemini_chain(CenteredData cen, double lambda_for_b,
                               std::optional<double> lambda_for_a,
                               const SolverConfig& solver) {
    GeminiFit fit;
    const double m = static_cast<double>(cen.x_cen.cols());
    const double n = static_cast<double>(cen.x_cen.rows());
    fit.s_b = gram_rows(cen.x_cen) / m;
    fit.gamma_hat_b = sample_correlation(fit.s_b);
    PenalizedPrecisionFit b_fit = glasso_fit(fit.gamma_hat_b, lambda_for_b, solver);
    std::optional<PenalizedPrecisionFit> a_fit;
    if (lambda_for_a.has_value()) {
        fit.s_a = gram_cols(cen.x_cen) / n;
        fit.gamma_hat_a = sample_correlation(*fit.s_a);
        a_fit = glasso_fit(*fit.gamma_hat_a, *lambda_for_a, solver);
    }
    GeminiChainResult out{rescale_inverses(std::move(fit), b_fit, a_fit, cen.x_cen),
                          std::move(cen.x_cen)};
    return out;
}

}  // namespace

Alg1Result algorithm1(const DataMatrix& x, const TwoGroupDesign& design,
                      const PenaltyPair& penalties, bool fit_a,
                      const SolverConfig& solver, const PenaltyContext* oracle_context) {
    if (x.m < 3 || x.n < 4 || design.n_min < 2) {
        throw InvalidParameter("algorithm1: need m >= 3, n >= 4, both groups >= 2");
    }
    PenaltyContext context;
    if (oracle_context != nullptr) context = *oracle_context;
    context.n = x.n;
    context.m = x.m;
    context.n_min = design.n_min;

    const double lambda_b = penalty_value(penalties.for_b, context, PenaltySide::Sample);
    std::optional<double> lambda_a;
    if (fit_a) lambda_a = penalty_value(penalties.for_a, context, PenaltySide::Variable);

    CenteredData cen = center(x, design, CenteringScheme::group());
    GeminiChainResult chain = gemini_chain(std::move(cen), lambda_b, lambda_a, solver);
    GlsResult gls = gls_fit(x, design, chain.fit.b_inv);
    return Alg1Result{std::move(chain.fit), std::move(gls)};
}

double tau_init(const Matrix& b_init, const Matrix& b_inv_init,
                const TwoGroupDesign& design, int m, double multiplier) {
    if (!(multiplier > 0.0 && multiplier <= 1.0)) {
        throw InvalidParameter("tau_init: multiplier must be in (0, 1]");
    }
    const double log_m = std::log(static_cast<double>(m));
    long s0 = 0;
    for (Eigen::Index j = 0; j < b_inv_init.cols(); ++j) {
        for (Eigen::Index i = 0; i < b_inv_init.rows(); ++i) {
            if (i != j && std::abs(b_inv_init(i, j)) > 1e-10) ++s0;
        }
    }
    const double omega_norm = [&] {
        Eigen::Matrix2d q = design.d.transpose() * b_inv_init * design.d;
        const double det = q(0, 0) * q(1, 1) - q(0, 1) * q(1, 0);
        if (!(std::abs(det) > 1e-14 * q.cwiseAbs().maxCoeff() * q.cwiseAbs().maxCoeff())) {
            throw SingularDesign("tau_init: D^T B^-1 D is singular");
        }
        Eigen::Matrix2d omega;
        omega << q(1, 1), -q(0, 1), -q(1, 0), q(0, 0);
        omega /= det;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(omega);
        return eig.eigenvalues().cwiseAbs().maxCoeff();
    }();

    const double bias_term = std::sqrt(log_m) / std::sqrt(static_cast<double>(m)) +
                             l1_operator_norm(b_init) / design.n_min;
    const double support_term =
        std::sqrt(design.n_ratio * static_cast<double>(s0) / design.n_min);
    const double lower_bound = std::sqrt(log_m) * std::sqrt(omega_norm);
    return multiplier * (bias_term * support_term + lower_bound);
}

SelectionResult select_genes(const Vector& gamma_init, double tau, SelectionMode mode,
                             int top_k) {
    const int m = static_cast<int>(gamma_init.size());
    SelectionResult sel;
    sel.gamma_init = gamma_init;
    std::vector<char> chosen(static_cast<std::size_t>(m), 0);
    if (mode == SelectionMode::Threshold) {
        if (!(tau > 0.0)) {
            throw InvalidParameter("select_genes: threshold mode needs tau > 0");
        }
        sel.tau = tau;
        for (int j = 0; j < m; ++j) {
            if (std::abs(gamma_init[j]) > 2.0 * tau) chosen[j] = 1;
        }
    } else {
        if (top_k < 0 || top_k > m) {
            throw InvalidParameter("select_genes: top_k out of range");
        }
        const auto ranked = rank_by_magnitude(gamma_init);
        for (int r = 0; r < top_k; ++r) chosen[static_cast<std::size_t>(ranked[r])] = 1;
    }
    for (int j = 0; j < m; ++j) {
        (chosen[static_cast<std::size_t>(j)] ? sel.j0 : sel.j1).push_back(j);
    }
    return sel;
}

Alg2Result algorithm2(const DataMatrix& x, const TwoGroupDesign& design,
                      const Alg2Config& config, const PenaltyContext* oracle_context) {
    Alg1Result stage1 = algorithm1(x, design,
                                   PenaltyPair{config.penalty_stage1, config.penalty_stage1},
                                   false, config.solver, oracle_context);

    SelectionResult selection;
    if (config.threshold.mode == ThresholdRule::Mode::TopK) {
        selection = select_genes(stage1.gls.gamma_hat, 0.0, SelectionMode::TopK,
                                 config.threshold.top_k);
    } else {
        Matrix b_init = stage1.fit.b_inv.llt().solve(
            Matrix::Identity(design.n, design.n));
        const double tau = tau_init(b_init, stage1.fit.b_inv, design, x.m,
                                    config.threshold.multiplier);
        selection = select_genes(stage1.gls.gamma_hat, tau, SelectionMode::Threshold);
    }

    PenaltyContext context;
    if (oracle_context != nullptr) context = *oracle_context;
    context.n = x.n;
    context.m = x.m;
    context.n_min = design.n_min;
    const double lambda_b = penalty_value(config.penalty_stage4, context, PenaltySide::Sample);
    std::optional<double> lambda_a;
    if (config.fit_a) {
        lambda_a = penalty_value(config.penalty_stage4, context, PenaltySide::Variable);
    }

    CenteredData cen = center(x, design, CenteringScheme::model_selection(selection.j0));
    GeminiChainResult chain =
        gemini_chain(std::move(cen), lambda_b, lambda_a, config.solver);
    GlsResult gls = gls_fit(x, design, chain.fit.b_inv);
    return Alg2Result{std::move(selection), std::move(chain.fit), std::move(gls),
                      std::move(stage1)};
}

StabilityReport stability_iteration(const DataMatrix& x, const TwoGroupDesign& design,
                                    const std::vector<int>& schedule,
                                    const PenaltyPolicy& penalty,
                                    const SolverConfig& solver, int overlap_k,
                                    double fdr_level,
                                    const PenaltyContext* oracle_context) {
    if (schedule.empty()) throw InvalidParameter("stability_iteration: empty schedule");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (schedule[i] < 1 || schedule[i] > x.m) {
            throw InvalidParameter("stability_iteration: schedule entry out of range");
        }
        if (i > 0 && schedule[i] >= schedule[i - 1]) {
            throw InvalidParameter("stability_iteration: schedule must be strictly decreasing");
        }
    }
    if (overlap_k < 1 || overlap_k > x.m) {
        throw InvalidParameter("stability_iteration: overlap_k out of range");
    }

    PenaltyContext context;
    if (oracle_context != nullptr) context = *oracle_context;
    context.n = x.n;
    context.m = x.m;
    context.n_min = design.n_min;
    const double lambda = penalty_value(penalty, context, PenaltySide::Sample);

    // Sample-mean initialization; mu weights each group equally.
    const OlsFit ols = ols_fit(x, design);
    Matrix beta_prev = ols.beta_hat;
    Vector mu_prev = 0.5 * (ols.beta_hat.row(0) + ols.beta_hat.row(1));
    Vector gamma_prev = ols.gamma_hat;

    const Vector ones = Vector::Ones(x.n);
    StabilityReport report;
    report.lambda = lambda;
    report.fdr_level = fdr_level;
    report.overlap_k = overlap_k;

    for (int count : schedule) {
        const auto ranked = rank_by_magnitude(gamma_prev);
        std::vector<char> grouped(static_cast<std::size_t>(x.m), 0);
        for (int r = 0; r < count; ++r) grouped[static_cast<std::size_t>(ranked[r])] = 1;

        // Center around the previous estimates, not fresh sample means.
        Matrix x_cen(x.n, x.m);
        for (int j = 0; j < x.m; ++j) {
            if (grouped[static_cast<std::size_t>(j)]) {
                for (int i = 0; i < x.n; ++i) {
                    x_cen(i, j) = x.values(i, j) -
                                  beta_prev(design.groups[i] == 1 ? 0 : 1, j);
                }
            } else {
                x_cen.col(j) = x.values.col(j).array() - mu_prev[j];
            }
        }

        GeminiFit fit;
        fit.s_b = gram_rows(x_cen) / static_cast<double>(x.m);
        fit.gamma_hat_b = sample_correlation(fit.s_b);
        PenalizedPrecisionFit b_fit = glasso_fit(fit.gamma_hat_b, lambda, solver);
        fit = rescale_inverses(std::move(fit), b_fit, std::nullopt, x_cen);

        GlsResult gls = gls_fit(x, design, fit.b_inv);
        const double mu_denom = ones.dot(fit.b_inv * ones);
        if (!(std::abs(mu_denom) > 0.0)) {
            throw SingularDesign("stability_iteration: 1^T B^-1 1 is zero");
        }
        Vector mu = (fit.b_inv * x.values).transpose() * ones / mu_denom;

        StabilityIteration iter;
        iter.n_group_centered = count;
        const auto new_rank = rank_by_magnitude(gls.gamma_hat);
        iter.top_ranked.assign(new_rank.begin(), new_rank.begin() + overlap_k);
        iter.gamma_hat = gls.gamma_hat;
        iter.rejections = bh_rejections(gls.fdr_adjusted, fdr_level);
        report.iterations.push_back(std::move(iter));

        beta_prev = gls.beta_hat;
        mu_prev = mu;
        gamma_prev = gls.gamma_hat;
    }

    const int t = static_cast<int>(report.iterations.size());
    report.overlap.resize(t, t);
    for (int a = 0; a < t; ++a) {
        for (int b = 0; b < t; ++b) {
            const auto& ra = report.iterations[static_cast<std::size_t>(a)].top_ranked;
            const auto& rb = report.iterations[static_cast<std::size_t>(b)].top_ranked;
            std::vector<char> in_a(static_cast<std::size_t>(x.m), 0);
            for (int v : ra) in_a[static_cast<std::size_t>(v)] = 1;
            int common = 0;
            for (int v : rb) common += in_a[static_cast<std::size_t>(v)];
            report.overlap(a, b) = common;
        }
    }
    return report;
}

}  // namespace mvgls
