#include <doctest.h>

#include <cmath>

#include "mvgls/errors.hpp"
#include "mvgls/glasso.hpp"
#include "mvgls/rng.hpp"
#include "oracles.hpp"

using namespace mvgls;

namespace {

Matrix random_correlation(int n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix base(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) base(i, j) = rng.normal();
    }
    Matrix cov = base * base.transpose() / n + 0.3 * Matrix::Identity(n, n);
    Vector s = cov.diagonal().cwiseSqrt().cwiseInverse();
    Matrix corr = s.asDiagonal() * cov * s.asDiagonal();
    corr.diagonal().setOnes();
    return corr;
}

SolverConfig tight() {
    SolverConfig cfg;
    cfg.tol = 1e-10;
    cfg.max_iter = 2000;
    return cfg;
}

}  // namespace

TEST_CASE("2x2 soft-threshold closed form") {
    Matrix gamma(2, 2);
    gamma << 1.0, 0.6, 0.6, 1.0;
    const auto fit = glasso_fit(gamma, 0.2, tight());
    // sigma_12 = sign(gamma_12)(|gamma_12| - lambda)_+
    CHECK(fit.sigma(0, 0) == 1.0);
    CHECK(fit.sigma(1, 1) == 1.0);
    CHECK(fit.sigma(0, 1) == doctest::Approx(0.4).epsilon(1e-8));
    const double theta_diag = 1.0 / (1.0 - 0.16);
    const double theta_off = -0.4 / (1.0 - 0.16);
    CHECK(fit.theta(0, 0) == doctest::Approx(theta_diag).epsilon(1e-8));
    CHECK(fit.theta(0, 1) == doctest::Approx(theta_off).epsilon(1e-8));
    CHECK(fit.theta(0, 0) == doctest::Approx(1.19048).epsilon(1e-4));
    CHECK(fit.theta(0, 1) == doctest::Approx(-0.47619).epsilon(1e-4));
    CHECK(kkt_residual(gamma, fit.theta, 0.2) < 1e-10);
}

TEST_CASE("full shrinkage gives a diagonal solution") {
    Matrix gamma(2, 2);
    gamma << 1.0, 0.3, 0.3, 1.0;
    const auto fit = glasso_fit(gamma, 0.5, tight());
    CHECK(fit.theta(0, 1) == 0.0);
    CHECK(fit.theta(1, 0) == 0.0);
    CHECK(fit.theta(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("lambda = 0 recovers the inverse") {
    const Matrix gamma = random_correlation(5, 21);
    const auto fit = glasso_fit(gamma, 0.0, tight());
    const Matrix inv = gamma.llt().solve(Matrix::Identity(5, 5));
    CHECK((fit.theta - inv).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("lambda = 0 with singular input fails loudly") {
    Matrix gamma(3, 3);
    gamma << 1, 1, 0, 1, 1, 0, 0, 0, 1;
    CHECK_THROWS_AS(glasso_fit(gamma, 0.0, tight()), SingularInput);
}

TEST_CASE("matches the projected-gradient oracle on small problems") {
    for (auto [n, seed, lambda] : {std::tuple{3, 31ULL, 0.1}, std::tuple{3, 32ULL, 0.25},
                                   std::tuple{4, 33ULL, 0.1}, std::tuple{4, 34ULL, 0.3}}) {
        const Matrix gamma = random_correlation(n, seed);
        const auto fit = glasso_fit(gamma, lambda, tight());
        const Matrix oracle = oracles::glasso_projected_gradient(gamma, lambda);
        CHECK((fit.theta - oracle).cwiseAbs().maxCoeff() < 1e-4);
        CHECK(fit.kkt_residual <= 1e-10);
    }
}

TEST_CASE("kkt_residual certifies and rejects") {
    Matrix gamma(2, 2);
    gamma << 1.0, 0.6, 0.6, 1.0;
    const auto fit = glasso_fit(gamma, 0.2, tight());
    CHECK(kkt_residual(gamma, fit.theta, 0.2) < 1e-10);

    // identity fixed point
    CHECK(kkt_residual(Matrix::Identity(3, 3), Matrix::Identity(3, 3), 0.0) == 0.0);

    // a finite perturbation must be flagged by the certificate
    Matrix bumped = fit.theta;
    bumped(0, 1) += 0.01;
    bumped(1, 0) += 0.01;
    CHECK(kkt_residual(gamma, bumped, 0.2) >= 0.005);

    Matrix singular = Matrix::Zero(2, 2);
    CHECK_THROWS_AS(kkt_residual(gamma, singular, 0.2), SingularInput);
}

TEST_CASE("objective is monotone across sweeps") {
    const Matrix gamma = random_correlation(6, 55);
    const auto fit = glasso_fit(gamma, 0.15, tight());
    REQUIRE(fit.objective_path.size() >= 2);
    for (std::size_t i = 1; i < fit.objective_path.size(); ++i) {
        CHECK(fit.objective_path[i] <= fit.objective_path[i - 1] + 1e-9);
    }
}

TEST_CASE("support shrinks as lambda grows") {
    const Matrix gamma = random_correlation(8, 77);
    int last_support = 8 * 7;
    for (int k = 0; k < 10; ++k) {
        const double lambda = 0.02 + 0.05 * k;
        const auto fit = glasso_fit(gamma, lambda, tight());
        int support = 0;
        for (int i = 0; i < 8; ++i) {
            for (int j = 0; j < 8; ++j) {
                if (i != j && fit.theta(i, j) != 0.0) ++support;
            }
        }
        CHECK(support <= last_support);
        last_support = support;
    }
}

TEST_CASE("permutation equivariance") {
    const int n = 6;
    const Matrix gamma = random_correlation(n, 91);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(n);
    perm.setIdentity();
    std::swap(perm.indices()[0], perm.indices()[4]);
    std::swap(perm.indices()[2], perm.indices()[5]);
    const Matrix gamma_p = perm * gamma * perm.transpose();
    const auto fit = glasso_fit(gamma, 0.12, tight());
    const auto fit_p = glasso_fit(gamma_p, 0.12, tight());
    const Matrix moved = perm * fit.theta * perm.transpose();
    CHECK((fit_p.theta - moved).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("sigma inverts theta and keeps the diagonal") {
    const Matrix gamma = random_correlation(7, 13);
    const auto fit = glasso_fit(gamma, 0.1, tight());
    CHECK((fit.sigma * fit.theta - Matrix::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-6);
    for (int i = 0; i < 7; ++i) CHECK(fit.sigma(i, i) == gamma(i, i));
}

TEST_CASE("rank-deficient input is fine when lambda is positive") {
    // correlation of rank-2 data: PSD with null space, unit diagonal
    Rng rng(5);
    Matrix low(6, 2);
    for (int i = 0; i < 6; ++i) {
        low(i, 0) = rng.normal();
        low(i, 1) = rng.normal();
    }
    Matrix cov = low * low.transpose();
    Vector s = cov.diagonal().cwiseSqrt().cwiseInverse();
    Matrix corr = s.asDiagonal() * cov * s.asDiagonal();
    corr.diagonal().setOnes();
    corr = 0.5 * (corr + corr.transpose());
    const auto fit = glasso_fit(corr, 0.3, tight());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(fit.theta, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
    CHECK(fit.kkt_residual <= 1e-10);
}

TEST_CASE("warm starts do not change the answer") {
    const Matrix gamma = random_correlation(6, 99);
    const auto cold = glasso_fit(gamma, 0.2, tight());
    const auto warm = glasso_fit(gamma, 0.25, tight(), &cold.theta);
    const auto cold2 = glasso_fit(gamma, 0.25, tight());
    CHECK((warm.theta - cold2.theta).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("non-convergence carries the last residual") {
    const Matrix gamma = random_correlation(6, 14);
    SolverConfig cfg;
    cfg.tol = 1e-13;
    cfg.max_iter = 1;
    try {
        glasso_fit(gamma, 0.17, cfg);
    } catch (const ConvergenceFailure& e) {
        CHECK(e.kkt_residual() > 0.0);
        return;
    }
    // a single sweep may legitimately converge on easy inputs
    CHECK(true);
}
