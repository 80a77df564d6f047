#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mvgls/covmodel.hpp"
#include "mvgls/errors.hpp"
#include "mvgls/eval.hpp"
#include "mvgls/pipeline.hpp"
#include "mvgls/rng.hpp"

using namespace mvgls;

namespace {

DataMatrix simulate(const StructureSpec& a_spec, const StructureSpec& b_spec,
                    const Vector& gamma, const TwoGroupDesign& design,
                    std::uint64_t seed) {
    const auto model = normalize_kronecker(a_spec.build().values, b_spec.build().values);
    const auto mean = MeanSpec::from_gamma(Vector::Zero(gamma.size()), gamma);
    return sample_matrix_variate(mean, model, design, NoiseKind::Gaussian, seed);
}

}  // namespace

TEST_CASE("penalty_value covers all three kinds") {
    PenaltyContext ctx;
    ctx.n = 20;
    ctx.m = 2000;
    ctx.n_min = 10;

    // plugin at f = 0.5 reproduces the lambda ~ 0.1 recipe
    const double plugin = penalty_value(PenaltyPolicy::plugin(0.5), ctx);
    const double expected = 0.5 * (std::sqrt(std::log(2000.0) / 2000.0) + 3.0 / 20.0);
    CHECK(plugin == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(plugin - 0.1056) < 5e-4);

    // oracle with identities: C_A = 1 and |B|_1 = 1
    Matrix a_id = Matrix::Identity(2000, 2000);
    Matrix b_id = Matrix::Identity(20, 20);
    ctx.a_true = &a_id;
    ctx.b_true = &b_id;
    const double oracle = penalty_value(PenaltyPolicy::oracle(1.0), ctx);
    const double c_a = std::sqrt(2000.0) * std::sqrt(2000.0) / 2000.0;  // = 1
    CHECK(oracle == doctest::Approx(c_a * std::sqrt(std::log(2000.0)) / std::sqrt(2000.0) +
                                    1.0 / 10.0)
                        .epsilon(1e-12));

    CHECK(penalty_value(PenaltyPolicy::explicit_level(0.4), ctx) == 0.4);

    PenaltyContext no_truth;
    no_truth.n = 20;
    no_truth.m = 100;
    no_truth.n_min = 10;
    CHECK_THROWS_AS(penalty_value(PenaltyPolicy::oracle(1.0), no_truth),
                    PreconditionViolation);
}

TEST_CASE("tau_init closed form at the identity") {
    const int m = 500;
    const auto design = TwoGroupDesign::contiguous(10, 10);
    const Matrix eye = Matrix::Identity(20, 20);
    const double tau = tau_init(eye, eye, design, m, 1.0);
    CHECK(tau == doctest::Approx(std::sqrt(2.0 * std::log(m) / 20.0)).epsilon(1e-12));
    CHECK(tau_init(eye, eye, design, m, 0.5) == doctest::Approx(0.5 * tau).epsilon(1e-12));
    CHECK_THROWS_AS(tau_init(eye, eye, design, m, 0.0), InvalidParameter);
    CHECK_THROWS_AS(tau_init(eye, eye, design, m, 1.5), InvalidParameter);
}

TEST_CASE("tau_init grows with |B|_1 and with the inverse support") {
    const int m = 400;
    const auto design = TwoGroupDesign::contiguous(10, 10);
    const Matrix b1 = ar1_correlation(20, 0.3).values;
    const Matrix b2 = ar1_correlation(20, 0.7).values;  // larger |B|_1
    const Matrix binv = ar1_correlation(20, 0.3).values.llt().solve(Matrix::Identity(20, 20));
    CHECK(tau_init(b2, binv, design, m, 1.0) > tau_init(b1, binv, design, m, 1.0));

    // denser inverse support raises the first term
    Matrix sparse_inv = Matrix::Identity(20, 20);
    Matrix denser_inv = binv;
    CHECK(tau_init(b1, denser_inv, design, m, 1.0) >
          tau_init(b1, sparse_inv, design, m, 1.0));
}

TEST_CASE("select_genes threshold and top-k rules") {
    Vector gamma(3);
    const double tau = 0.2;
    gamma << 3 * tau, 0.5 * tau, -2.5 * tau;
    const auto sel = select_genes(gamma, tau, SelectionMode::Threshold);
    CHECK(sel.j0 == std::vector<int>{0, 2});
    CHECK(sel.j1 == std::vector<int>{1});

    const auto none = select_genes(gamma, 0.0, SelectionMode::TopK, 0);
    CHECK(none.j0.empty());
    CHECK(static_cast<int>(none.j1.size()) == 3);

    const auto all = select_genes(gamma, 0.0, SelectionMode::TopK, 3);
    CHECK(all.j0 == std::vector<int>{0, 1, 2});

    // scale consistency: same selection after scaling gamma and tau
    const auto scaled = select_genes(Vector(10.0 * gamma), 10.0 * tau, SelectionMode::Threshold);
    CHECK(scaled.j0 == sel.j0);

    // deterministic tie-break by ascending index
    Vector ties(4);
    ties << 1.0, -1.0, 1.0, 0.5;
    const auto top2 = select_genes(ties, 0.0, SelectionMode::TopK, 2);
    CHECK(top2.j0 == std::vector<int>{0, 1});
}

TEST_CASE("algorithm1 runs the full chain and attributes degeneracy") {
    const auto design = TwoGroupDesign::contiguous(10, 10);
    Vector gamma = Vector::Zero(60);
    gamma.head(5).setConstant(0.8);
    const auto x = simulate(StructureSpec::ar1(60, 0.4), StructureSpec::ar1(20, 0.6), gamma,
                            design, 11);
    const auto res = algorithm1(x, design, PenaltyPair{PenaltyPolicy::plugin(0.5),
                                                       PenaltyPolicy::plugin(0.5)});
    CHECK(res.gls.gamma_hat.size() == 60);
    CHECK(res.fit.b_inv.rows() == 20);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(res.fit.b_inv, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
    CHECK(!res.fit.a_inv.has_value());

    // noiseless input dies at the correlation step with a degenerate variance
    const auto mean = MeanSpec::from_gamma(Vector::Zero(60), gamma);
    const auto model = normalize_kronecker(Matrix::Identity(60, 60), Matrix::Identity(20, 20));
    const auto x0 = sample_matrix_variate_with_z(mean, model, design, Matrix::Zero(20, 60));
    CHECK_THROWS_AS(algorithm1(x0, design,
                               PenaltyPair{PenaltyPolicy::plugin(0.5), PenaltyPolicy::plugin(0.5)}),
                    DegenerateVariance);
}

TEST_CASE("large penalty pushes algorithm1 toward OLS as m grows") {
    // full shrinkage leaves diagonal weights m W2^-2; under B = I these
    // concentrate to a constant, so GLS collapses onto the sample means
    const auto design = TwoGroupDesign::contiguous(10, 10);
    auto deviation = [&](int m, std::uint64_t seed) {
        Vector gamma = Vector::Zero(m);
        gamma.head(3).setConstant(0.5);
        Rng rng(seed);
        Matrix values(20, m);
        for (int i = 0; i < 20; ++i) {
            for (int j = 0; j < m; ++j) values(i, j) = rng.normal();
        }
        values += 0.5 * design.delta_n() * gamma.transpose();
        const auto x = DataMatrix::create(std::move(values), design.groups);
        const auto res = algorithm1(x, design,
                                    PenaltyPair{PenaltyPolicy::explicit_level(5.0),
                                                PenaltyPolicy::explicit_level(5.0)});
        const auto ols = ols_fit(x, design);
        return (res.gls.gamma_hat - ols.gamma_hat).cwiseAbs().maxCoeff();
    };
    const double small_m = deviation(100, 5);
    const double large_m = deviation(3000, 5);
    CHECK(large_m < small_m);
    CHECK(large_m < 0.05);
}

TEST_CASE("algorithm1 with fit_a fills the A side") {
    const auto design = TwoGroupDesign::contiguous(8, 8);
    Vector gamma = Vector::Zero(30);
    const auto x = simulate(StructureSpec::ar1(30, 0.5), StructureSpec::ar1(16, 0.5), gamma,
                            design, 21);
    const auto res = algorithm1(x, design, PenaltyPair{PenaltyPolicy::plugin(0.5),
                                                       PenaltyPolicy::plugin(0.5)},
                                true);
    REQUIRE(res.fit.a_inv.has_value());
    CHECK(res.fit.a_inv->rows() == 30);
    CHECK(res.fit.lambda_b > 0.0);
    // identifiability: the implied A estimate carries trace m
    const auto est = kronecker_estimate(res.fit, center(x, design, CenteringScheme::group()).x_cen);
    const double tr_a = est.factor_a.trace() * (x.m * 1.0) / est.divisor;
    CHECK(tr_a == doctest::Approx(30.0).epsilon(1e-9));
}

TEST_CASE("algorithm2 with top_k = m reproduces algorithm1 bit for bit") {
    const auto design = TwoGroupDesign::contiguous(10, 10);
    Vector gamma = Vector::Zero(40);
    gamma.head(4).setConstant(1.0);
    const auto x = simulate(StructureSpec::ar1(40, 0.3), StructureSpec::ar1(20, 0.5), gamma,
                            design, 31);

    Alg2Config config;
    config.threshold = ThresholdRule::top(40);
    config.penalty_stage1 = PenaltyPolicy::plugin(0.5);
    config.penalty_stage4 = PenaltyPolicy::plugin(0.5);
    const auto res2 = algorithm2(x, design, config);
    const auto res1 = algorithm1(x, design, PenaltyPair{PenaltyPolicy::plugin(0.5),
                                                        PenaltyPolicy::plugin(0.5)});
    CHECK((res2.gls.gamma_hat - res1.gls.gamma_hat).cwiseAbs().maxCoeff() == 0.0);
    CHECK((res2.gls.t_stats - res1.gls.t_stats).cwiseAbs().maxCoeff() == 0.0);
    CHECK((res2.gls.p_values - res1.gls.p_values).cwiseAbs().maxCoeff() == 0.0);
    CHECK((res2.fit.b_inv - res1.fit.b_inv).cwiseAbs().maxCoeff() == 0.0);
    CHECK(res2.gls.design_effect == res1.gls.design_effect);
}

TEST_CASE("algorithm2 threshold mode selects the planted support under strong effects") {
    const auto design = TwoGroupDesign::contiguous(10, 10);
    Vector gamma = Vector::Zero(120);
    gamma.head(6).setConstant(6.0);  // the plug-in threshold is conservative
    const auto x = simulate(StructureSpec::ar1(120, 0.3), StructureSpec::ar1(20, 0.5), gamma,
                            design, 41);
    Alg2Config config;
    config.threshold = ThresholdRule::plugin(1.0);
    const auto res = algorithm2(x, design, config);
    CHECK(res.selection.tau > 0.0);
    int hits = 0;
    for (int j : res.selection.j0) {
        if (j < 6) ++hits;
    }
    CHECK(hits >= 5);
    CHECK(res.selection.j0.size() <= 20);
    CHECK(res.selection.j0.size() + res.selection.j1.size() == 120);

    // the recorded selection is exactly the 2 tau rule on gamma_init
    for (int j : res.selection.j0) {
        CHECK(std::abs(res.selection.gamma_init[j]) > 2.0 * res.selection.tau);
    }
    for (int j : res.selection.j1) {
        CHECK(std::abs(res.selection.gamma_init[j]) <= 2.0 * res.selection.tau);
    }
}

TEST_CASE("pipelines are deterministic") {
    const auto design = TwoGroupDesign::contiguous(8, 8);
    Vector gamma = Vector::Zero(30);
    gamma.head(3).setConstant(1.0);
    const auto x = simulate(StructureSpec::ar1(30, 0.4), StructureSpec::ar1(16, 0.4), gamma,
                            design, 51);
    Alg2Config config;
    const auto r1 = algorithm2(x, design, config);
    const auto r2 = algorithm2(x, design, config);
    CHECK((r1.gls.gamma_hat - r2.gls.gamma_hat).cwiseAbs().maxCoeff() == 0.0);
    CHECK((r1.fit.b_inv - r2.fit.b_inv).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stability iteration on dominant effects keeps the ranking") {
    const int n = 16, m = 60;
    const auto design = TwoGroupDesign::contiguous(8, 8);
    Vector gamma = Vector::Zero(m);
    gamma.head(10).setConstant(4.0);
    const auto x = simulate(StructureSpec::ar1(m, 0.3), StructureSpec::ar1(n, 0.5), gamma,
                            design, 61);
    const auto report = stability_iteration(x, design, {60, 30, 15}, PenaltyPolicy::plugin(0.5),
                                            SolverConfig{}, 10);
    REQUIRE(report.iterations.size() == 3);
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) CHECK(report.overlap(a, b) == 10);
    }
    // the dominated columns are exactly the planted ones
    for (int v : report.iterations.back().top_ranked) CHECK(v < 10);
}

TEST_CASE("stability schedule validation") {
    const auto design = TwoGroupDesign::contiguous(8, 8);
    Vector gamma = Vector::Zero(30);
    const auto x = simulate(StructureSpec::ar1(30, 0.3), StructureSpec::ar1(16, 0.4), gamma,
                            design, 71);
    CHECK_THROWS_AS(stability_iteration(x, design, {}, PenaltyPolicy::plugin(0.5)),
                    InvalidParameter);
    CHECK_THROWS_AS(stability_iteration(x, design, {10, 10}, PenaltyPolicy::plugin(0.5)),
                    InvalidParameter);
    CHECK_THROWS_AS(stability_iteration(x, design, {40}, PenaltyPolicy::plugin(0.5)),
                    InvalidParameter);
}

TEST_CASE("single-entry schedule equals the algorithm1 ranking") {
    const int n = 16, m = 50;
    const auto design = TwoGroupDesign::contiguous(8, 8);
    Vector gamma = Vector::Zero(m);
    gamma.head(5).setConstant(1.5);
    const auto x = simulate(StructureSpec::ar1(m, 0.3), StructureSpec::ar1(n, 0.5), gamma,
                            design, 81);
    // one full-width iteration group centers everything, as Algorithm 1 does
    const auto report = stability_iteration(x, design, {m}, PenaltyPolicy::plugin(0.5),
                                            SolverConfig{}, 5);
    REQUIRE(report.iterations.size() == 1);
    const auto alg1 = algorithm1(x, design, PenaltyPair{PenaltyPolicy::plugin(0.5),
                                                        PenaltyPolicy::plugin(0.5)});
    const auto ranked = [&] {
        std::vector<int> idx(m);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            const double va = std::abs(alg1.gls.gamma_hat[a]);
            const double vb = std::abs(alg1.gls.gamma_hat[b]);
            if (va != vb) return va > vb;
            return a < b;
        });
        return std::vector<int>(idx.begin(), idx.begin() + 5);
    }();
    CHECK(report.iterations[0].top_ranked == ranked);
}
