#pragma once

#include <optional>
#include <vector>

#include "mvgls/gemini.hpp"
#include "mvgls/gls.hpp"
#include "mvgls/types.hpp"

namespace mvgls {

enum class PenaltyKind { Oracle, Plugin, Explicit };

/// Which Gemini objective the penalty feeds: Sample fits B_rho (the
/// paper-side lambda_A), Variable fits A_rho (lambda_B).
enum class PenaltySide { Sample, Variable };

struct PenaltyPolicy {
    PenaltyKind kind = PenaltyKind::Plugin;
    double multiplier = 0.5;
    std::optional<double> explicit_value;
    double subgaussian_k = 1.0;

    static PenaltyPolicy plugin(double multiplier = 0.5) {
        return {PenaltyKind::Plugin, multiplier, std::nullopt, 1.0};
    }
    static PenaltyPolicy oracle(double multiplier, double k = 1.0) {
        return {PenaltyKind::Oracle, multiplier, std::nullopt, k};
    }
    static PenaltyPolicy explicit_level(double value) {
        return {PenaltyKind::Explicit, 1.0, value, 1.0};
    }
};

struct PenaltyContext {
    int n = 0;
    int m = 0;
    int n_min = 0;
    const Matrix* a_true = nullptr;  // required for the oracle kind
    const Matrix* b_true = nullptr;
};

/// Penalty level for one Gemini objective.
/// oracle: f (C K sqrt(log(m v n)) / sqrt(axis) + |B|_1 / n_min)
/// plugin: f (sqrt(log m / m) + 3 / n) on the sample side
/// explicit: the stored value.
double penalty_value(const PenaltyPolicy& policy, const PenaltyContext& context,
                     PenaltySide side = PenaltySide::Sample);

struct PenaltyPair {
    PenaltyPolicy for_b;  // lambda_A, penalizes B_rho^-1
    PenaltyPolicy for_a;  // lambda_B, penalizes A_rho^-1
};

struct Alg1Result {
    GeminiFit fit;
    GlsResult gls;
};

/// Group centering, Gemini fit of B (and optionally A), rescaling, GLS.
Alg1Result algorithm1(const DataMatrix& x, const TwoGroupDesign& design,
                      const PenaltyPair& penalties, bool fit_a = false,
                      const SolverConfig& solver = {},
                      const PenaltyContext* oracle_context = nullptr);

/// Plug-in selection threshold evaluated with proportionality constant 1:
///   (sqrt(log m / m) + |B|_1 / n_min) sqrt(n_ratio s0 / n_min)
///   + sqrt(log m) |(D^T B^-1 D)^-1|_2^(1/2),
/// all times `multiplier`. s0 counts off-diagonal entries of b_inv_init
/// with magnitude above 1e-10.
double tau_init(const Matrix& b_init, const Matrix& b_inv_init,
                const TwoGroupDesign& design, int m, double multiplier);

struct ThresholdRule {
    enum class Mode { Plugin, TopK } mode = Mode::Plugin;
    double multiplier = 1.0;  // Plugin: scales tau_init
    int top_k = 0;

    static ThresholdRule plugin(double multiplier = 1.0) {
        return {Mode::Plugin, multiplier, 0};
    }
    static ThresholdRule top(int k) { return {Mode::TopK, 1.0, k}; }
};

struct SelectionResult {
    std::vector<int> j0;  // group centered
    std::vector<int> j1;  // globally centered
    double tau = 0.0;     // 0 in top-k mode
    Vector gamma_init;
};

enum class SelectionMode { Threshold, TopK };

/// Threshold mode: J0 = { j : |gamma_j| > 2 tau }. Top-k mode: the k
/// largest |gamma_j|, ties broken by ascending index.
SelectionResult select_genes(const Vector& gamma_init, double tau, SelectionMode mode,
                             int top_k = 0);

struct Alg2Config {
    ThresholdRule threshold = ThresholdRule::plugin();
    PenaltyPolicy penalty_stage1 = PenaltyPolicy::plugin(0.5);
    PenaltyPolicy penalty_stage4 = PenaltyPolicy::plugin(0.25);
    bool fit_a = false;
    SolverConfig solver;
};

struct Alg2Result {
    SelectionResult selection;
    GeminiFit fit;
    GlsResult gls;
    Alg1Result stage1;
};

/// Algorithm 1, selection of strong columns, model-selection centering,
/// refit, GLS with the refitted inverse.
Alg2Result algorithm2(const DataMatrix& x, const TwoGroupDesign& design,
                      const Alg2Config& config,
                      const PenaltyContext* oracle_context = nullptr);

struct StabilityIteration {
    int n_group_centered = 0;
    std::vector<int> top_ranked;  // first overlap_k indices by |gamma|
    Vector gamma_hat;
    int rejections = 0;  // BH rejections at the configured level
};

struct StabilityReport {
    std::vector<StabilityIteration> iterations;
    Eigen::MatrixXi overlap;  // pairwise top-k intersections
    double lambda = 0.0;
    double fdr_level = 0.1;
    int overlap_k = 10;
};

/// Successive re-centering around the previous mean estimates: top-ranked
/// columns are centered around beta_hat, the rest around the GLS global
/// mean (design 1_n), with a Gemini refit of B in between.
StabilityReport stability_iteration(const DataMatrix& x, const TwoGroupDesign& design,
                                    const std::vector<int>& schedule,
                                    const PenaltyPolicy& penalty,
                                    const SolverConfig& solver = {}, int overlap_k = 10,
                                    double fdr_level = 0.1,
                                    const PenaltyContext* oracle_context = nullptr);

}  // namespace mvgls
