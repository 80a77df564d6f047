#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvgls/pipeline.hpp"
#include "mvgls/types.hpp"

namespace mvgls {

/// Population correlation structure description, JSON round-trippable,
/// e.g. {"kind":"ar1","n":80,"rho":0.8}.
struct StructureSpec {
    enum class Kind { Ar1, StarBlock, ErdosRenyi };
    Kind kind = Kind::Ar1;
    int n = 0;
    double rho = 0.0;          // ar1, star_block
    int n_blocks = 0;          // star_block
    int block_size = 0;        // star_block
    int edges = 0;             // erdos_renyi
    double w_min = 0.6;        // erdos_renyi
    double w_max = 0.8;        // erdos_renyi
    std::uint64_t seed = 0;    // erdos_renyi

    static StructureSpec ar1(int n, double rho);
    static StructureSpec star_block(int n_blocks, int block_size, double rho);
    static StructureSpec erdos_renyi(int n, int edges, double w_min, double w_max,
                                     std::uint64_t seed);

    CorrelationStructure build() const;
    std::string to_json() const;
    static StructureSpec from_json(const std::string& text);
};

struct EstimationMetrics {
    double rmse = 0.0;
    double rel_fro = 0.0;
    double rank_corr = 0.0;
};

/// rmse = |g_hat - g|_2 / sqrt(m); rel_fro = |Binv_hat - Binv|_F / |Binv|_F;
/// rank_corr = Spearman correlation of the magnitude rankings.
EstimationMetrics estimation_metrics(const Vector& gamma_hat, const Vector& gamma_true,
                                     const Matrix* b_inv_hat = nullptr,
                                     const Matrix* b_inv_true = nullptr);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// Threshold sweep over |scores| with ties grouped; AUC by trapezoid.
/// `support` holds the true non-null indices and must be a proper,
/// nonempty subset.
RocCurve roc_curve(const Vector& scores, const std::vector<int>& support);

double design_effect_ratio(double estimated, double true_value);

struct CalibrationTable {
    Vector empirical;  // sorted statistics
    Vector normal;     // Phi^-1((i - 0.5) / m)
    double slope = 0.0;  // empirical IQR / normal IQR
};

CalibrationTable calibration_quantiles(const Vector& t_stats);

/// One structural summary row in Table-1 layout; groups are assigned
/// first half / second half.
struct StructureMetricsRow {
    double rho_b_sq = 0.0;        // mean squared off-diagonal correlation
    double fro_over_trace = 0.0;  // |B|_F / tr(B)
    double inv_corr_l1_off = 0.0; // |rho(B)^-1|_{1,off}
    double sd_gls = 0.0;          // sqrt(design effect)
    double sd_ratio = 0.0;
};

StructureMetricsRow structure_metrics(const Matrix& b, const TwoGroupDesign& design);

enum class Estimator { Ols, Alg1, Alg2, OracleGls, OracleModsel, UnpairedT, PairedT };

std::string estimator_name(Estimator e);
Estimator estimator_from_name(const std::string& name);

struct MeanProfile {
    enum class Kind { Sparse, DecayExp } kind = Kind::Sparse;
    int d0 = 10;            // Sparse: planted effect count
    double effect = 0.3;    // Sparse: effect magnitude
    std::vector<double> effects;  // Sparse: optional per-gene sizes (first d0)
    double max_effect = 5.0;      // DecayExp: largest difference
    double rate = 3.0 / 2000.0;   // DecayExp: gamma_j ~ exp(-rate j)

    Vector build_gamma(int m) const;
};

enum class GroupAssignment { Contiguous, RandomBalanced };

struct SimConfig {
    StructureSpec a_spec;
    StructureSpec b_spec;
    MeanProfile mean;
    int n = 40;
    int m = 200;
    GroupAssignment assignment = GroupAssignment::Contiguous;
    std::vector<Estimator> estimators = {Estimator::Ols, Estimator::Alg1};
    int replications = 1;
    std::uint64_t master_seed = 1;
    std::vector<double> penalty_multipliers = {1.0};
    PenaltyPolicy penalty_stage1 = PenaltyPolicy::plugin(0.5);
    PenaltyPolicy penalty_stage4 = PenaltyPolicy::plugin(0.25);
    ThresholdRule threshold = ThresholdRule::plugin();
    NoiseKind noise = NoiseKind::Gaussian;
    SolverConfig solver;
    int threads = 0;        // 0 keeps the ambient setting
    bool keep_curves = false;  // retain per-record scores/null stats for plots

    std::string to_json() const;
    static SimConfig from_json(const std::string& text);
};

struct SimRecord {
    int replication = 0;
    Estimator estimator = Estimator::Ols;
    double multiplier = 1.0;
    bool failed = false;
    std::string error;
    std::map<std::string, double> metrics;
    std::vector<double> scores;      // |gamma| or |t| per variable (keep_curves)
    std::vector<double> null_stats;  // statistics over the true null set (keep_curves)
};

struct SimReport {
    SimConfig config;
    std::vector<SimRecord> records;
    int failure_count = 0;

    struct Aggregate {
        double mean = 0.0;
        double sd = 0.0;
        int count = 0;
    };
    /// mean and sd per (estimator, multiplier, metric)
    std::map<std::string, Aggregate> aggregates() const;
    /// pooled values of one metric for an estimator/multiplier pair
    std::vector<double> collect(Estimator estimator, double multiplier,
                                const std::string& metric) const;
};

/// Runs the replication loop (OpenMP work pool, merged by index so the
/// report does not depend on the thread count).
SimReport run_simulation(const SimConfig& config);

}  // namespace mvgls
