#include "mvgls/eval.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mvgls/covmodel.hpp"
#include "mvgls/errors.hpp"
#include "mvgls/kernels.hpp"
#include "mvgls/rng.hpp"

namespace mvgls {

using nlohmann::json;

StructureSpec StructureSpec::ar1(int n, double rho) {
    StructureSpec s;
    s.kind = Kind::Ar1;
    s.n = n;
    s.rho = rho;
    return s;
}

StructureSpec StructureSpec::star_block(int n_blocks, int block_size, double rho) {
    StructureSpec s;
    s.kind = Kind::StarBlock;
    s.n = n_blocks * block_size;
    s.n_blocks = n_blocks;
    s.block_size = block_size;
    s.rho = rho;
    return s;
}

StructureSpec StructureSpec::erdos_renyi(int n, int edges, double w_min, double w_max,
                                         std::uint64_t seed) {
    StructureSpec s;
    s.kind = Kind::ErdosRenyi;
    s.n = n;
    s.edges = edges;
    s.w_min = w_min;
    s.w_max = w_max;
    s.seed = seed;
    return s;
}

CorrelationStructure StructureSpec::build() const {
    switch (kind) {
        case Kind::Ar1:
            return ar1_correlation(n, rho);
        case Kind::StarBlock:
            return star_block_correlation(n_blocks, block_size, rho);
        case Kind::ErdosRenyi:
            return erdos_renyi_correlation(n, edges, w_min, w_max, seed);
    }
    throw InvalidParameter("StructureSpec: unknown kind");
}

std::string StructureSpec::to_json() const {
    json j;
    switch (kind) {
        case Kind::Ar1:
            j = {{"kind", "ar1"}, {"n", n}, {"rho", rho}};
            break;
        case Kind::StarBlock:
            j = {{"kind", "star_block"},
                 {"n_blocks", n_blocks},
                 {"block_size", block_size},
                 {"rho", rho}};
            break;
        case Kind::ErdosRenyi:
            j = {{"kind", "erdos_renyi"}, {"n", n},     {"d", edges},
                 {"w_min", w_min},        {"w_max", w_max}, {"seed", seed}};
            break;
    }
    return j.dump();
}

StructureSpec StructureSpec::from_json(const std::string& text) {
    json j = json::parse(text);
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "ar1") {
        return ar1(j.at("n").get<int>(), j.at("rho").get<double>());
    }
    if (kind == "star_block") {
        return star_block(j.at("n_blocks").get<int>(), j.at("block_size").get<int>(),
                          j.value("rho", 0.5));
    }
    if (kind == "erdos_renyi") {
        return erdos_renyi(j.at("n").get<int>(), j.at("d").get<int>(),
                           j.value("w_min", 0.6), j.value("w_max", 0.8),
                           j.value("seed", std::uint64_t{0}));
    }
    throw InvalidParameter("StructureSpec: unknown kind '" + kind + "'");
}

namespace {

Vector average_ranks(const Vector& values) {
    const Eigen::Index m = values.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
    Vector ranks(m);
    Eigen::Index i = 0;
    while (i < m) {
        Eigen::Index j = i;
        while (j + 1 < m && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (Eigen::Index k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson(const Vector& a, const Vector& b) {
    const double ma = a.mean(), mb = b.mean();
    const Vector da = a.array() - ma, db = b.array() - mb;
    const double denom = std::sqrt(da.squaredNorm() * db.squaredNorm());
    if (!(denom > 0.0)) return 0.0;
    return da.dot(db) / denom;
}

}  // namespace

EstimationMetrics estimation_metrics(const Vector& gamma_hat, const Vector& gamma_true,
                                     const Matrix* b_inv_hat, const Matrix* b_inv_true) {
    if (gamma_hat.size() != gamma_true.size()) {
        throw InvalidParameter("estimation_metrics: gamma sizes differ");
    }
    EstimationMetrics out;
    const double m = static_cast<double>(gamma_hat.size());
    out.rmse = (gamma_hat - gamma_true).norm() / std::sqrt(m);
    if (b_inv_hat != nullptr && b_inv_true != nullptr) {
        out.rel_fro = (*b_inv_hat - *b_inv_true).norm() / b_inv_true->norm();
    }
    out.rank_corr = pearson(average_ranks(gamma_hat.cwiseAbs()),
                            average_ranks(gamma_true.cwiseAbs()));
    return out;
}

RocCurve roc_curve(const Vector& scores, const std::vector<int>& support) {
    const int m = static_cast<int>(scores.size());
    if (support.empty() || static_cast<int>(support.size()) >= m) {
        throw UndefinedRoc("roc_curve: support must be a nonempty proper subset");
    }
    std::vector<char> positive(static_cast<std::size_t>(m), 0);
    for (int idx : support) {
        if (idx < 0 || idx >= m) throw InvalidParameter("roc_curve: support index out of range");
        positive[static_cast<std::size_t>(idx)] = 1;
    }
    const int n_pos = static_cast<int>(support.size());
    const int n_neg = m - n_pos;

    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0});
    int tp = 0, fp = 0;
    std::size_t i = 0;
    double auc = 0.0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k) {
            (positive[static_cast<std::size_t>(order[k])] ? tp : fp)++;
        }
        const double fpr = static_cast<double>(fp) / n_neg;
        const double tpr = static_cast<double>(tp) / n_pos;
        const auto& prev = curve.points.back();
        auc += 0.5 * (fpr - prev.fpr) * (tpr + prev.tpr);
        curve.points.push_back({fpr, tpr});
        i = j + 1;
    }
    curve.auc = auc;
    return curve;
}

double design_effect_ratio(double estimated, double true_value) {
    if (!(true_value > 0.0)) {
        throw InvalidParameter("design_effect_ratio: true value must be positive");
    }
    return estimated / true_value;
}

namespace {

double sample_quantile(const Vector& sorted, double p) {
    const Eigen::Index m = sorted.size();
    const double h = (static_cast<double>(m) - 1.0) * p;
    const auto lo = static_cast<Eigen::Index>(std::floor(h));
    const auto hi = std::min(lo + 1, m - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

CalibrationTable calibration_quantiles(const Vector& t_stats) {
    const Eigen::Index m = t_stats.size();
    if (m < 10) throw TooFewValues("calibration_quantiles: need at least 10 statistics");
    CalibrationTable table;
    table.empirical = t_stats;
    std::sort(table.empirical.data(), table.empirical.data() + m);
    table.normal.resize(m);
    boost::math::normal norm;
    for (Eigen::Index i = 0; i < m; ++i) {
        table.normal[i] =
            boost::math::quantile(norm, (static_cast<double>(i) + 0.5) / static_cast<double>(m));
    }
    const double iqr_norm = 2.0 * boost::math::quantile(norm, 0.75);
    const double iqr_emp =
        sample_quantile(table.empirical, 0.75) - sample_quantile(table.empirical, 0.25);
    table.slope = iqr_emp / iqr_norm;
    return table;
}

StructureMetricsRow structure_metrics(const Matrix& b, const TwoGroupDesign& design) {
    const Eigen::Index n = b.rows();
    if (b.cols() != n || n != design.n) {
        throw InvalidParameter("structure_metrics: dimension mismatch");
    }
    Matrix corr = sample_correlation(b);
    StructureMetricsRow row;
    double sum_sq = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i != j) sum_sq += corr(i, j) * corr(i, j);
        }
    }
    row.rho_b_sq = sum_sq / (static_cast<double>(n) * static_cast<double>(n - 1));
    row.fro_over_trace = b.norm() / b.trace();

    Eigen::LLT<Matrix> llt(corr);
    if (llt.info() != Eigen::Success) {
        throw InvalidParameter("structure_metrics: correlation not positive definite");
    }
    Matrix corr_inv = llt.solve(Matrix::Identity(n, n));
    row.inv_corr_l1_off =
        corr_inv.cwiseAbs().sum() - corr_inv.diagonal().cwiseAbs().sum();

    Eigen::LLT<Matrix> llt_b(b);
    Matrix b_inv = llt_b.solve(Matrix::Identity(n, n));
    row.sd_gls = std::sqrt(design_effect(design, b_inv));
    row.sd_ratio = sd_ratio(b, design);
    return row;
}

std::string estimator_name(Estimator e) {
    switch (e) {
        case Estimator::Ols: return "ols";
        case Estimator::Alg1: return "alg1";
        case Estimator::Alg2: return "alg2";
        case Estimator::OracleGls: return "oracle_gls";
        case Estimator::OracleModsel: return "oracle_modsel";
        case Estimator::UnpairedT: return "unpaired_t";
        case Estimator::PairedT: return "paired_t";
    }
    return "unknown";
}

Estimator estimator_from_name(const std::string& name) {
    if (name == "ols") return Estimator::Ols;
    if (name == "alg1") return Estimator::Alg1;
    if (name == "alg2") return Estimator::Alg2;
    if (name == "oracle_gls") return Estimator::OracleGls;
    if (name == "oracle_modsel") return Estimator::OracleModsel;
    if (name == "unpaired_t") return Estimator::UnpairedT;
    if (name == "paired_t") return Estimator::PairedT;
    throw InvalidParameter("unknown estimator '" + name + "'");
}

Vector MeanProfile::build_gamma(int m) const {
    Vector gamma = Vector::Zero(m);
    if (kind == Kind::Sparse) {
        if (d0 > m) throw InvalidParameter("MeanProfile: d0 exceeds m");
        for (int j = 0; j < d0; ++j) {
            gamma[j] = (j < static_cast<int>(effects.size())) ? effects[static_cast<std::size_t>(j)]
                                                              : effect;
        }
    } else {
        // gamma_j = C exp(-rate j), 1-based, scaled so the largest is max_effect
        const double c = max_effect * std::exp(rate);
        for (int j = 0; j < m; ++j) gamma[j] = c * std::exp(-rate * (j + 1));
    }
    return gamma;
}

namespace {

json policy_to_json(const PenaltyPolicy& p) {
    json j;
    switch (p.kind) {
        case PenaltyKind::Plugin: j["kind"] = "plugin"; break;
        case PenaltyKind::Oracle: j["kind"] = "oracle"; break;
        case PenaltyKind::Explicit: j["kind"] = "explicit"; break;
    }
    j["multiplier"] = p.multiplier;
    if (p.explicit_value.has_value()) j["value"] = *p.explicit_value;
    j["subgaussian_k"] = p.subgaussian_k;
    return j;
}

PenaltyPolicy policy_from_json(const json& j) {
    PenaltyPolicy p;
    const std::string kind = j.value("kind", "plugin");
    if (kind == "plugin") {
        p = PenaltyPolicy::plugin(j.value("multiplier", 0.5));
    } else if (kind == "oracle") {
        p = PenaltyPolicy::oracle(j.value("multiplier", 0.5), j.value("subgaussian_k", 1.0));
    } else if (kind == "explicit") {
        p = PenaltyPolicy::explicit_level(j.at("value").get<double>());
    } else {
        throw InvalidParameter("unknown penalty kind '" + kind + "'");
    }
    return p;
}

}  // namespace

std::string SimConfig::to_json() const {
    json j;
    j["a"] = json::parse(a_spec.to_json());
    j["b"] = json::parse(b_spec.to_json());
    if (mean.kind == MeanProfile::Kind::Sparse) {
        j["mean"] = {{"kind", "sparse"}, {"d0", mean.d0}, {"effect", mean.effect}};
        if (!mean.effects.empty()) j["mean"]["effects"] = mean.effects;
    } else {
        j["mean"] = {{"kind", "decay_exp"},
                     {"max_effect", mean.max_effect},
                     {"rate", mean.rate}};
    }
    j["n"] = n;
    j["m"] = m;
    j["assignment"] =
        assignment == GroupAssignment::Contiguous ? "contiguous" : "random_balanced";
    std::vector<std::string> names;
    names.reserve(estimators.size());
    for (Estimator e : estimators) names.push_back(estimator_name(e));
    j["estimators"] = names;
    j["replications"] = replications;
    j["master_seed"] = master_seed;
    j["penalty_multipliers"] = penalty_multipliers;
    j["penalty_stage1"] = policy_to_json(penalty_stage1);
    j["penalty_stage4"] = policy_to_json(penalty_stage4);
    if (threshold.mode == ThresholdRule::Mode::Plugin) {
        j["threshold"] = {{"mode", "plugin"}, {"multiplier", threshold.multiplier}};
    } else {
        j["threshold"] = {{"mode", "top_k"}, {"k", threshold.top_k}};
    }
    j["noise"] = noise == NoiseKind::Gaussian
                     ? "gaussian"
                     : (noise == NoiseKind::Rademacher ? "rademacher" : "uniform");
    j["solver"] = {{"tol", solver.tol}, {"max_iter", solver.max_iter}};
    j["threads"] = threads;
    j["keep_curves"] = keep_curves;
    return j.dump(2);
}

SimConfig SimConfig::from_json(const std::string& text) {
    json j = json::parse(text);
    SimConfig c;
    c.a_spec = StructureSpec::from_json(j.at("a").dump());
    c.b_spec = StructureSpec::from_json(j.at("b").dump());
    const json& jm = j.at("mean");
    if (jm.at("kind") == "sparse") {
        c.mean.kind = MeanProfile::Kind::Sparse;
        c.mean.d0 = jm.value("d0", 10);
        c.mean.effect = jm.value("effect", 0.3);
        if (jm.contains("effects")) c.mean.effects = jm["effects"].get<std::vector<double>>();
    } else if (jm.at("kind") == "decay_exp") {
        c.mean.kind = MeanProfile::Kind::DecayExp;
        c.mean.max_effect = jm.value("max_effect", 5.0);
        c.mean.rate = jm.value("rate", 3.0 / 2000.0);
    } else {
        throw InvalidParameter("unknown mean profile kind");
    }
    c.n = j.at("n").get<int>();
    c.m = j.at("m").get<int>();
    const std::string assign = j.value("assignment", "contiguous");
    if (assign == "contiguous") {
        c.assignment = GroupAssignment::Contiguous;
    } else if (assign == "random_balanced") {
        c.assignment = GroupAssignment::RandomBalanced;
    } else {
        throw InvalidParameter("unknown assignment '" + assign + "'");
    }
    c.estimators.clear();
    for (const auto& name : j.at("estimators")) {
        c.estimators.push_back(estimator_from_name(name.get<std::string>()));
    }
    if (c.estimators.empty()) throw InvalidParameter("estimator list must be nonempty");
    c.replications = j.at("replications").get<int>();
    if (c.replications < 1) throw InvalidParameter("replications must be >= 1");
    c.master_seed = j.value("master_seed", std::uint64_t{1});
    c.penalty_multipliers =
        j.value("penalty_multipliers", std::vector<double>{1.0});
    if (c.penalty_multipliers.empty()) c.penalty_multipliers = {1.0};
    if (j.contains("penalty_stage1")) c.penalty_stage1 = policy_from_json(j["penalty_stage1"]);
    if (j.contains("penalty_stage4")) c.penalty_stage4 = policy_from_json(j["penalty_stage4"]);
    if (j.contains("threshold")) {
        const json& jt = j["threshold"];
        if (jt.at("mode") == "plugin") {
            c.threshold = ThresholdRule::plugin(jt.value("multiplier", 1.0));
        } else if (jt.at("mode") == "top_k") {
            c.threshold = ThresholdRule::top(jt.at("k").get<int>());
        } else {
            throw InvalidParameter("unknown threshold mode");
        }
    }
    const std::string noise = j.value("noise", "gaussian");
    if (noise == "gaussian") {
        c.noise = NoiseKind::Gaussian;
    } else if (noise == "rademacher") {
        c.noise = NoiseKind::Rademacher;
    } else if (noise == "uniform") {
        c.noise = NoiseKind::Uniform;
    } else {
        throw InvalidParameter("unknown noise kind '" + noise + "'");
    }
    if (j.contains("solver")) {
        c.solver.tol = j["solver"].value("tol", 1e-6);
        c.solver.max_iter = j["solver"].value("max_iter", 500);
    }
    c.threads = j.value("threads", 0);
    c.keep_curves = j.value("keep_curves", false);
    return c;
}

namespace {

std::string aggregate_key(Estimator e, double multiplier, const std::string& metric) {
    std::ostringstream os;
    os << estimator_name(e) << "|" << multiplier << "|" << metric;
    return os.str();
}

}  // namespace

std::map<std::string, SimReport::Aggregate> SimReport::aggregates() const {
    std::map<std::string, Aggregate> sums;
    std::map<std::string, std::vector<double>> values;
    for (const auto& rec : records) {
        if (rec.failed) continue;
        for (const auto& [metric, value] : rec.metrics) {
            values[aggregate_key(rec.estimator, rec.multiplier, metric)].push_back(value);
        }
    }
    for (auto& [key, vals] : values) {
        Aggregate agg;
        agg.count = static_cast<int>(vals.size());
        const double mean =
            std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
        double ss = 0.0;
        for (double v : vals) ss += (v - mean) * (v - mean);
        agg.mean = mean;
        agg.sd = vals.size() > 1 ? std::sqrt(ss / static_cast<double>(vals.size() - 1)) : 0.0;
        sums[key] = agg;
    }
    return sums;
}

std::vector<double> SimReport::collect(Estimator estimator, double multiplier,
                                       const std::string& metric) const {
    std::vector<double> out;
    for (const auto& rec : records) {
        if (rec.failed || rec.estimator != estimator || rec.multiplier != multiplier) continue;
        auto it = rec.metrics.find(metric);
        if (it != rec.metrics.end()) out.push_back(it->second);
    }
    return out;
}

namespace {

struct SimContext {
    const SimConfig& config;
    KroneckerModel model;
    Matrix a_root;
    Matrix b_root;
    Matrix b_inv_true;
    Vector gamma_true;
    Vector mu_true;
    std::vector<int> support;
    std::vector<int> null_set;
};

TwoGroupDesign make_design(const SimContext& ctx, int rep) {
    const int n = ctx.config.n;
    if (ctx.config.assignment == GroupAssignment::Contiguous) {
        return TwoGroupDesign::contiguous(n / 2, n - n / 2);
    }
    // balanced random assignment: shuffle a fixed half/half label vector
    std::vector<int> labels(static_cast<std::size_t>(n), 2);
    std::fill(labels.begin(), labels.begin() + n / 2, 1);
    Rng rng(derive_seed(ctx.config.master_seed, 0x5A5A0000ULL + static_cast<std::uint64_t>(rep)));
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(i + 1)));
        std::swap(labels[static_cast<std::size_t>(i)], labels[static_cast<std::size_t>(j)]);
    }
    return TwoGroupDesign::from_labels(labels);
}

DataMatrix draw_data(const SimContext& ctx, const TwoGroupDesign& design, int rep) {
    const int n = ctx.config.n;
    const int m = ctx.config.m;
    Rng rng(derive_seed(ctx.config.master_seed, 0xDA7A0000ULL + static_cast<std::uint64_t>(rep)));
    Matrix z(n, m);
    const double sqrt3 = std::sqrt(3.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            switch (ctx.config.noise) {
                case NoiseKind::Gaussian: z(i, j) = rng.normal(); break;
                case NoiseKind::Rademacher: z(i, j) = rng.rademacher(); break;
                case NoiseKind::Uniform: z(i, j) = rng.uniform(-sqrt3, sqrt3); break;
            }
        }
    }
    Matrix x = Vector::Ones(n) * ctx.mu_true.transpose() +
               0.5 * design.delta_n() * ctx.gamma_true.transpose() +
               ctx.b_root * z * ctx.a_root;
    return DataMatrix::create(std::move(x), design.groups);
}

void record_scores(SimRecord& rec, const SimContext& ctx, const Vector& magnitudes) {
    if (!ctx.config.keep_curves) return;
    rec.scores.assign(magnitudes.data(), magnitudes.data() + magnitudes.size());
}

void add_gamma_metrics(SimRecord& rec, const SimContext& ctx, const Vector& gamma_hat,
                       const Matrix* b_inv_hat) {
    const EstimationMetrics em = estimation_metrics(
        gamma_hat, ctx.gamma_true, b_inv_hat, b_inv_hat ? &ctx.b_inv_true : nullptr);
    rec.metrics["rmse"] = em.rmse;
    rec.metrics["rank_corr"] = em.rank_corr;
    if (b_inv_hat != nullptr) rec.metrics["rel_fro"] = em.rel_fro;
    if (!ctx.support.empty() &&
        static_cast<int>(ctx.support.size()) < ctx.config.m) {
        rec.metrics["auc"] = roc_curve(gamma_hat.cwiseAbs(), ctx.support).auc;
    }
    record_scores(rec, ctx, gamma_hat.cwiseAbs());
}

void add_null_slope(SimRecord& rec, const SimContext& ctx, const Vector& t_stats) {
    if (static_cast<int>(ctx.null_set.size()) < 10) return;
    Vector null_stats(static_cast<Eigen::Index>(ctx.null_set.size()));
    for (std::size_t k = 0; k < ctx.null_set.size(); ++k) {
        null_stats[static_cast<Eigen::Index>(k)] = t_stats[ctx.null_set[k]];
    }
    rec.metrics["slope_null"] = calibration_quantiles(null_stats).slope;
    if (ctx.config.keep_curves) {
        rec.null_stats.assign(null_stats.data(), null_stats.data() + null_stats.size());
    }
}

void add_design_effect(SimRecord& rec, const TwoGroupDesign& design,
                       const SimContext& ctx, const Matrix& b_inv_hat) {
    const double de_est = design_effect(design, b_inv_hat);
    const double de_true = design_effect(design, ctx.b_inv_true);
    rec.metrics["de_est"] = de_est;
    rec.metrics["de_true"] = de_true;
    rec.metrics["de_ratio"] = design_effect_ratio(de_est, de_true);
}

void run_estimator(SimRecord& rec, const SimContext& ctx, const DataMatrix& x,
                   const TwoGroupDesign& design, double multiplier) {
    const SimConfig& cfg = ctx.config;
    PenaltyContext pen_ctx;
    pen_ctx.n = cfg.n;
    pen_ctx.m = cfg.m;
    pen_ctx.n_min = design.n_min;
    pen_ctx.a_true = &ctx.model.a;
    pen_ctx.b_true = &ctx.model.b;

    PenaltyPolicy stage1 = cfg.penalty_stage1;
    stage1.multiplier *= multiplier;
    PenaltyPolicy stage4 = cfg.penalty_stage4;
    stage4.multiplier *= multiplier;

    switch (rec.estimator) {
        case Estimator::Ols: {
            const OlsFit fit = ols_fit(x, design);
            add_gamma_metrics(rec, ctx, fit.gamma_hat, nullptr);
            break;
        }
        case Estimator::Alg1: {
            const Alg1Result res =
                algorithm1(x, design, PenaltyPair{stage1, stage1}, false, cfg.solver, &pen_ctx);
            add_gamma_metrics(rec, ctx, res.gls.gamma_hat, &res.fit.b_inv);
            add_design_effect(rec, design, ctx, res.fit.b_inv);
            add_null_slope(rec, ctx, res.gls.t_stats);
            break;
        }
        case Estimator::Alg2: {
            Alg2Config c2;
            c2.threshold = cfg.threshold;
            c2.penalty_stage1 = stage1;
            c2.penalty_stage4 = stage4;
            c2.solver = cfg.solver;
            const Alg2Result res = algorithm2(x, design, c2, &pen_ctx);
            add_gamma_metrics(rec, ctx, res.gls.gamma_hat, &res.fit.b_inv);
            add_design_effect(rec, design, ctx, res.fit.b_inv);
            add_null_slope(rec, ctx, res.gls.t_stats);
            rec.metrics["j0_size"] = static_cast<double>(res.selection.j0.size());
            break;
        }
        case Estimator::OracleGls: {
            const GlsResult res = gls_fit(x, design, ctx.b_inv_true);
            add_gamma_metrics(rec, ctx, res.gamma_hat, nullptr);
            add_null_slope(rec, ctx, res.t_stats);
            break;
        }
        case Estimator::OracleModsel: {
            CenteredData cen = center(x, design, CenteringScheme::model_selection(ctx.support));
            GeminiFit fit;
            fit.s_b = gram_rows(cen.x_cen) / static_cast<double>(x.m);
            fit.gamma_hat_b = sample_correlation(fit.s_b);
            PenaltyContext pc = pen_ctx;
            const double lambda = penalty_value(stage4, pc, PenaltySide::Sample);
            PenalizedPrecisionFit b_fit = glasso_fit(fit.gamma_hat_b, lambda, cfg.solver);
            fit = rescale_inverses(std::move(fit), b_fit, std::nullopt, cen.x_cen);
            const GlsResult res = gls_fit(x, design, fit.b_inv);
            add_gamma_metrics(rec, ctx, res.gamma_hat, &fit.b_inv);
            add_design_effect(rec, design, ctx, fit.b_inv);
            add_null_slope(rec, ctx, res.t_stats);
            break;
        }
        case Estimator::UnpairedT: {
            const TTestResult res = unpaired_t(x, design);
            if (!ctx.support.empty() &&
                static_cast<int>(ctx.support.size()) < cfg.m) {
                rec.metrics["auc"] = roc_curve(res.t_stats.cwiseAbs(), ctx.support).auc;
            }
            add_null_slope(rec, ctx, res.t_stats);
            record_scores(rec, ctx, res.t_stats.cwiseAbs());
            break;
        }
        case Estimator::PairedT: {
            const TTestResult res = paired_t(x, half_split_pairing(x.n));
            if (!ctx.support.empty() &&
                static_cast<int>(ctx.support.size()) < cfg.m) {
                rec.metrics["auc"] = roc_curve(res.t_stats.cwiseAbs(), ctx.support).auc;
            }
            add_null_slope(rec, ctx, res.t_stats);
            record_scores(rec, ctx, res.t_stats.cwiseAbs());
            break;
        }
    }
}

}  // namespace

SimReport run_simulation(const SimConfig& config) {
    if (config.replications < 1 || config.estimators.empty()) {
        throw InvalidParameter("run_simulation: bad config");
    }
    SimContext ctx{config, {}, {}, {}, {}, {}, {}, {}, {}};
    const CorrelationStructure a = config.a_spec.build();
    const CorrelationStructure b = config.b_spec.build();
    if (a.dim != config.m || b.dim != config.n) {
        throw InvalidParameter("run_simulation: structure dimensions disagree with n, m");
    }
    ctx.model = normalize_kronecker(a.values, b.values);
    ctx.a_root = symmetric_sqrt(ctx.model.a);
    ctx.b_root = symmetric_sqrt(ctx.model.b);
    ctx.b_inv_true = ctx.model.b.llt().solve(Matrix::Identity(config.n, config.n));
    ctx.gamma_true = config.mean.build_gamma(config.m);
    ctx.mu_true = Vector::Zero(config.m);
    for (int j = 0; j < config.m; ++j) {
        (ctx.gamma_true[j] != 0.0 ? ctx.support : ctx.null_set).push_back(j);
    }

    const int n_est = static_cast<int>(config.estimators.size());
    const int n_grid = static_cast<int>(config.penalty_multipliers.size());
    SimReport report;
    report.config = config;
    report.records.resize(static_cast<std::size_t>(config.replications) *
                          static_cast<std::size_t>(n_est) * static_cast<std::size_t>(n_grid));

    if (config.threads > 0) set_threads(config.threads);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int rep = 0; rep < config.replications; ++rep) {
        const TwoGroupDesign design = make_design(ctx, rep);
        const DataMatrix x = draw_data(ctx, design, rep);
        for (int e = 0; e < n_est; ++e) {
            const Estimator est = config.estimators[static_cast<std::size_t>(e)];
            // penalty-free estimators do not depend on the grid point;
            // compute once and copy
            const bool penalty_free = est == Estimator::Ols || est == Estimator::OracleGls ||
                                      est == Estimator::UnpairedT || est == Estimator::PairedT;
            for (int g = 0; g < n_grid; ++g) {
                const std::size_t slot =
                    (static_cast<std::size_t>(rep) * static_cast<std::size_t>(n_est) +
                     static_cast<std::size_t>(e)) *
                        static_cast<std::size_t>(n_grid) +
                    static_cast<std::size_t>(g);
                SimRecord& rec = report.records[slot];
                rec.replication = rep;
                rec.estimator = est;
                rec.multiplier = config.penalty_multipliers[static_cast<std::size_t>(g)];
                if (penalty_free && g > 0) {
                    const std::size_t first = slot - static_cast<std::size_t>(g);
                    rec.metrics = report.records[first].metrics;
                    rec.failed = report.records[first].failed;
                    rec.error = report.records[first].error;
                    rec.scores = report.records[first].scores;
                    rec.null_stats = report.records[first].null_stats;
                    continue;
                }
                try {
                    run_estimator(rec, ctx, x, design, rec.multiplier);
                } catch (const Error& err) {
                    rec.failed = true;
                    rec.error = err.what();
                }
            }
        }
    }

    for (const auto& rec : report.records) {
        if (rec.failed) ++report.failure_count;
    }
    return report;
}

}  // namespace mvgls
