// Command-line front end: simulate | fit | metrics | stability.
// Exit codes: 0 success, 2 configuration/input error, 3 numeric failure.

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "mvgls/covmodel.hpp"
#include "mvgls/errors.hpp"
#include "mvgls/eval.hpp"
#include "mvgls/gemini.hpp"
#include "mvgls/gls.hpp"
#include "mvgls/kernels.hpp"
#include "mvgls/matrix_io.hpp"
#include "mvgls/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mvgls;

namespace {

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(const std::string& text) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(text)));
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << text;
}

void write_provenance(const fs::path& dir, const std::string& command, const json& config,
                      const json& realized) {
    json p;
    p["command"] = command;
    p["config"] = config;
    p["config_hash"] = hash_hex(config.dump());
    p["realized"] = realized;
    write_text(dir / "provenance.json", p.dump(2) + "\n");
}

struct InputFlags {
    std::string input;
    std::string group_column;
    std::string group_file;
    bool transpose = false;
    int top_variance = 0;
    bool unit_variance = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--input", input, "data CSV (samples x variables, header row)")
            ->required();
        cmd->add_option("--groups-col", group_column, "label column name inside the CSV");
        cmd->add_option("--groups-file", group_file, "side file with one label per line");
        cmd->add_flag("--transpose", transpose, "input holds variables as rows");
        cmd->add_option("--top-variance", top_variance, "keep only the k most variable columns");
        cmd->add_flag("--unit-variance", unit_variance, "rescale columns to unit variance");
    }

    LoadedData load() const {
        LoadOptions opt;
        if (!group_column.empty()) opt.group_column = group_column;
        if (!group_file.empty()) opt.group_file = group_file;
        opt.transpose = transpose;
        if (top_variance > 0) opt.top_variance = top_variance;
        opt.unit_variance = unit_variance;
        return load_matrix_csv(input, opt);
    }

    json to_json() const {
        return {{"input", input},        {"groups_col", group_column},
                {"groups_file", group_file}, {"transpose", transpose},
                {"top_variance", top_variance}, {"unit_variance", unit_variance}};
    }
};

fs::path prepare_out(const std::string& out) {
    fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
    fs::create_directories(dir);
    return dir;
}

// ---- simulate ------------------------------------------------------------

int cmd_simulate(const std::string& config_path, const std::string& out,
                 std::optional<std::uint64_t> seed, int threads) {
    std::ifstream in(config_path);
    if (!in) throw ParseError("cannot open '" + config_path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    SimConfig config = SimConfig::from_json(text);
    if (seed.has_value()) config.master_seed = *seed;
    if (threads > 0) config.threads = threads;
    config.keep_curves = true;

    const SimReport report = run_simulation(config);
    const fs::path dir = prepare_out(out);

    {
        std::ofstream records(dir / "records.csv");
        records << "rep,estimator,multiplier,metric,value\n";
        for (const auto& rec : report.records) {
            if (rec.failed) continue;
            for (const auto& [metric, value] : rec.metrics) {
                records << rec.replication << ',' << estimator_name(rec.estimator) << ','
                        << format_double(rec.multiplier) << ',' << metric << ','
                        << format_double(value) << '\n';
            }
        }
    }
    {
        std::ofstream failures(dir / "failures.csv");
        failures << "rep,estimator,multiplier,error\n";
        for (const auto& rec : report.records) {
            if (!rec.failed) continue;
            std::string msg = rec.error;
            for (auto& c : msg) {
                if (c == ',' || c == '\n') c = ';';
            }
            failures << rec.replication << ',' << estimator_name(rec.estimator) << ','
                     << format_double(rec.multiplier) << ',' << msg << '\n';
        }
    }

    // pooled plot-ready artifacts
    const Vector gamma_true = config.mean.build_gamma(config.m);
    std::vector<int> support;
    for (int j = 0; j < config.m; ++j) {
        if (gamma_true[j] != 0.0) support.push_back(j);
    }
    {
        std::ofstream roc(dir / "roc_points.csv");
        roc << "estimator,multiplier,fpr,tpr\n";
        if (!support.empty() && static_cast<int>(support.size()) < config.m) {
            for (Estimator est : config.estimators) {
                for (double mult : config.penalty_multipliers) {
                    std::vector<double> pooled;
                    std::vector<int> pooled_support;
                    int block = 0;
                    for (const auto& rec : report.records) {
                        if (rec.failed || rec.estimator != est || rec.multiplier != mult ||
                            rec.scores.empty()) {
                            continue;
                        }
                        for (int j : support) pooled_support.push_back(block * config.m + j);
                        pooled.insert(pooled.end(), rec.scores.begin(), rec.scores.end());
                        ++block;
                    }
                    if (pooled.empty()) continue;
                    Vector scores = Eigen::Map<Vector>(pooled.data(),
                                                       static_cast<Eigen::Index>(pooled.size()));
                    const RocCurve curve = roc_curve(scores, pooled_support);
                    for (const auto& pt : curve.points) {
                        roc << estimator_name(est) << ',' << format_double(mult) << ','
                            << format_double(pt.fpr) << ',' << format_double(pt.tpr) << '\n';
                    }
                }
            }
        }
    }
    {
        std::ofstream qq(dir / "quantiles.csv");
        qq << "estimator,multiplier,normal_quantile,empirical_quantile\n";
        for (Estimator est : config.estimators) {
            for (double mult : config.penalty_multipliers) {
                std::vector<double> pooled;
                for (const auto& rec : report.records) {
                    if (rec.failed || rec.estimator != est || rec.multiplier != mult) continue;
                    pooled.insert(pooled.end(), rec.null_stats.begin(), rec.null_stats.end());
                }
                if (static_cast<int>(pooled.size()) < 10) continue;
                Vector stats = Eigen::Map<Vector>(pooled.data(),
                                                  static_cast<Eigen::Index>(pooled.size()));
                const CalibrationTable table = calibration_quantiles(stats);
                for (Eigen::Index i = 0; i < table.empirical.size(); ++i) {
                    qq << estimator_name(est) << ',' << format_double(mult) << ','
                       << format_double(table.normal[i]) << ','
                       << format_double(table.empirical[i]) << '\n';
                }
            }
        }
    }

    json summary;
    summary["failure_count"] = report.failure_count;
    summary["records"] = report.records.size();
    json aggs = json::object();
    for (const auto& [key, agg] : report.aggregates()) {
        aggs[key] = {{"mean", agg.mean}, {"sd", agg.sd}, {"count", agg.count}};
    }
    summary["aggregates"] = aggs;
    write_text(dir / "summary.json", summary.dump(2) + "\n");

    write_provenance(dir, "simulate", json::parse(config.to_json()),
                     {{"master_seed", config.master_seed}});
    std::cout << "simulate: " << report.records.size() << " records, "
              << report.failure_count << " failures -> " << dir.string() << "\n";
    return 0;
}

// ---- fit -----------------------------------------------------------------

int cmd_fit(const InputFlags& input, const std::string& algorithm, double stage1_mult,
            double stage4_mult, double explicit_lambda1, double explicit_lambda4,
            double threshold_multiplier, int top_k, bool fit_a, const std::string& out) {
    const LoadedData loaded = input.load();
    const auto design = TwoGroupDesign::from_labels(loaded.data.groups);

    auto stage1 = explicit_lambda1 > 0.0 ? PenaltyPolicy::explicit_level(explicit_lambda1)
                                         : PenaltyPolicy::plugin(stage1_mult);
    auto stage4 = explicit_lambda4 > 0.0 ? PenaltyPolicy::explicit_level(explicit_lambda4)
                                         : PenaltyPolicy::plugin(stage4_mult);

    Vector gamma_hat;
    json realized;
    std::optional<GlsResult> gls;
    std::optional<GeminiFit> fit;
    std::optional<SelectionResult> selection;

    if (algorithm == "ols") {
        const OlsFit ols = ols_fit(loaded.data, design);
        gamma_hat = ols.gamma_hat;
    } else if (algorithm == "alg1") {
        auto res = algorithm1(loaded.data, design, PenaltyPair{stage1, stage1}, fit_a);
        gamma_hat = res.gls.gamma_hat;
        realized["lambda_b_side"] = res.fit.lambda_a;
        gls = std::move(res.gls);
        fit = std::move(res.fit);
    } else if (algorithm == "alg2") {
        Alg2Config config;
        config.threshold = top_k > 0 ? ThresholdRule::top(top_k)
                                     : ThresholdRule::plugin(threshold_multiplier);
        config.penalty_stage1 = stage1;
        config.penalty_stage4 = stage4;
        config.fit_a = fit_a;
        auto res = algorithm2(loaded.data, design, config);
        gamma_hat = res.gls.gamma_hat;
        realized["lambda_b_side"] = res.fit.lambda_a;
        realized["tau"] = res.selection.tau;
        realized["group_centered"] = res.selection.j0.size();
        gls = std::move(res.gls);
        fit = std::move(res.fit);
        selection = std::move(res.selection);
    } else {
        throw InvalidParameter("unknown algorithm '" + algorithm + "'");
    }

    const fs::path dir = prepare_out(out);
    {
        std::ofstream results(dir / "results.csv");
        results << "variable,gamma_hat";
        if (gls.has_value()) results << ",t,p,fdr";
        results << '\n';
        for (int j = 0; j < loaded.data.m; ++j) {
            results << loaded.variable_names[static_cast<std::size_t>(j)] << ','
                    << format_double(gamma_hat[j]);
            if (gls.has_value()) {
                results << ',' << format_double(gls->t_stats[j]) << ','
                        << format_double(gls->p_values[j]) << ','
                        << format_double(gls->fdr_adjusted[j]);
            }
            results << '\n';
        }
    }
    if (fit.has_value()) {
        write_matrix_csv((dir / "b_inv.csv").string(), fit->b_inv);
        if (fit->a_inv.has_value()) {
            write_matrix_csv((dir / "a_inv.csv").string(), *fit->a_inv);
        }
    }

    json summary;
    summary["algorithm"] = algorithm;
    summary["n"] = loaded.data.n;
    summary["m"] = loaded.data.m;
    if (gls.has_value()) {
        summary["design_effect"] = gls->design_effect;
        summary["fdr_rejections_0.1"] = bh_rejections(gls->fdr_adjusted, 0.1);
    }
    if (selection.has_value()) {
        summary["group_centered"] = selection->j0;
        summary["tau"] = selection->tau;
    }
    write_text(dir / "fit.json", summary.dump(2) + "\n");

    json config = input.to_json();
    config["algorithm"] = algorithm;
    config["penalty_stage1"] = stage1_mult;
    config["penalty_stage4"] = stage4_mult;
    config["explicit_lambda1"] = explicit_lambda1;
    config["explicit_lambda4"] = explicit_lambda4;
    config["threshold_multiplier"] = threshold_multiplier;
    config["top_k"] = top_k;
    config["fit_a"] = fit_a;
    write_provenance(dir, "fit", config, realized);
    std::cout << "fit: " << algorithm << " on " << loaded.data.n << " x " << loaded.data.m
              << " -> " << dir.string() << "\n";
    return 0;
}

// ---- metrics ---------------------------------------------------------

int cmd_metrics(const std::string& structure, int n, double rho, int blocks, int block_size,
                int edges, double w_min, double w_max, std::uint64_t structure_seed,
                const std::string& out) {
    StructureSpec spec;
    if (structure == "ar1") {
        spec = StructureSpec::ar1(n, rho);
    } else if (structure == "star_block") {
        spec = StructureSpec::star_block(blocks, block_size, rho);
    } else if (structure == "erdos_renyi") {
        spec = StructureSpec::erdos_renyi(n, edges, w_min, w_max, structure_seed);
    } else {
        throw InvalidParameter("unknown structure '" + structure + "'");
    }
    const CorrelationStructure b = spec.build();
    const auto design = TwoGroupDesign::contiguous(b.dim / 2, b.dim - b.dim / 2);
    const StructureMetricsRow row = structure_metrics(b.values, design);

    std::string csv = "structure,n,rho_b_sq,fro_over_trace,inv_corr_l1_off,sd_gls,sd_ratio\n";
    csv += structure + "," + std::to_string(b.dim) + "," + format_double(row.rho_b_sq) + "," +
           format_double(row.fro_over_trace) + "," + format_double(row.inv_corr_l1_off) + "," +
           format_double(row.sd_gls) + "," + format_double(row.sd_ratio) + "\n";
    std::cout << csv;

    if (!out.empty()) {
        const fs::path dir = prepare_out(out);
        write_text(dir / "metrics.csv", csv);
        write_provenance(dir, "metrics", json::parse(spec.to_json()), json::object());
    }
    return 0;
}

// ---- stability -------------------------------------------------------

int cmd_stability(const InputFlags& input, const std::string& schedule_str,
                  const std::string& lambdas_str, int overlap_k, double fdr_level,
                  double plugin_multiplier, const std::string& out) {
    const LoadedData loaded = input.load();
    const auto design = TwoGroupDesign::from_labels(loaded.data.groups);

    std::vector<int> schedule;
    for (const auto& tok : CLI::detail::split(schedule_str, ',')) {
        schedule.push_back(std::stoi(tok));
    }
    std::vector<double> lambdas;
    if (!lambdas_str.empty()) {
        for (const auto& tok : CLI::detail::split(lambdas_str, ',')) {
            lambdas.push_back(std::stod(tok));
        }
    }

    const fs::path dir = prepare_out(out);
    json realized;
    overlap_k = std::min(overlap_k, loaded.data.m);

    // reference run: plugin penalty, emits overlap + rankings
    const PenaltyPolicy reference = PenaltyPolicy::plugin(plugin_multiplier);
    const StabilityReport report = stability_iteration(loaded.data, design, schedule,
                                                       reference, SolverConfig{}, overlap_k,
                                                       fdr_level);
    realized["lambda_reference"] = report.lambda;
    {
        std::ofstream overlap(dir / "overlap.csv");
        overlap << "n_group";
        for (int c : schedule) overlap << ',' << c;
        overlap << '\n';
        for (std::size_t a = 0; a < report.iterations.size(); ++a) {
            overlap << schedule[a];
            for (std::size_t b = 0; b < report.iterations.size(); ++b) {
                overlap << ',' << report.overlap(static_cast<int>(a), static_cast<int>(b));
            }
            overlap << '\n';
        }
    }
    {
        std::ofstream rankings(dir / "rankings.csv");
        rankings << "n_group,rank,variable\n";
        for (std::size_t i = 0; i < report.iterations.size(); ++i) {
            const auto& iter = report.iterations[i];
            for (std::size_t r = 0; r < iter.top_ranked.size(); ++r) {
                rankings << iter.n_group_centered << ',' << (r + 1) << ','
                         << loaded.variable_names[static_cast<std::size_t>(iter.top_ranked[r])]
                         << '\n';
            }
        }
    }

    // rejection counts per lambda (Table-3 layout: rows lambda, cols schedule)
    {
        std::ofstream rej(dir / "rejections.csv");
        rej << "lambda";
        for (int c : schedule) rej << ',' << c;
        rej << '\n';
        if (lambdas.empty()) {
            rej << format_double(report.lambda);
            for (const auto& iter : report.iterations) rej << ',' << iter.rejections;
            rej << '\n';
        } else {
            for (double lambda : lambdas) {
                const StabilityReport r =
                    stability_iteration(loaded.data, design, schedule,
                                        PenaltyPolicy::explicit_level(lambda), SolverConfig{},
                                        overlap_k, fdr_level);
                rej << format_double(lambda);
                for (const auto& iter : r.iterations) rej << ',' << iter.rejections;
                rej << '\n';
            }
        }
    }

    json config = input.to_json();
    config["schedule"] = schedule;
    config["lambdas"] = lambdas;
    config["overlap_k"] = overlap_k;
    config["fdr"] = fdr_level;
    config["plugin_multiplier"] = plugin_multiplier;
    write_provenance(dir, "stability", config, realized);
    std::cout << "stability: " << schedule.size() << " iterations -> " << dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"joint mean and covariance estimation for matrix-variate two-group data"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    app.add_option("--out", out, "output directory")->capture_default_str();
    app.add_option("--seed", seed, "master seed")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_option("--threads", threads, "worker threads (0 = hardware default)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "run a Monte Carlo study from a JSON config");
    std::string sim_config;
    sim->add_option("--config", sim_config, "SimConfig JSON file")->required();

    // fit
    auto* fit = app.add_subcommand("fit", "fit one data matrix");
    InputFlags fit_input;
    fit_input.attach(fit);
    std::string algorithm = "alg2";
    double stage1_mult = 0.5, stage4_mult = 0.25;
    double explicit_lambda1 = 0.0, explicit_lambda4 = 0.0;
    double threshold_multiplier = 1.0;
    int top_k = 0;
    bool fit_a = false;
    fit->add_option("--algorithm", algorithm, "ols | alg1 | alg2")->capture_default_str();
    fit->add_option("--penalty-stage1", stage1_mult, "plugin multiplier, stage 1");
    fit->add_option("--penalty-stage4", stage4_mult, "plugin multiplier, stage 4");
    fit->add_option("--lambda1", explicit_lambda1, "explicit stage-1 penalty (overrides plugin)");
    fit->add_option("--lambda4", explicit_lambda4, "explicit stage-4 penalty (overrides plugin)");
    fit->add_option("--threshold-multiplier", threshold_multiplier,
                    "plug-in threshold multiplier in (0,1]");
    fit->add_option("--top-k", top_k, "select a fixed count instead of thresholding");
    fit->add_flag("--fit-a", fit_a, "also estimate the variable-wise inverse");

    // metrics
    auto* metrics = app.add_subcommand("metrics", "structural summary of a covariance spec");
    std::string structure = "ar1";
    int n = 80, blocks = 2, block_size = 20, edges = 0;
    double rho = 0.5, w_min = 0.6, w_max = 0.8;
    std::uint64_t structure_seed = 1;
    metrics->add_option("--structure", structure, "ar1 | star_block | erdos_renyi")
        ->capture_default_str();
    metrics->add_option("--n", n, "dimension (ar1, erdos_renyi)");
    metrics->add_option("--rho", rho, "correlation parameter");
    metrics->add_option("--blocks", blocks, "star_block: number of blocks");
    metrics->add_option("--block-size", block_size, "star_block: block size");
    metrics->add_option("--edges", edges, "erdos_renyi: edge count (default 0.8 n)");
    metrics->add_option("--wmin", w_min, "erdos_renyi: minimum edge weight");
    metrics->add_option("--wmax", w_max, "erdos_renyi: maximum edge weight");
    metrics->add_option("--structure-seed", structure_seed, "erdos_renyi: graph seed");

    // stability
    auto* stability = app.add_subcommand("stability", "successive re-centering stability study");
    InputFlags stab_input;
    stab_input.attach(stability);
    std::string schedule_str, lambdas_str;
    int overlap_k = 10;
    double fdr_level = 0.1, plugin_multiplier = 0.25;
    stability->add_option("--schedule", schedule_str, "comma list, strictly decreasing")
        ->required();
    stability->add_option("--lambdas", lambdas_str, "comma list of explicit penalties");
    stability->add_option("--overlap-k", overlap_k, "top-k size for the overlap table");
    stability->add_option("--fdr", fdr_level, "BH rejection level");
    stability->add_option("--plugin-multiplier", plugin_multiplier,
                          "plugin multiplier for the reference run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (threads > 0) set_threads(threads);
        if (sim->parsed()) {
            return cmd_simulate(sim_config, out,
                                seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt,
                                threads);
        }
        if (fit->parsed()) {
            return cmd_fit(fit_input, algorithm, stage1_mult, stage4_mult, explicit_lambda1,
                           explicit_lambda4, threshold_multiplier, top_k, fit_a, out);
        }
        if (metrics->parsed()) {
            if (structure == "erdos_renyi" && edges == 0) {
                edges = static_cast<int>(0.8 * n);
            }
            return cmd_metrics(structure, n, rho, blocks, block_size, edges, w_min, w_max,
                               structure_seed, out);
        }
        if (stability->parsed()) {
            return cmd_stability(stab_input, schedule_str, lambdas_str, overlap_k, fdr_level,
                                 plugin_multiplier, out);
        }
        return 2;
    } catch (const ParseError& e) {
        json err{{"error", "parse-error"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 2;
    } catch (const InvalidParameter& e) {
        json err{{"error", "invalid-parameter"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 2;
    } catch (const Error& e) {
        json err{{"error", "numeric-failure"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 3;
    } catch (const std::exception& e) {
        json err{{"error", "internal"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 3;
    }
}
