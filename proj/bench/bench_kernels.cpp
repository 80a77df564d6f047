// Compares the OpenMP kernels against their serial references and times
// the Monte Carlo harness at different worker counts.

#include <chrono>
#include <cstdio>

#include "mvgls/eval.hpp"
#include "mvgls/kernels.hpp"
#include "mvgls/rng.hpp"

using namespace mvgls;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix x(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) x(i, j) = rng.normal();
    }
    return x;
}

template <typename F>
double time_best_of(int repeats, F&& body) {
    double best = 1e30;
    for (int r = 0; r < repeats; ++r) {
        const auto start = Clock::now();
        body();
        best = std::min(best, seconds_since(start));
    }
    return best;
}

}  // namespace

int main() {
    std::printf("threads available: %d\n\n", max_threads());

    std::printf("%-26s %10s %10s %8s %s\n", "kernel", "serial(s)", "openmp(s)", "speedup",
                "max|diff|");
    for (auto [rows, cols] : {std::pair{80, 2000}, std::pair{200, 2000}, std::pair{2000, 200}}) {
        const Matrix x = random_matrix(rows, cols, 42);
        Matrix serial, parallel;
        const double ts = time_best_of(3, [&] { serial = gram_cols_serial(x); });
        const double tp = time_best_of(3, [&] { parallel = gram_cols(x); });
        const double diff = (serial - parallel).cwiseAbs().maxCoeff();
        std::printf("gram_cols %6dx%-11d %10.4f %10.4f %7.2fx %g\n", rows, cols, ts, tp,
                    ts / tp, diff);
    }
    for (auto [rows, cols] : {std::pair{2000, 80}, std::pair{2000, 200}}) {
        const Matrix x = random_matrix(rows, cols, 7);
        Matrix serial, parallel;
        const double ts = time_best_of(3, [&] { serial = gram_rows_serial(x); });
        const double tp = time_best_of(3, [&] { parallel = gram_rows(x); });
        const double diff = (serial - parallel).cwiseAbs().maxCoeff();
        std::printf("gram_rows %6dx%-11d %10.4f %10.4f %7.2fx %g\n", rows, cols, ts, tp,
                    ts / tp, diff);
    }

    std::printf("\nreplication pool (m = 300, n = 40, 24 reps, ols+alg1+alg2)\n");
    SimConfig config;
    config.a_spec = StructureSpec::ar1(300, 0.8);
    config.b_spec = StructureSpec::erdos_renyi(40, 32, 0.6, 0.8, 5);
    config.n = 40;
    config.m = 300;
    config.mean.d0 = 10;
    config.mean.effect = 0.8;
    config.estimators = {Estimator::Ols, Estimator::Alg1, Estimator::Alg2};
    config.replications = 24;
    config.master_seed = 99;

    config.threads = 1;
    SimReport serial_report;
    const double t1 = time_best_of(1, [&] { serial_report = run_simulation(config); });
    config.threads = 0;
    SimReport parallel_report;
    const double tn = time_best_of(1, [&] { parallel_report = run_simulation(config); });
    set_threads(0);

    bool identical = serial_report.records.size() == parallel_report.records.size();
    for (std::size_t i = 0; identical && i < serial_report.records.size(); ++i) {
        if (serial_report.records[i].metrics != parallel_report.records[i].metrics) {
            identical = false;
        }
    }
    std::printf("%-26s %10.3f %10.3f %7.2fx reports identical: %s\n", "run_simulation", t1, tn,
                t1 / tn, identical ? "yes" : "NO");
    return identical ? 0 : 1;
}
