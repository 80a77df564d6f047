#include "mvgls/covmodel.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <numeric>
#include <utility>

#include "mvgls/errors.hpp"
#include "mvgls/kernels.hpp"
#include "mvgls/rng.hpp"

namespace mvgls {

CorrelationStructure ar1_correlation(int n, double rho) {
    if (n < 1) throw InvalidParameter("ar1_correlation: n must be >= 1");
    if (!(std::abs(rho) < 1.0)) {
        throw InvalidParameter("ar1_correlation: |rho| must be < 1");
    }
    Matrix b(n, n);
    for (int i = 0; i < n; ++i) {
        b(i, i) = 1.0;
        for (int j = 0; j < i; ++j) {
            const double v = std::pow(rho, i - j);
            b(i, j) = v;
            b(j, i) = v;
        }
    }
    return CorrelationStructure::create(std::move(b));
}

CorrelationStructure star_block_correlation(int n_blocks, int block_size, double rho) {
    if (n_blocks < 1 || block_size < 1) {
        throw InvalidParameter("star_block_correlation: counts must be >= 1");
    }
    if (!(rho > 0.0 && rho < 1.0)) {
        throw InvalidParameter("star_block_correlation: rho must be in (0, 1)");
    }
    const int n = n_blocks * block_size;
    Matrix b = Matrix::Zero(n, n);
    const double rho2 = rho * rho;
    for (int blk = 0; blk < n_blocks; ++blk) {
        const int off = blk * block_size;
        for (int i = 0; i < block_size; ++i) {
            b(off + i, off + i) = 1.0;
            for (int j = 0; j < i; ++j) {
                // hub is local node 0; an edge touches the hub
                const double v = (j == 0) ? rho : rho2;
                b(off + i, off + j) = v;
                b(off + j, off + i) = v;
            }
        }
    }
    return CorrelationStructure::create(std::move(b));
}

CorrelationStructure erdos_renyi_correlation(int n, int d, double w_min,
                                             double w_max, std::uint64_t seed) {
    if (n < 1) throw InvalidParameter("erdos_renyi_correlation: n must be >= 1");
    const long total_edges = static_cast<long>(n) * (n - 1) / 2;
    if (d < 0 || d > total_edges) {
        throw InvalidParameter("erdos_renyi_correlation: d exceeds available edges");
    }
    if (!(w_min > 0.0) || w_min > w_max) {
        throw InvalidParameter("erdos_renyi_correlation: need 0 < w_min <= w_max");
    }

    Matrix theta = 0.25 * Matrix::Identity(n, n);

    // Partial Fisher-Yates over the full pair list: first d entries are a
    // uniform sample without replacement.
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(total_edges));
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
    Rng rng(seed);
    for (int k = 0; k < d; ++k) {
        const auto pick = k + static_cast<long>(rng.bounded(
                                  static_cast<std::uint64_t>(total_edges - k)));
        std::swap(pairs[static_cast<std::size_t>(k)], pairs[static_cast<std::size_t>(pick)]);
        const auto [i, j] = pairs[static_cast<std::size_t>(k)];
        const double w = (w_min == w_max) ? w_min : rng.uniform(w_min, w_max);
        theta(i, j) -= w;
        theta(j, i) -= w;
        theta(i, i) += w;
        theta(j, j) += w;
    }

    // Rescale: invert the precision, normalize that covariance to unit
    // diagonal, and report the resulting correlation matrix.
    Matrix cov = theta.llt().solve(Matrix::Identity(n, n));
    Vector scale = cov.diagonal().cwiseSqrt().cwiseInverse();
    Matrix corr = scale.asDiagonal() * cov * scale.asDiagonal();
    corr = 0.5 * (corr + corr.transpose());
    corr.diagonal().setOnes();
    return CorrelationStructure::create(std::move(corr));
}

KroneckerModel normalize_kronecker(const Matrix& a, const Matrix& b) {
    if (a.rows() != a.cols() || b.rows() != b.cols()) {
        throw InvalidParameter("normalize_kronecker: inputs must be square");
    }
    auto check_spd = [](const Matrix& s, const char* name) {
        if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
            throw InvalidParameter(std::string("normalize_kronecker: ") + name +
                                   " is not symmetric");
        }
        Eigen::LLT<Matrix> llt(s);
        if (llt.info() != Eigen::Success) {
            throw InvalidParameter(std::string("normalize_kronecker: ") + name +
                                   " is not positive definite");
        }
    };
    check_spd(a, "A");
    check_spd(b, "B");

    const double m = static_cast<double>(a.rows());
    const double tr = a.trace();
    KroneckerModel model;
    model.a = (m / tr) * a;
    model.b = (tr / m) * b;
    model.normalized = true;
    return model;
}

MatrixVariateSampler::MatrixVariateSampler(MeanSpec mean, const KroneckerModel& model,
                                           TwoGroupDesign design, NoiseKind noise)
    : mean_(std::move(mean)), design_(std::move(design)), noise_(noise) {
    const int n = design_.n;
    const int m = static_cast<int>(mean_.mu.size());
    if (model.a.rows() != m || model.b.rows() != n || mean_.gamma.size() != m) {
        throw InvalidParameter("MatrixVariateSampler: dimension mismatch");
    }
    a_root_ = symmetric_sqrt(model.a);
    b_root_ = symmetric_sqrt(model.b);
    mean_matrix_ = Vector::Ones(n) * mean_.mu.transpose() +
                   0.5 * design_.delta_n() * mean_.gamma.transpose();
}

DataMatrix MatrixVariateSampler::draw(std::uint64_t seed) const {
    const int n = design_.n;
    const int m = static_cast<int>(mean_.mu.size());
    Rng rng(seed);
    Matrix z(n, m);
    const double sqrt3 = std::sqrt(3.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            switch (noise_) {
                case NoiseKind::Gaussian:
                    z(i, j) = rng.normal();
                    break;
                case NoiseKind::Rademacher:
                    z(i, j) = rng.rademacher();
                    break;
                case NoiseKind::Uniform:
                    z(i, j) = rng.uniform(-sqrt3, sqrt3);
                    break;
            }
        }
    }
    return draw_with_z(z);
}

DataMatrix MatrixVariateSampler::draw_with_z(const Matrix& z) const {
    if (z.rows() != design_.n || z.cols() != mean_.mu.size()) {
        throw InvalidParameter("MatrixVariateSampler: Z dimension mismatch");
    }
    Matrix x = mean_matrix_ + b_root_ * z * a_root_;
    return DataMatrix::create(std::move(x), design_.groups);
}

DataMatrix sample_matrix_variate(const MeanSpec& mean, const KroneckerModel& model,
                                 const TwoGroupDesign& design, NoiseKind noise,
                                 std::uint64_t seed) {
    return MatrixVariateSampler(mean, model, design, noise).draw(seed);
}

DataMatrix sample_matrix_variate_with_z(const MeanSpec& mean,
                                        const KroneckerModel& model,
                                        const TwoGroupDesign& design,
                                        const Matrix& z) {
    return MatrixVariateSampler(mean, model, design, NoiseKind::Gaussian).draw_with_z(z);
}

}  // namespace mvgls
