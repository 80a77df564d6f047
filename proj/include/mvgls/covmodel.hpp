#pragma once

#include <cstdint>

#include "mvgls/types.hpp"

namespace mvgls {

/// AR1 correlation: entry (i, j) = rho^|i-j|. Requires |rho| < 1.
CorrelationStructure ar1_correlation(int n, double rho);

/// Block-diagonal star correlation. Each block has `block_size` nodes,
/// node 1 of the block is the hub; within a block the entry is rho on a
/// hub edge and rho^2 between leaves. Requires rho in (0, 1).
CorrelationStructure star_block_correlation(int n_blocks, int block_size, double rho);

/// Random precision matrix built by adding d edge bumps to 0.25 I, then
/// reported as the correlation matrix of the implied covariance. Edge
/// weights are uniform on [w_min, w_max); edges are sampled uniformly
/// without replacement over unordered pairs.
CorrelationStructure erdos_renyi_correlation(int n, int d, double w_min,
                                             double w_max, std::uint64_t seed);

/// Rebalance the pair so trace(A) = m while preserving A (x) B.
KroneckerModel normalize_kronecker(const Matrix& a, const Matrix& b);

/// Draw X = M + B^{1/2} Z A^{1/2} with M = 1 mu^T + (1/2) delta_n gamma^T
/// and Z iid mean-zero unit-variance entries of the chosen kind.
DataMatrix sample_matrix_variate(const MeanSpec& mean, const KroneckerModel& model,
                                 const TwoGroupDesign& design, NoiseKind noise,
                                 std::uint64_t seed);

/// Deterministic variant taking an explicit noise matrix Z (test hook).
DataMatrix sample_matrix_variate_with_z(const MeanSpec& mean,
                                        const KroneckerModel& model,
                                        const TwoGroupDesign& design,
                                        const Matrix& z);

/// Repeated draws from one model; the square roots are factored once.
class MatrixVariateSampler {
  public:
    MatrixVariateSampler(MeanSpec mean, const KroneckerModel& model,
                         TwoGroupDesign design, NoiseKind noise);

    DataMatrix draw(std::uint64_t seed) const;
    DataMatrix draw_with_z(const Matrix& z) const;

    int n() const { return design_.n; }
    int m() const { return static_cast<int>(mean_.mu.size()); }

  private:
    MeanSpec mean_;
    TwoGroupDesign design_;
    NoiseKind noise_;
    Matrix a_root_;
    Matrix b_root_;
    Matrix mean_matrix_;
};

}  // namespace mvgls
