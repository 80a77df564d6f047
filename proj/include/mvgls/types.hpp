#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace mvgls {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Symmetric positive definite matrix with unit diagonal.
struct CorrelationStructure {
    int dim = 0;
    Matrix values;

    /// Validates symmetry (1e-12), exact unit diagonal and positive
    /// definiteness; throws InvalidParameter otherwise.
    static CorrelationStructure create(Matrix values);
};

/// Separable covariance pair: A couples variables, B couples samples.
/// When `normalized`, trace(A) = m so the A/B scale split is unique.
struct KroneckerModel {
    Matrix a;
    Matrix b;
    bool normalized = false;
};

/// Two-group mean structure: grand means plus per-variable differences.
struct MeanSpec {
    Vector mu;
    Vector gamma;
    std::vector<int> support;  // indices j with gamma[j] != 0

    static MeanSpec from_gamma(Vector mu, Vector gamma);
};

/// One n x m observation with group labels in {1, 2} per row.
struct DataMatrix {
    int n = 0;
    int m = 0;
    Matrix values;
    std::vector<int> groups;

    static DataMatrix create(Matrix values, std::vector<int> groups);
};

enum class NoiseKind { Gaussian, Rademacher, Uniform };

/// Design objects for the two-group contrast. Group membership need not
/// be contiguous; u and v are indicator vectors built from the labels.
struct TwoGroupDesign {
    int n = 0;
    int n1 = 0;
    int n2 = 0;
    Matrix d;               // n x 2, columns u and v
    Eigen::Vector2d delta;  // (1, -1)
    Matrix p1;              // global centering projection, 11^T / n
    Matrix p2;              // within-group centering projection
    int n_min = 0;
    int n_max = 0;
    double n_ratio = 1.0;
    std::vector<int> groups;  // labels, one per sample

    static TwoGroupDesign from_labels(const std::vector<int>& groups);

    /// Design with first n1 samples in group one, remaining n2 in group two.
    static TwoGroupDesign contiguous(int n1, int n2);

    /// Signed membership vector (+1 group one, -1 group two).
    Vector delta_n() const;

    /// Same design with the two group labels exchanged.
    TwoGroupDesign relabeled() const;
};

}  // namespace mvgls
