#include "mvgls/types.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "mvgls/errors.hpp"

namespace mvgls {

CorrelationStructure CorrelationStructure::create(Matrix values) {
    const Eigen::Index n = values.rows();
    if (n == 0 || values.cols() != n) {
        throw InvalidParameter("CorrelationStructure: matrix must be square and nonempty");
    }
    if ((values - values.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        throw InvalidParameter("CorrelationStructure: matrix is not symmetric");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (values(i, i) != 1.0) {
            throw InvalidParameter("CorrelationStructure: diagonal entry is not 1");
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(values, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
        throw InvalidParameter("CorrelationStructure: matrix is not positive definite");
    }
    return CorrelationStructure{static_cast<int>(n), std::move(values)};
}

MeanSpec MeanSpec::from_gamma(Vector mu, Vector gamma) {
    if (mu.size() != gamma.size()) {
        throw InvalidParameter("MeanSpec: mu and gamma sizes differ");
    }
    std::vector<int> support;
    for (Eigen::Index j = 0; j < gamma.size(); ++j) {
        if (gamma[j] != 0.0) support.push_back(static_cast<int>(j));
    }
    return MeanSpec{std::move(mu), std::move(gamma), std::move(support)};
}

DataMatrix DataMatrix::create(Matrix values, std::vector<int> groups) {
    const int n = static_cast<int>(values.rows());
    const int m = static_cast<int>(values.cols());
    if (static_cast<int>(groups.size()) != n) {
        throw InvalidParameter("DataMatrix: one group label per row required");
    }
    int n1 = 0, n2 = 0;
    for (int g : groups) {
        if (g == 1) {
            ++n1;
        } else if (g == 2) {
            ++n2;
        } else {
            throw InvalidParameter("DataMatrix: group labels must be 1 or 2");
        }
    }
    if (n1 == 0 || n2 == 0) {
        throw InvalidParameter("DataMatrix: both groups must be nonempty");
    }
    if (!values.allFinite()) {
        throw InvalidParameter("DataMatrix: non-finite entry");
    }
    return DataMatrix{n, m, std::move(values), std::move(groups)};
}

TwoGroupDesign TwoGroupDesign::from_labels(const std::vector<int>& groups) {
    const int n = static_cast<int>(groups.size());
    int n1 = 0, n2 = 0;
    for (int g : groups) {
        if (g == 1) {
            ++n1;
        } else if (g == 2) {
            ++n2;
        } else {
            throw InvalidParameter("TwoGroupDesign: group labels must be 1 or 2");
        }
    }
    if (n1 == 0 || n2 == 0) {
        throw InvalidParameter("TwoGroupDesign: both groups must be nonempty");
    }

    TwoGroupDesign dsg;
    dsg.n = n;
    dsg.n1 = n1;
    dsg.n2 = n2;
    dsg.groups = groups;
    dsg.d = Matrix::Zero(n, 2);
    for (int i = 0; i < n; ++i) {
        dsg.d(i, groups[i] == 1 ? 0 : 1) = 1.0;
    }
    dsg.delta = Eigen::Vector2d(1.0, -1.0);
    dsg.p1 = Matrix::Constant(n, n, 1.0 / n);
    dsg.p2 = dsg.d.col(0) * dsg.d.col(0).transpose() / n1 +
             dsg.d.col(1) * dsg.d.col(1).transpose() / n2;
    dsg.n_min = std::min(n1, n2);
    dsg.n_max = std::max(n1, n2);
    dsg.n_ratio = static_cast<double>(dsg.n_max) / dsg.n_min;
    return dsg;
}

TwoGroupDesign TwoGroupDesign::contiguous(int n1, int n2) {
    if (n1 <= 0 || n2 <= 0) {
        throw InvalidParameter("TwoGroupDesign: group sizes must be positive");
    }
    std::vector<int> groups(static_cast<std::size_t>(n1 + n2), 2);
    std::fill(groups.begin(), groups.begin() + n1, 1);
    return from_labels(groups);
}

Vector TwoGroupDesign::delta_n() const {
    Vector s(n);
    for (int i = 0; i < n; ++i) s[i] = groups[i] == 1 ? 1.0 : -1.0;
    return s;
}

TwoGroupDesign TwoGroupDesign::relabeled() const {
    std::vector<int> swapped(groups.size());
    std::transform(groups.begin(), groups.end(), swapped.begin(),
                   [](int g) { return g == 1 ? 2 : 1; });
    return from_labels(swapped);
}

}  // namespace mvgls
