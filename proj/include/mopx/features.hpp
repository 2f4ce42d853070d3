#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace mopx {

struct SymmetricEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // column i pairs with values[i]
};

/// Cyclic Jacobi rotations on a symmetric matrix. Columns are sign-normalized so that the first
/// nonzero component is positive. Throws NumericalError if the sweeps do not converge.
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& symmetric, int max_sweeps = 100);

struct PcaResult {
  Eigen::MatrixXd features;  // K x d, phi(x) = U_d^T (e(x) - mean)
  Eigen::MatrixXd basis;     // p x d, orthonormal columns
  Eigen::VectorXd mean;      // p
  Eigen::VectorXd explained_variance;  // d leading eigenvalues of the population covariance
};

/// Reduce a K x p embedding table to d principal components. Throws ConfigError unless
/// 1 <= d <= min(K, p).
PcaResult pca_reduce(const Eigen::MatrixXd& embeddings, std::size_t d);

}  // namespace mopx
