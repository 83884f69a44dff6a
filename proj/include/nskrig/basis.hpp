#ifndef NSKRIG_BASIS_HPP
#define NSKRIG_BASIS_HPP

#include <Eigen/Dense>

namespace nskrig {

struct EmpiricalCovariance {
  Eigen::MatrixXd matrix;
  int replicates = 0;
};

// Eigenpairs of an empirical covariance, eigenvalues sorted descending.
struct EOFBasis {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors; // orthonormal columns
};

// (1/R) sum_r y_r y_r^T from a replicates x locations matrix; the data are
// modeled mean-zero, so the divisor is R and detrending is the caller's job.
EmpiricalCovariance empirical_cov(const Eigen::MatrixXd& data);

EOFBasis eof_decompose(const EmpiricalCovariance& cov);
EOFBasis eof_decompose(const Eigen::MatrixXd& symmetric);

// Rank-L truncation sum_{l<=L} lambda_l E_l E_l^T; exact at L = n.
Eigen::MatrixXd kl_truncated_cov(const EOFBasis& basis, int rank);

} // namespace nskrig

#endif
