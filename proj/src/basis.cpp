#include "nskrig/basis.hpp"

#include "nskrig/errors.hpp"

namespace nskrig {

EmpiricalCovariance empirical_cov(const Eigen::MatrixXd& data) {
  const int r = static_cast<int>(data.rows());
  if (r < 1) throw input_error("empirical_cov: at least one replicate required");
  EmpiricalCovariance out;
  out.replicates = r;
  out.matrix = (data.transpose() * data) / static_cast<double>(r);
  out.matrix = ((out.matrix + out.matrix.transpose()) / 2.0).eval();
  return out;
}

EOFBasis eof_decompose(const Eigen::MatrixXd& symmetric) {
  if (symmetric.rows() != symmetric.cols()) {
    throw input_error("eof_decompose: matrix must be square");
  }
  const double scale = std::max(symmetric.cwiseAbs().maxCoeff(), 1e-300);
  if ((symmetric - symmetric.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw input_error("eof_decompose: matrix asymmetric beyond 1e-10 relative");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetric);
  if (es.info() != Eigen::Success) throw conditioning_error("eof_decompose: eigensolver failed");

  const int n = static_cast<int>(symmetric.rows());
  EOFBasis basis;
  basis.eigenvalues.resize(n);
  basis.eigenvectors.resize(n, n);
  for (int i = 0; i < n; ++i) { // Eigen sorts ascending; flip to descending
    basis.eigenvalues(i) = es.eigenvalues()(n - 1 - i);
    basis.eigenvectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return basis;
}

EOFBasis eof_decompose(const EmpiricalCovariance& cov) { return eof_decompose(cov.matrix); }

Eigen::MatrixXd kl_truncated_cov(const EOFBasis& basis, int rank) {
  const int n = static_cast<int>(basis.eigenvalues.size());
  if (rank < 1 || rank > n) throw input_error("kl_truncated_cov: rank must be in [1, n]");
  const auto e = basis.eigenvectors.leftCols(rank);
  Eigen::MatrixXd c = e * basis.eigenvalues.head(rank).asDiagonal() * e.transpose();
  return ((c + c.transpose()) / 2.0).eval();
}

} // namespace nskrig
