#include "nskrig/stationary.hpp"

#include <cmath>
#include <sstream>

#include "nskrig/errors.hpp"

namespace nskrig {

void IsotropicParams::validate() const {
  if (!(variance > 0.0) || !(range > 0.0) || !(smoothness > 0.0)) {
    std::ostringstream os;
    os << "isotropic parameters must be positive: variance=" << variance
       << " range=" << range << " smoothness=" << smoothness;
    throw input_error(os.str());
  }
}

void AnisotropyMatrix::validate() const {
  const auto& A = matrix;
  if (A.rows() != A.cols()) throw input_error("anisotropy matrix must be square");
  const double scale = A.cwiseAbs().maxCoeff();
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw input_error("anisotropy matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw input_error("anisotropy matrix must be positive definite");
  }
}

double matern(double h, const IsotropicParams& p) {
  p.validate();
  if (h < 0.0) throw input_error("matern: negative distance");
  if (h == 0.0) return p.variance;
  const double x = h / p.range;
  // K_k(x) ~ exp(-x); past this point the product underflows anyway.
  if (x > 700.0) return 0.0;
  const double k = p.smoothness;
  const double scale = std::pow(2.0, 1.0 - k) / std::tgamma(k);
  const double value = p.variance * scale * std::pow(x, k) * std::cyl_bessel_k(k, x);
  if (!std::isfinite(value) || value < 0.0) return 0.0;
  return value;
}

double exponential_cov(double h, double variance, double range) {
  IsotropicParams{variance, range, 0.5}.validate();
  if (h < 0.0) throw input_error("exponential: negative distance");
  return variance * std::exp(-h / range);
}

double gaussian_cov(double h, double variance, double range) {
  IsotropicParams{variance, range, 1.0}.validate();
  if (h < 0.0) throw input_error("gaussian: negative distance");
  const double z = h / range;
  return variance * std::exp(-z * z);
}

double correlation(CorrFamily family, double h, double smoothness) {
  switch (family) {
    case CorrFamily::Exponential: return std::exp(-h);
    case CorrFamily::Gaussian: return std::exp(-h * h);
    case CorrFamily::Matern: return matern(h, IsotropicParams{1.0, 1.0, smoothness});
  }
  return 0.0;
}

double aniso_distance(const Eigen::VectorXd& h, const AnisotropyMatrix& A) {
  A.validate();
  if (h.size() != A.matrix.rows()) throw input_error("aniso_distance: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(A.matrix);
  if (llt.info() != Eigen::Success) {
    throw input_error("aniso_distance: anisotropy matrix not SPD");
  }
  // h^T A^{-1} h = ||L^{-1} h||^2 without forming A^{-1/2}.
  Eigen::VectorXd z = llt.matrixL().solve(h);
  return z.norm();
}

NndResult nnd_check(const Eigen::MatrixXd& C, double tol) {
  if (C.rows() != C.cols()) throw input_error("nnd_check: matrix must be square");
  const double scale = std::max(C.cwiseAbs().maxCoeff(), 1e-300);
  if ((C - C.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw input_error("nnd_check: matrix asymmetric beyond 1e-10 relative");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  const double max_diag = C.diagonal().maxCoeff();
  return NndResult{min_eig >= -tol * max_diag, min_eig};
}

} // namespace nskrig
