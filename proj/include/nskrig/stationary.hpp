#ifndef NSKRIG_STATIONARY_HPP
#define NSKRIG_STATIONARY_HPP

#include <Eigen/Dense>

namespace nskrig {

using Location = Eigen::VectorXd;

// Parameters of an isotropic covariance model. The nugget is handled
// separately, on the observed-data diagonal (see engine.hpp).
struct IsotropicParams {
  double variance;   // sigma^2, process units^2
  double range;      // phi, distance units
  double smoothness; // kappa, dimensionless (Matern only)

  void validate() const;
};

// d x d SPD matrix A defining the anisotropic distance ||A^{-1/2} h||.
struct AnisotropyMatrix {
  Eigen::MatrixXd matrix;

  void validate() const;
};

// Matern covariance sigma^2 * 2^{1-k}/Gamma(k) * (h/phi)^k * K_k(h/phi).
// Returns sigma^2 at h = 0 (analytic limit) and exactly 0 once h/phi is far
// into double-precision underflow.
double matern(double h, const IsotropicParams& p);

// sigma^2 * exp(-h/phi); the kappa = 0.5 Matern special case.
double exponential_cov(double h, double variance, double range);

// sigma^2 * exp(-(h/phi)^2).
double gaussian_cov(double h, double variance, double range);

enum class CorrFamily { Exponential, Gaussian, Matern };

// Correlation (unit variance, unit range) of the given family at distance h.
double correlation(CorrFamily family, double h, double smoothness);

// sqrt(h^T A^{-1} h), computed through the Cholesky factor of A.
double aniso_distance(const Eigen::VectorXd& h, const AnisotropyMatrix& A);

struct NndResult {
  bool ok;
  double min_eigenvalue;
};

// True iff the minimum eigenvalue of symmetric C is >= -tol * max(diag).
NndResult nnd_check(const Eigen::MatrixXd& C, double tol = 1e-8);

} // namespace nskrig

#endif
