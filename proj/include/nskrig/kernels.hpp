#ifndef NSKRIG_KERNELS_HPP
#define NSKRIG_KERNELS_HPP

#include <vector>

#include <Eigen/Dense>

#include "nskrig/stationary.hpp"

namespace nskrig {

// SPD kernel matrix Sigma(s), the local anisotropy ellipse. For d = 2 the
// spectral view (eigenvalue1 >= eigenvalue2 > 0, angle in [0, pi)) and the
// matrix view are interconvertible; ties report angle = 0.
class KernelMatrix {
public:
  KernelMatrix() = default;
  explicit KernelMatrix(Eigen::MatrixXd matrix);

  // d = 2 spectral construction: Sigma = R(angle) diag(e1, e2) R(angle)^T.
  static KernelMatrix from_spectral(double eigenvalue1, double eigenvalue2, double angle);

  const Eigen::MatrixXd& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }

  double eigenvalue1() const; // major axis, d = 2 only
  double eigenvalue2() const;
  double angle() const; // orientation of the major axis in [0, pi)

private:
  Eigen::MatrixXd m_;
};

// Spatially-varying kernel-matrix field Sigma(.): a single constant matrix,
// a distance-weighted mixture of basis kernels, or a covariate-driven field
// with log-linear links on the eigenvalues and an identity link on the angle.
class KernelField {
public:
  static KernelField constant(KernelMatrix k);
  static KernelField mixture(std::vector<Location> basis_locs,
                             std::vector<KernelMatrix> basis_kernels,
                             double bandwidth);
  // Each coefficient vector is (intercept, slope_1, ..., slope_p).
  static KernelField covariate(Eigen::VectorXd coef_log_eig1,
                               Eigen::VectorXd coef_log_eig2,
                               Eigen::VectorXd coef_angle);

  enum class Kind { Constant, Mixture, Covariate };
  Kind kind() const { return kind_; }

  // Covariates must be supplied for covariate-driven fields and are ignored
  // otherwise.
  KernelMatrix eval(const Location& s, const Eigen::VectorXd* covariates = nullptr) const;

  // Normalized Gaussian weights w_m(s) of the mixture variant.
  Eigen::VectorXd mixture_weights(const Location& s) const;

  const std::vector<Location>& basis_locations() const { return basis_locs_; }
  const std::vector<KernelMatrix>& basis_kernels() const { return basis_kernels_; }
  double bandwidth() const { return bandwidth_; }
  bool needs_covariates() const { return kind_ == Kind::Covariate; }
  const Eigen::VectorXd& coef_log_eig1() const { return coef_log_eig1_; }
  const Eigen::VectorXd& coef_log_eig2() const { return coef_log_eig2_; }
  const Eigen::VectorXd& coef_angle() const { return coef_angle_; }

private:
  Kind kind_ = Kind::Constant;
  KernelMatrix constant_;
  std::vector<Location> basis_locs_;
  std::vector<KernelMatrix> basis_kernels_;
  double bandwidth_ = 1.0;
  Eigen::VectorXd coef_log_eig1_, coef_log_eig2_, coef_angle_;
};

// Strictly positive scalar field for sigma(s) or kappa(s); log link keeps the
// covariate-driven variant positive, the mixture variant is a convex
// combination of positive basis values.
class ScalarField {
public:
  static ScalarField constant(double value);
  static ScalarField mixture(std::vector<Location> basis_locs,
                             std::vector<double> basis_values,
                             double bandwidth);
  static ScalarField covariate(Eigen::VectorXd coef_log_value);

  enum class Kind { Constant, Mixture, Covariate };
  Kind kind() const { return kind_; }

  double eval(const Location& s, const Eigen::VectorXd* covariates = nullptr) const;
  bool needs_covariates() const { return kind_ == Kind::Covariate; }
  double constant_value() const { return constant_; }
  const Eigen::VectorXd& coef_log_value() const { return coef_log_value_; }

private:
  Kind kind_ = Kind::Constant;
  double constant_ = 1.0;
  std::vector<Location> basis_locs_;
  std::vector<double> basis_values_;
  double bandwidth_ = 1.0;
  Eigen::VectorXd coef_log_value_;
};

// Default mixture bandwidth: half the minimum inter-basis distance.
double default_bandwidth(const std::vector<Location>& basis_locs);

} // namespace nskrig

#endif
