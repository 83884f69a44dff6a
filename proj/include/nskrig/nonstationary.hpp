#ifndef NSKRIG_NONSTATIONARY_HPP
#define NSKRIG_NONSTATIONARY_HPP

#include <Eigen/Dense>

#include "nskrig/kernels.hpp"
#include "nskrig/stationary.hpp"

namespace nskrig {

// Nonstationary model with spatially-varying standard deviation, kernel
// matrix, and (Matern) smoothness, closed over an isotropic correlation
// family g.
struct NsModel {
  ScalarField sigma = ScalarField::constant(1.0);
  KernelField kernels = KernelField::constant(KernelMatrix(Eigen::Matrix2d::Identity()));
  ScalarField smoothness = ScalarField::constant(0.5);
  CorrFamily family = CorrFamily::Exponential;

  bool needs_covariates() const {
    return sigma.needs_covariates() || kernels.needs_covariates() ||
           smoothness.needs_covariates();
  }
};

// Q(s,s') = (s-s')^T [(Sigma(s)+Sigma(s'))/2]^{-1} (s-s').
double q_distance(const Location& s, const Location& sp,
                  const KernelMatrix& sigma_s, const KernelMatrix& sigma_sp);

// Gaussian-kernel closed form (2 sqrt(pi))^{-d} |avg|^{-1/2} exp(-Q).
double cov_h(const Location& s, const Location& sp,
             const KernelMatrix& sigma_s, const KernelMatrix& sigma_sp);
double cov_h(const Location& s, const Location& sp, const KernelField& field);

// (2 sqrt(pi))^{-d} |avg|^{-1/2} g(sqrt(Q)) for any isotropic correlation g.
double cov_ps(const Location& s, const Location& sp,
              const KernelMatrix& sigma_s, const KernelMatrix& sigma_sp,
              CorrFamily family, double smoothness = 0.5);
double cov_ps(const Location& s, const Location& sp, const KernelField& field,
              CorrFamily family, double smoothness = 0.5);

// Full nonstationary covariance with spatially-varying sigma, Sigma, kappa:
//   sigma(s) sigma(s') |Sigma(s)|^{1/4} |Sigma(s')|^{1/4} / |avg|^{1/2} g(sqrt(Q)).
// Coincident locations return sigma(s)^2 exactly.
double cov_ns(const Location& s, const Location& sp, const NsModel& model,
              const Eigen::VectorXd* cov_s = nullptr,
              const Eigen::VectorXd* cov_sp = nullptr);

// Per-location cache used by matrix assembly; pairwise combination only.
struct NsPoint {
  Location loc;
  Eigen::MatrixXd kernel;
  double half_logdet; // 0.5 * log|Sigma(s)|
  double sigma;
  double kappa;
};

NsPoint ns_point(const NsModel& model, const Location& s,
                 const Eigen::VectorXd* covariates = nullptr);
double cov_ns_pair(const NsPoint& a, const NsPoint& b, CorrFamily family);

} // namespace nskrig

#endif
