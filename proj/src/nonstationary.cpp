#include "nskrig/nonstationary.hpp"

#include <cmath>

#include "nskrig/errors.hpp"

namespace nskrig {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

double half_logdet_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

struct AvgFactor {
  double q;           // quadratic form through the averaged matrix
  double half_logdet; // 0.5 * log|avg|
};

AvgFactor average_factor(const Location& s, const Location& sp,
                         const Eigen::MatrixXd& sigma_s, const Eigen::MatrixXd& sigma_sp) {
  Eigen::MatrixXd avg = 0.5 * (sigma_s + sigma_sp);
  Eigen::LLT<Eigen::MatrixXd> llt(avg);
  if (llt.info() != Eigen::Success) {
    throw conditioning_error("averaged kernel matrix not positive definite");
  }
  Eigen::VectorXd z = llt.matrixL().solve(s - sp);
  return AvgFactor{z.squaredNorm(), half_logdet_llt(llt)};
}

} // namespace

double q_distance(const Location& s, const Location& sp,
                  const KernelMatrix& sigma_s, const KernelMatrix& sigma_sp) {
  return average_factor(s, sp, sigma_s.matrix(), sigma_sp.matrix()).q;
}

double cov_h(const Location& s, const Location& sp,
             const KernelMatrix& sigma_s, const KernelMatrix& sigma_sp) {
  const int d = static_cast<int>(s.size());
  const AvgFactor f = average_factor(s, sp, sigma_s.matrix(), sigma_sp.matrix());
  return std::pow(2.0 * kSqrtPi, -d) * std::exp(-f.half_logdet - f.q);
}

double cov_h(const Location& s, const Location& sp, const KernelField& field) {
  return cov_h(s, sp, field.eval(s), field.eval(sp));
}

double cov_ps(const Location& s, const Location& sp,
              const KernelMatrix& sigma_s, const KernelMatrix& sigma_sp,
              CorrFamily family, double smoothness) {
  const int d = static_cast<int>(s.size());
  const AvgFactor f = average_factor(s, sp, sigma_s.matrix(), sigma_sp.matrix());
  return std::pow(2.0 * kSqrtPi, -d) * std::exp(-f.half_logdet) *
         correlation(family, std::sqrt(f.q), smoothness);
}

double cov_ps(const Location& s, const Location& sp, const KernelField& field,
              CorrFamily family, double smoothness) {
  return cov_ps(s, sp, field.eval(s), field.eval(sp), family, smoothness);
}

NsPoint ns_point(const NsModel& model, const Location& s, const Eigen::VectorXd* covariates) {
  NsPoint p;
  p.loc = s;
  p.kernel = model.kernels.eval(s, covariates).matrix();
  Eigen::LLT<Eigen::MatrixXd> llt(p.kernel);
  if (llt.info() != Eigen::Success) {
    throw conditioning_error("kernel matrix not positive definite");
  }
  p.half_logdet = half_logdet_llt(llt);
  p.sigma = model.sigma.eval(s, covariates);
  p.kappa = model.smoothness.eval(s, covariates);
  return p;
}

double cov_ns_pair(const NsPoint& a, const NsPoint& b, CorrFamily family) {
  if ((a.loc - b.loc).norm() == 0.0) return a.sigma * a.sigma;
  const AvgFactor f = average_factor(a.loc, b.loc, a.kernel, b.kernel);
  // |Sigma(s)|^{1/4} |Sigma(s')|^{1/4} / |avg|^{1/2}, via log-determinants.
  const double prefactor = std::exp(0.5 * a.half_logdet + 0.5 * b.half_logdet - f.half_logdet);
  const double kappa = 0.5 * (a.kappa + b.kappa);
  return a.sigma * b.sigma * prefactor * correlation(family, std::sqrt(f.q), kappa);
}

double cov_ns(const Location& s, const Location& sp, const NsModel& model,
              const Eigen::VectorXd* cov_s, const Eigen::VectorXd* cov_sp) {
  return cov_ns_pair(ns_point(model, s, cov_s), ns_point(model, sp, cov_sp), model.family);
}

} // namespace nskrig
