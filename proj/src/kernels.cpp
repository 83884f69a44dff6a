#include "nskrig/kernels.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "nskrig/errors.hpp"

namespace nskrig {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_spd(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw input_error(std::string(what) + ": matrix must be square and nonempty");
  }
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw input_error(std::string(what) + ": matrix asymmetric beyond 1e-12 relative");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw input_error(std::string(what) + ": matrix not positive definite");
  }
}

double wrap_angle(double a) {
  a = std::fmod(a, kPi);
  if (a < 0.0) a += kPi;
  if (a == kPi) a = 0.0;
  return a;
}

} // namespace

KernelMatrix::KernelMatrix(Eigen::MatrixXd matrix) : m_(std::move(matrix)) {
  check_spd(m_, "KernelMatrix");
  // Symmetrize so downstream factorizations see an exactly symmetric matrix.
  m_ = ((m_ + m_.transpose()) / 2.0).eval();
}

KernelMatrix KernelMatrix::from_spectral(double eigenvalue1, double eigenvalue2, double angle) {
  if (!(eigenvalue1 > 0.0) || !(eigenvalue2 > 0.0)) {
    throw input_error("KernelMatrix: eigenvalues must be positive");
  }
  if (eigenvalue1 < eigenvalue2) {
    std::swap(eigenvalue1, eigenvalue2);
    angle += kPi / 2.0;
  }
  angle = wrap_angle(angle);
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  Eigen::Matrix2d d = Eigen::Vector2d(eigenvalue1, eigenvalue2).asDiagonal();
  KernelMatrix out;
  out.m_ = r * d * r.transpose();
  out.m_ = ((out.m_ + out.m_.transpose()) / 2.0).eval();
  return out;
}

double KernelMatrix::eigenvalue1() const {
  if (dim() != 2) throw input_error("KernelMatrix: spectral view requires d = 2");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m_);
  return es.eigenvalues()(1); // Eigen sorts ascending
}

double KernelMatrix::eigenvalue2() const {
  if (dim() != 2) throw input_error("KernelMatrix: spectral view requires d = 2");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m_);
  return es.eigenvalues()(0);
}

double KernelMatrix::angle() const {
  if (dim() != 2) throw input_error("KernelMatrix: spectral view requires d = 2");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m_);
  const double e1 = es.eigenvalues()(1), e2 = es.eigenvalues()(0);
  if (e1 - e2 <= 1e-14 * e1) return 0.0; // tie: orientation undefined
  Eigen::Vector2d v = es.eigenvectors().col(1);
  return wrap_angle(std::atan2(v(1), v(0)));
}

KernelField KernelField::constant(KernelMatrix k) {
  KernelField f;
  f.kind_ = Kind::Constant;
  f.constant_ = std::move(k);
  return f;
}

KernelField KernelField::mixture(std::vector<Location> basis_locs,
                                 std::vector<KernelMatrix> basis_kernels,
                                 double bandwidth) {
  if (basis_locs.empty() || basis_locs.size() != basis_kernels.size()) {
    throw input_error("KernelField: mixture needs M >= 1 basis locations with matching kernels");
  }
  if (!(bandwidth > 0.0)) throw input_error("KernelField: bandwidth must be positive");
  for (std::size_t i = 0; i < basis_locs.size(); ++i) {
    for (std::size_t j = i + 1; j < basis_locs.size(); ++j) {
      if ((basis_locs[i] - basis_locs[j]).norm() == 0.0) {
        throw input_error("KernelField: basis locations must be distinct");
      }
    }
  }
  KernelField f;
  f.kind_ = Kind::Mixture;
  f.basis_locs_ = std::move(basis_locs);
  f.basis_kernels_ = std::move(basis_kernels);
  f.bandwidth_ = bandwidth;
  return f;
}

KernelField KernelField::covariate(Eigen::VectorXd coef_log_eig1,
                                   Eigen::VectorXd coef_log_eig2,
                                   Eigen::VectorXd coef_angle) {
  if (coef_log_eig1.size() < 1 || coef_log_eig1.size() != coef_log_eig2.size() ||
      coef_log_eig1.size() != coef_angle.size()) {
    throw input_error("KernelField: covariate coefficient vectors must share a length >= 1");
  }
  KernelField f;
  f.kind_ = Kind::Covariate;
  f.coef_log_eig1_ = std::move(coef_log_eig1);
  f.coef_log_eig2_ = std::move(coef_log_eig2);
  f.coef_angle_ = std::move(coef_angle);
  return f;
}

Eigen::VectorXd KernelField::mixture_weights(const Location& s) const {
  if (kind_ != Kind::Mixture) throw input_error("KernelField: not a mixture field");
  const int m = static_cast<int>(basis_locs_.size());
  Eigen::VectorXd logw(m);
  for (int i = 0; i < m; ++i) {
    const double d2 = (s - basis_locs_[i]).squaredNorm();
    logw(i) = -d2 / (2.0 * bandwidth_ * bandwidth_);
  }
  // Shift by the max exponent so at least one weight survives underflow.
  logw.array() -= logw.maxCoeff();
  Eigen::VectorXd w = logw.array().exp();
  return w / w.sum();
}

namespace {
double affine(const Eigen::VectorXd& coef, const Eigen::VectorXd* x, const char* what) {
  if (coef.size() == 1) return coef(0);
  if (x == nullptr || x->size() != coef.size() - 1) {
    std::ostringstream os;
    os << what << ": covariate vector of length " << coef.size() - 1 << " required";
    throw input_error(os.str());
  }
  return coef(0) + coef.tail(coef.size() - 1).dot(*x);
}
} // namespace

KernelMatrix KernelField::eval(const Location& s, const Eigen::VectorXd* covariates) const {
  switch (kind_) {
    case Kind::Constant:
      return constant_;
    case Kind::Mixture: {
      Eigen::VectorXd w = mixture_weights(s);
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(basis_kernels_[0].dim(), basis_kernels_[0].dim());
      for (int i = 0; i < w.size(); ++i) acc += w(i) * basis_kernels_[i].matrix();
      return KernelMatrix(acc);
    }
    case Kind::Covariate: {
      const double e1 = std::exp(affine(coef_log_eig1_, covariates, "KernelField"));
      const double e2 = std::exp(affine(coef_log_eig2_, covariates, "KernelField"));
      const double ang = affine(coef_angle_, covariates, "KernelField");
      return KernelMatrix::from_spectral(e1, e2, ang);
    }
  }
  throw input_error("KernelField: invalid kind");
}

ScalarField ScalarField::constant(double value) {
  if (!(value > 0.0)) throw input_error("ScalarField: value must be positive");
  ScalarField f;
  f.kind_ = Kind::Constant;
  f.constant_ = value;
  return f;
}

ScalarField ScalarField::mixture(std::vector<Location> basis_locs,
                                 std::vector<double> basis_values,
                                 double bandwidth) {
  if (basis_locs.empty() || basis_locs.size() != basis_values.size()) {
    throw input_error("ScalarField: mixture needs M >= 1 basis locations with matching values");
  }
  if (!(bandwidth > 0.0)) throw input_error("ScalarField: bandwidth must be positive");
  for (double v : basis_values) {
    if (!(v > 0.0)) throw input_error("ScalarField: basis values must be positive");
  }
  ScalarField f;
  f.kind_ = Kind::Mixture;
  f.basis_locs_ = std::move(basis_locs);
  f.basis_values_ = std::move(basis_values);
  f.bandwidth_ = bandwidth;
  return f;
}

ScalarField ScalarField::covariate(Eigen::VectorXd coef_log_value) {
  if (coef_log_value.size() < 1) throw input_error("ScalarField: empty coefficient vector");
  ScalarField f;
  f.kind_ = Kind::Covariate;
  f.coef_log_value_ = std::move(coef_log_value);
  return f;
}

double ScalarField::eval(const Location& s, const Eigen::VectorXd* covariates) const {
  switch (kind_) {
    case Kind::Constant:
      return constant_;
    case Kind::Mixture: {
      const int m = static_cast<int>(basis_locs_.size());
      Eigen::VectorXd logw(m);
      for (int i = 0; i < m; ++i) {
        logw(i) = -(s - basis_locs_[i]).squaredNorm() / (2.0 * bandwidth_ * bandwidth_);
      }
      logw.array() -= logw.maxCoeff();
      Eigen::VectorXd w = logw.array().exp();
      w /= w.sum();
      double acc = 0.0;
      for (int i = 0; i < m; ++i) acc += w(i) * basis_values_[i];
      return acc;
    }
    case Kind::Covariate:
      return std::exp(affine(coef_log_value_, covariates, "ScalarField"));
  }
  throw input_error("ScalarField: invalid kind");
}

double default_bandwidth(const std::vector<Location>& basis_locs) {
  if (basis_locs.size() < 2) return 1.0;
  double min_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < basis_locs.size(); ++i) {
    for (std::size_t j = i + 1; j < basis_locs.size(); ++j) {
      min_d = std::min(min_d, (basis_locs[i] - basis_locs[j]).norm());
    }
  }
  return min_d / 2.0;
}

} // namespace nskrig
