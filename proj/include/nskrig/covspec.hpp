#ifndef NSKRIG_COVSPEC_HPP
#define NSKRIG_COVSPEC_HPP

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "nskrig/basis.hpp"
#include "nskrig/convolution.hpp"
#include "nskrig/nonstationary.hpp"
#include "nskrig/stationary.hpp"

namespace nskrig {

struct StationaryIsoSpec {
  CorrFamily family = CorrFamily::Exponential;
  IsotropicParams params{1.0, 1.0, 0.5};
};

// sigma^2 g(||A^{-1/2} h||) with anisotropy matrix A.
struct StationaryAnisoSpec {
  CorrFamily family = CorrFamily::Gaussian;
  double variance = 1.0;
  double smoothness = 0.5;
  AnisotropyMatrix anisotropy;
};

struct DiscreteConvSpec {
  KernelField field = KernelField::constant(KernelMatrix(Eigen::Matrix2d::Identity()));
  ConvolutionGrid grid;
};

// Index-based covariance frozen from a KL/EOF truncation; only valid for a
// location set of the matching size.
struct KlTruncatedSpec {
  Eigen::MatrixXd matrix;
};

// Tagged covariance model; the variant index is the family tag.
using CovarianceSpec =
    std::variant<StationaryIsoSpec, StationaryAnisoSpec, NsModel, FuentesSpec,
                 DiscreteConvSpec, KlTruncatedSpec>;

bool spec_needs_covariates(const CovarianceSpec& spec);

using CovariateTable = std::vector<Eigen::VectorXd>;

// Pairwise covariance matrix over locs; symmetric by construction (each upper
// entry computed once and mirrored). The OpenMP build is bitwise identical to
// the serial reference.
Eigen::MatrixXd build_cov_matrix(const CovarianceSpec& spec, const std::vector<Location>& locs,
                                 const CovariateTable* covariates = nullptr);
Eigen::MatrixXd build_cov_matrix_serial(const CovarianceSpec& spec,
                                        const std::vector<Location>& locs,
                                        const CovariateTable* covariates = nullptr);

// Covariance of a single pair (diagonal entries use i == j semantics when the
// locations coincide).
double cov_value(const CovarianceSpec& spec, const Location& s, const Location& sp,
                 const Eigen::VectorXd* cov_s = nullptr, const Eigen::VectorXd* cov_sp = nullptr);

// Cholesky with escalating diagonal jitter: 1e-10 * mean(diag) growing x10 up
// to 1e-6 * mean(diag); throws a conditioning error naming the smallest
// eigenvalue past that.
struct JitteredChol {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};
JitteredChol cholesky_with_jitter(const Eigen::MatrixXd& C);

// Exact GP simulation: L z for the (jittered) Cholesky factor L.
FieldRealization simulate_gp(const CovarianceSpec& spec, const std::vector<Location>& locs,
                             std::uint64_t seed, int replicates = 1,
                             const CovariateTable* covariates = nullptr);

} // namespace nskrig

#endif
