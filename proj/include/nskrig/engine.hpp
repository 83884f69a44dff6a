#ifndef NSKRIG_ENGINE_HPP
#define NSKRIG_ENGINE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nskrig/covspec.hpp"

namespace nskrig {

struct SpatialDataset {
  std::vector<Location> locations;
  Eigen::MatrixXd values;     // replicates x locations
  CovariateTable covariates;  // empty, or one vector per location

  int n() const { return static_cast<int>(locations.size()); }
  int replicates() const { return static_cast<int>(values.rows()); }
  const CovariateTable* covariate_table() const {
    return covariates.empty() ? nullptr : &covariates;
  }
  void validate() const;
  bool has_duplicate_locations() const;
};

enum class TrendKind { Zero, Constant, Linear };

// Design matrix for the trend: empty, intercept, or intercept + coordinates.
Eigen::MatrixXd trend_basis(TrendKind kind, const std::vector<Location>& locs);

struct ConvergenceReport {
  bool converged = false;
  int iterations = 0;
  int restarts = 0;
};

struct ModelFit {
  CovarianceSpec spec;
  double nugget = 0.0; // tau^2, added on the observed-data diagonal only
  TrendKind trend_kind = TrendKind::Zero;
  Eigen::VectorXd trend_coefficients;
  double log_likelihood = 0.0;
  ConvergenceReport report;
  std::uint64_t seed = 0;
};

struct PredictionResult {
  std::vector<Location> locations;
  Eigen::VectorXd mean;
  Eigen::VectorXd standard_error;
};

// Gaussian log-likelihood summed over independent replicates, with fixed
// trend coefficients (empty beta means zero mean). Computed via Cholesky.
double log_likelihood(const SpatialDataset& data, const CovarianceSpec& spec, double nugget,
                      TrendKind trend = TrendKind::Zero,
                      const Eigen::VectorXd& beta = Eigen::VectorXd());

// Universal kriging means and standard errors; exact interpolation at
// observed sites when the nugget is zero. Requires a single replicate.
PredictionResult krige(const ModelFit& fit, const SpatialDataset& data,
                       const std::vector<Location>& query,
                       const CovariateTable* query_covariates = nullptr);

struct FitOptions {
  int max_iterations = 600;
  double tolerance = 1e-9;
  int restarts = 3;
  std::uint64_t seed = 1;
  TrendKind trend = TrendKind::Zero;
};

// Which parameters the optimizer frees; everything else stays at the value in
// the initial spec. Positive scalars move on a log scale, kernels in
// log-eigenvalue/angle coordinates, covariate coefficients as-is.
struct FitTemplate {
  enum class Kind { StationaryIso, StationaryAniso, NsMixture, NsCovariate };
  Kind kind = Kind::StationaryIso;
  CovarianceSpec initial = StationaryIsoSpec{};
  double initial_nugget = 0.0;
  bool free_nugget = true;
  bool free_smoothness = false; // Matern only
  bool free_variance = true;    // StationaryIso only
  bool free_range = true;       // StationaryIso only
};

// Initialization heuristics: range 10% of the domain diameter, variance the
// sample variance, nugget 5% of it, kernel eigenvalues (10% diameter)^2.
FitTemplate default_template(FitTemplate::Kind kind, const SpatialDataset& data,
                             CorrFamily family, double smoothness = 0.5);

// Maximum likelihood over the template's free parameters: Nelder-Mead with
// jittered restarts, deterministic given (data, template, options).
ModelFit fit_mle(const SpatialDataset& data, const FitTemplate& tmpl,
                 const FitOptions& options = {});

// Local anisotropic Gaussian fit sigma^2 exp(-h^T A^{-1} h) + tau^2 1{h=0}
// around each basis centroid; the returned kernels are Sigma_m = A.
std::vector<KernelMatrix> estimate_local_kernels(const SpatialDataset& data,
                                                 const std::vector<Location>& basis_locs,
                                                 double radius,
                                                 const FitOptions& options = {});

struct TwoStageOptions {
  FitOptions fit;
  CorrFamily family = CorrFamily::Exponential;
  double smoothness = 0.5;
  double bandwidth = 0.0; // 0: half the minimum inter-basis distance
  bool free_smoothness = false;
};

// Stage 1 freezes locally estimated basis kernels into a mixture field;
// stage 2 maximizes the global likelihood over sigma, nugget (and optionally
// smoothness).
ModelFit fit_two_stage(const SpatialDataset& data, const std::vector<Location>& basis_locs,
                       double radius, const TwoStageOptions& options = {});

} // namespace nskrig

#endif
