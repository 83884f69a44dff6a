#ifndef NSKRIG_CONVOLUTION_HPP
#define NSKRIG_CONVOLUTION_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "nskrig/kernels.hpp"
#include "nskrig/stationary.hpp"

namespace nskrig {

// Finite grid {u_l} carrying the iid N(0, sigma_u^2) white-noise amplitudes.
struct ConvolutionGrid {
  std::vector<Location> locations;
  double white_noise_variance = 1.0;

  void validate() const;
};

// Fuentes locally-stationary mixture: fixed Gaussian kernel, per-node
// stationary family with location-dependent parameters.
struct FuentesSpec {
  ConvolutionGrid grid;
  KernelMatrix kernel;
  CorrFamily family = CorrFamily::Exponential;
  std::vector<IsotropicParams> local_params; // one per grid node
  double cell_volume = 1.0; // optional Riemann-sum multiplier

  void validate() const;
};

struct FieldRealization {
  std::vector<Location> locations;
  Eigen::MatrixXd values; // replicates x locations
  std::uint64_t seed = 0;
};

// Normalized d-variate Gaussian density with covariance sigma, at lag v.
double gaussian_kernel_density(const Eigen::VectorXd& v, const KernelMatrix& sigma);

// Y(s) = sum_l K_s(s - u_l) V(u_l) with V iid N(0, sigma_u^2); replicates use
// seeds derived from (seed, replicate) and are independent of generation order.
FieldRealization simulate_discrete_convolution(const KernelField& field,
                                               const ConvolutionGrid& grid,
                                               const std::vector<Location>& eval_locs,
                                               std::uint64_t seed, int replicates = 1);

// Exact covariance of the discrete convolution:
// sigma_u^2 sum_l K_s(s - u_l) K_s'(s' - u_l).
double discrete_convolution_cov(const KernelField& field, const ConvolutionGrid& grid,
                                const Location& s, const Location& sp);

// sum_l K(s - u_l) K(s' - u_l) C_{u_l}(s - s'), the locally-stationary mixture.
double fuentes_cov(const FuentesSpec& spec, const Location& s, const Location& sp);

// Regular lattice over the bounding box of locs, extended per side by
// max(10% of span, 3x the largest kernel standard deviation).
ConvolutionGrid default_convolution_grid(const std::vector<Location>& locs,
                                         const KernelField& field,
                                         int nodes_per_axis,
                                         double white_noise_variance = 1.0);

} // namespace nskrig

#endif
