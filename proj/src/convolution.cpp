#include "nskrig/convolution.hpp"

#include <cmath>

#include "nskrig/errors.hpp"
#include "nskrig/rng.hpp"

namespace nskrig {

namespace {
constexpr double kTwoPi = 6.2831853071795864769;
}

void ConvolutionGrid::validate() const {
  if (locations.empty()) throw input_error("ConvolutionGrid: L >= 1 grid locations required");
  if (white_noise_variance < 0.0) {
    throw input_error("ConvolutionGrid: white-noise variance must be nonnegative");
  }
  for (std::size_t i = 0; i < locations.size(); ++i) {
    for (std::size_t j = i + 1; j < locations.size(); ++j) {
      if ((locations[i] - locations[j]).norm() == 0.0) {
        throw input_error("ConvolutionGrid: grid locations must be distinct");
      }
    }
  }
}

void FuentesSpec::validate() const {
  grid.validate();
  if (local_params.size() != grid.locations.size()) {
    throw input_error("FuentesSpec: one local parameter set per grid node required");
  }
  for (const auto& p : local_params) p.validate();
  if (!(cell_volume > 0.0)) throw input_error("FuentesSpec: cell volume must be positive");
}

double gaussian_kernel_density(const Eigen::VectorXd& v, const KernelMatrix& sigma) {
  const int d = static_cast<int>(v.size());
  Eigen::LLT<Eigen::MatrixXd> llt(sigma.matrix());
  if (llt.info() != Eigen::Success) {
    throw conditioning_error("gaussian_kernel_density: kernel matrix not SPD");
  }
  const Eigen::VectorXd z = llt.matrixL().solve(v);
  const double half_logdet = Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  return std::exp(-0.5 * d * std::log(kTwoPi) - half_logdet - 0.5 * z.squaredNorm());
}

FieldRealization simulate_discrete_convolution(const KernelField& field,
                                               const ConvolutionGrid& grid,
                                               const std::vector<Location>& eval_locs,
                                               std::uint64_t seed, int replicates) {
  grid.validate();
  if (replicates < 1) throw input_error("simulate_discrete_convolution: replicates >= 1");
  const int n = static_cast<int>(eval_locs.size());
  const int L = static_cast<int>(grid.locations.size());

  FieldRealization out;
  out.locations = eval_locs;
  out.seed = seed;
  out.values = Eigen::MatrixXd::Zero(replicates, n);
  if (n == 0) return out;

  // Kernel weight matrix is fixed across replicates.
  Eigen::MatrixXd weights(n, L);
  for (int i = 0; i < n; ++i) {
    const KernelMatrix sigma = field.eval(eval_locs[i]);
    for (int l = 0; l < L; ++l) {
      weights(i, l) = gaussian_kernel_density(eval_locs[i] - grid.locations[l], sigma);
    }
  }

  const double sd = std::sqrt(grid.white_noise_variance);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < replicates; ++r) {
    auto rng = make_rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(L);
    for (int l = 0; l < L; ++l) v(l) = sd * normal(rng);
    out.values.row(r) = (weights * v).transpose();
  }
  return out;
}

double discrete_convolution_cov(const KernelField& field, const ConvolutionGrid& grid,
                                const Location& s, const Location& sp) {
  grid.validate();
  const KernelMatrix sigma_s = field.eval(s);
  const KernelMatrix sigma_sp = field.eval(sp);
  double acc = 0.0;
  for (const auto& u : grid.locations) {
    acc += gaussian_kernel_density(s - u, sigma_s) * gaussian_kernel_density(sp - u, sigma_sp);
  }
  return grid.white_noise_variance * acc;
}

double fuentes_cov(const FuentesSpec& spec, const Location& s, const Location& sp) {
  spec.validate();
  const double h = (s - sp).norm();
  double acc = 0.0;
  for (std::size_t l = 0; l < spec.grid.locations.size(); ++l) {
    const Location& u = spec.grid.locations[l];
    const IsotropicParams& p = spec.local_params[l];
    const double local = p.variance * correlation(spec.family, h / p.range, p.smoothness);
    acc += gaussian_kernel_density(s - u, spec.kernel) *
           gaussian_kernel_density(sp - u, spec.kernel) * local;
  }
  return spec.cell_volume * acc;
}

ConvolutionGrid default_convolution_grid(const std::vector<Location>& locs,
                                         const KernelField& field,
                                         int nodes_per_axis,
                                         double white_noise_variance) {
  if (locs.empty()) throw input_error("default_convolution_grid: no locations");
  if (nodes_per_axis < 1) throw input_error("default_convolution_grid: nodes_per_axis >= 1");
  const int d = static_cast<int>(locs[0].size());

  Eigen::VectorXd lo = locs[0], hi = locs[0];
  for (const auto& s : locs) {
    lo = lo.cwiseMin(s);
    hi = hi.cwiseMax(s);
  }
  // Largest kernel standard deviation over the data locations.
  double max_sd = 0.0;
  for (const auto& s : locs) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(field.needs_covariates()
                                                          ? Eigen::MatrixXd::Identity(d, d).eval()
                                                          : field.eval(s).matrix(),
                                                      Eigen::EigenvaluesOnly);
    max_sd = std::max(max_sd, std::sqrt(es.eigenvalues().maxCoeff()));
  }
  const double span = (hi - lo).maxCoeff();
  const double pad = std::max(0.1 * span, 3.0 * max_sd);
  lo.array() -= pad;
  hi.array() += pad;

  ConvolutionGrid grid;
  grid.white_noise_variance = white_noise_variance;
  if (d == 1) {
    for (int i = 0; i < nodes_per_axis; ++i) {
      Location u(1);
      u(0) = nodes_per_axis == 1 ? 0.5 * (lo(0) + hi(0))
                                 : lo(0) + (hi(0) - lo(0)) * i / (nodes_per_axis - 1.0);
      grid.locations.push_back(u);
    }
  } else if (d == 2) {
    for (int j = 0; j < nodes_per_axis; ++j) {
      for (int i = 0; i < nodes_per_axis; ++i) {
        Location u(2);
        u(0) = nodes_per_axis == 1 ? 0.5 * (lo(0) + hi(0))
                                   : lo(0) + (hi(0) - lo(0)) * i / (nodes_per_axis - 1.0);
        u(1) = nodes_per_axis == 1 ? 0.5 * (lo(1) + hi(1))
                                   : lo(1) + (hi(1) - lo(1)) * j / (nodes_per_axis - 1.0);
        grid.locations.push_back(u);
      }
    }
  } else {
    throw input_error("default_convolution_grid: only d = 1, 2 supported");
  }
  return grid;
}

} // namespace nskrig
