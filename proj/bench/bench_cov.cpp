// Timing comparison of the serial reference covariance assembly against the
// OpenMP build, plus a bitwise-equality check between the two.
#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "nskrig/covspec.hpp"
#include "nskrig/rng.hpp"

using namespace nskrig;

namespace {

double time_ms(const std::function<void()>& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

} // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 1200;
  std::mt19937_64 rng(make_rng(7));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<Location> locs;
  for (int i = 0; i < n; ++i) {
    Location s(2);
    s << unif(rng), unif(rng);
    locs.push_back(s);
  }

  std::vector<Location> basis;
  std::vector<KernelMatrix> kernels;
  for (int iy = 0; iy < 3; ++iy) {
    for (int ix = 0; ix < 3; ++ix) {
      Location b(2);
      b << (ix + 0.5) / 3.0, (iy + 0.5) / 3.0;
      basis.push_back(b);
      kernels.push_back(KernelMatrix::from_spectral(0.04 + 0.02 * ix, 0.01, 0.3 * iy));
    }
  }
  NsModel model;
  model.family = CorrFamily::Matern;
  model.smoothness = ScalarField::constant(1.5);
  model.kernels = KernelField::mixture(basis, kernels, default_bandwidth(basis));
  const CovarianceSpec spec = model;

  Eigen::MatrixXd serial, parallel;
  const double t_serial = time_ms([&] { serial = build_cov_matrix_serial(spec, locs); });
  const double t_parallel = time_ms([&] { parallel = build_cov_matrix(spec, locs); });
  const double diff = (serial - parallel).cwiseAbs().maxCoeff();

  std::printf("n = %d\n", n);
  std::printf("serial reference: %10.2f ms\n", t_serial);
  std::printf("openmp assembly:  %10.2f ms (speedup %.2fx)\n", t_parallel,
              t_serial / t_parallel);
  std::printf("max |serial - parallel| = %g (bitwise equal: %s)\n", diff,
              diff == 0.0 ? "yes" : "NO");
  return diff == 0.0 ? 0 : 1;
}
