#include "nskrig/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "nskrig/errors.hpp"

namespace nskrig {

SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                          const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                          const SimplexOptions& options) {
  const int n = static_cast<int>(x0.size());
  if (n < 1 || step.size() != n) throw input_error("nelder_mead: bad dimensions");

  constexpr double alpha = 1.0; // reflection
  constexpr double gamma = 2.0; // expansion
  constexpr double rho = 0.5;   // contraction
  constexpr double shrink = 0.5;

  std::vector<Eigen::VectorXd> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  for (int i = 0; i < n; ++i) xs[i + 1](i) += step(i);
  for (int i = 0; i <= n; ++i) fs[i] = f(xs[i]);

  std::vector<int> order(n + 1);
  SimplexResult result;
  for (result.iterations = 0; result.iterations < options.max_iterations; ++result.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    const int best = order[0], worst = order[n], second_worst = order[n - 1];

    if (std::abs(fs[worst] - fs[best]) <= options.tolerance) {
      result.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i) {
      if (i != worst) centroid += xs[i];
    }
    centroid /= n;

    Eigen::VectorXd xr = centroid + alpha * (centroid - xs[worst]);
    const double fr = f(xr);
    if (fr < fs[best]) {
      Eigen::VectorXd xe = centroid + gamma * (xr - centroid);
      const double fe = f(xe);
      if (fe < fr) {
        xs[worst] = xe;
        fs[worst] = fe;
      } else {
        xs[worst] = xr;
        fs[worst] = fr;
      }
      continue;
    }
    if (fr < fs[second_worst]) {
      xs[worst] = xr;
      fs[worst] = fr;
      continue;
    }
    Eigen::VectorXd xc = centroid + rho * (xs[worst] - centroid);
    const double fc = f(xc);
    if (fc < fs[worst]) {
      xs[worst] = xc;
      fs[worst] = fc;
      continue;
    }
    for (int i = 0; i <= n; ++i) { // shrink toward the best vertex
      if (i == best) continue;
      xs[i] = xs[best] + shrink * (xs[i] - xs[best]);
      fs[i] = f(xs[i]);
    }
  }

  int best = 0;
  for (int i = 1; i <= n; ++i) {
    if (fs[i] < fs[best]) best = i;
  }
  result.x = xs[best];
  result.value = fs[best];
  return result;
}

} // namespace nskrig
