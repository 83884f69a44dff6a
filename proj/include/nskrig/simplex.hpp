#ifndef NSKRIG_SIMPLEX_HPP
#define NSKRIG_SIMPLEX_HPP

#include <functional>

#include <Eigen/Dense>

namespace nskrig {

struct SimplexOptions {
  int max_iterations = 600;
  double tolerance = 1e-9; // absolute spread of simplex values at convergence
};

struct SimplexResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Nelder-Mead minimization with standard reflection/expansion/contraction
// coefficients. Deterministic: the iteration sequence depends only on the
// objective, start point, and step sizes.
SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                          const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                          const SimplexOptions& options = {});

} // namespace nskrig

#endif
