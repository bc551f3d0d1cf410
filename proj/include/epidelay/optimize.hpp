#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace epidelay::numerics {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct NelderMeadOptions {
  double initial_step = 0.1;
  /// Stop when both the value spread and the simplex diameter fall below this.
  double tolerance = 1e-8;
  int max_evaluations = 20000;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Minimizes f. Non-finite values are treated as +inf.
NelderMeadResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0,
                             const NelderMeadOptions& options = {});

/// Central finite-difference Hessian with steps h_i = rel_step * (1 + |x_i|).
Eigen::MatrixXd finite_difference_hessian(const Objective& f, const Eigen::VectorXd& x,
                                          double rel_step = 1e-4);

/// Central finite-difference gradient of a vector-valued map, one column per coordinate.
Eigen::MatrixXd finite_difference_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& g, const Eigen::VectorXd& x,
    double rel_step = 1e-5);

} // namespace epidelay::numerics
