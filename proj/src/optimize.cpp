#include "epidelay/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace epidelay::numerics {

namespace {

double safe(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::infinity(); }

} // namespace

NelderMeadResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0,
                             const NelderMeadOptions& options) {
  const Eigen::Index n = x0.size();
  NelderMeadResult result;
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    return safe(f(x));
  };

  std::vector<Eigen::VectorXd> simplex{x0};
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd v = x0;
    v[i] += options.initial_step * std::max(1.0, std::abs(x0[i]));
    simplex.push_back(v);
  }
  std::vector<double> values;
  for (const auto& v : simplex) values.push_back(eval(v));
  std::vector<std::size_t> order(simplex.size());

  // Standard coefficients: reflection 1, expansion 2, contraction 1/2, shrink 1/2.
  while (evals < options.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];

    double diameter = 0.0;
    for (const auto& v : simplex) {
      diameter = std::max(diameter, (v - simplex[best]).lpNorm<Eigen::Infinity>());
    }
    const double spread = values[worst] - values[best];
    if (std::isfinite(values[best]) && spread <= options.tolerance * (1.0 + std::abs(values[best])) &&
        diameter <= options.tolerance * (1.0 + simplex[best].lpNorm<Eigen::Infinity>())) {
      result.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i != worst) centroid += simplex[i];
    }
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
    const double fr = eval(reflected);
    if (fr < values[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const Eigen::VectorXd contracted = outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                                               : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
    const double fc = eval(contracted);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
      values[i] = eval(simplex[i]);
    }
  }

  const auto it = std::min_element(values.begin(), values.end());
  result.x = simplex[static_cast<std::size_t>(it - values.begin())];
  result.value = *it;
  result.evaluations = evals;
  return result;
}

Eigen::MatrixXd finite_difference_hessian(const Objective& f, const Eigen::VectorXd& x,
                                          double rel_step) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd h(n);
  for (Eigen::Index i = 0; i < n; ++i) h[i] = rel_step * (1.0 + std::abs(x[i]));
  const double f0 = f(x);
  Eigen::MatrixXd hess(n, n);
  auto at = [&](Eigen::Index i, double si, Eigen::Index j, double sj) {
    Eigen::VectorXd y = x;
    y[i] += si * h[i];
    y[j] += sj * h[j];
    return f(y);
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    hess(i, i) = (at(i, 1, i, 0) - 2.0 * f0 + at(i, -1, i, 0)) / (h[i] * h[i]);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v =
          (at(i, 1, j, 1) - at(i, 1, j, -1) - at(i, -1, j, 1) + at(i, -1, j, -1)) / (4.0 * h[i] * h[j]);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

Eigen::MatrixXd finite_difference_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& g, const Eigen::VectorXd& x,
    double rel_step) {
  const Eigen::VectorXd g0 = g(x);
  Eigen::MatrixXd jac(g0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * (1.0 + std::abs(x[i]));
    Eigen::VectorXd up = x;
    Eigen::VectorXd down = x;
    up[i] += h;
    down[i] -= h;
    jac.col(i) = (g(up) - g(down)) / (2.0 * h);
  }
  return jac;
}

} // namespace epidelay::numerics
