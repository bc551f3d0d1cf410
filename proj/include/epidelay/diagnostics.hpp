#pragma once

#include <Eigen/Dense>

#include <vector>

namespace epidelay::diagnostics {

/// Draws of one scalar, one inner vector per chain (equal lengths).
using Chains = std::vector<std::vector<double>>;

/// Rank-normalized split R-hat: the larger of the bulk and folded values.
/// Infinite when chains are internally constant but disagree.
double split_rhat(const Chains& chains);

/// Bulk effective sample size of rank-normalized split chains.
double ess_bulk(const Chains& chains);

/// Effective sample size of the raw split chains (for Monte Carlo error of the mean).
double ess_mean(const Chains& chains);

/// Monte Carlo standard error of the posterior mean.
double mcse_mean(const Chains& chains);

struct Waic {
  double waic = 0.0;
  double lppd = 0.0;
  double p_waic = 0.0;
};

/// WAIC from a draws-by-observations log-likelihood matrix:
/// -2 (lppd - p_waic) with p_waic the summed sample variances.
Waic waic(const Eigen::MatrixXd& pointwise);

/// Same, with identical columns collapsed and weighted by `counts`.
Waic waic_weighted(const Eigen::MatrixXd& pointwise, const std::vector<double>& counts);

/// Type-7 sample quantile.
double quantile(std::vector<double> values, double p);

} // namespace epidelay::diagnostics
