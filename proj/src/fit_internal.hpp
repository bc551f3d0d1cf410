#pragma once

#include "epidelay/fit.hpp"

#include <Eigen/Dense>

#include <string>

namespace epidelay::detail {

/// Log-likelihood at unconstrained u; -inf where parameters or tilts are invalid.
double loglik_at(const LinelistLikelihood& lik, Family family, const Eigen::Vector2d& u,
                 LinelistLikelihood::Evaluation* out = nullptr);

/// mean, sd, median, then the eight report quantiles.
inline constexpr int kSummarySize = 3 + static_cast<int>(kReportProbabilities.size());
Eigen::VectorXd summary_vector(const DelayDistribution& dist);

/// Fills the shared header fields of a result and validates the inputs.
FitResult start_result(const Linelist& linelist, Family family, const AdjustmentSet& adjustments,
                       const FitOptions& options, FitMethod method);

/// Two-sided standard normal critical value for a central interval.
double critical_value(double level);

} // namespace epidelay::detail
