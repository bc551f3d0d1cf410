#pragma once

#include "epidelay/adjustments.hpp"
#include "epidelay/distributions.hpp"
#include "epidelay/likelihood.hpp"
#include "epidelay/linelist.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace epidelay {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr std::uint64_t kDefaultSeed = 20240917;

inline constexpr const char* kFlagNotConverged = "not converged";
inline constexpr const char* kFlagIntervalsUnavailable = "intervals unavailable";
inline constexpr const char* kFlagZeroLikelihood = "zero likelihood";
inline constexpr const char* kFlagTruncationClamped = "truncation normalizer clamped";

enum class FitMethod { MLE, MCMC };
std::string method_name(FitMethod method);
FitMethod method_from_name(const std::string& name);

// --- parameterization ---------------------------------------------------------

/// Unconstrained coordinates: logs of positive parameters, the rest as is.
/// Gamma (log shape, log rate); Lognormal (meanlog, log sdlog);
/// Weibull (log shape, log scale); Normal (mean, log sd).
Eigen::Vector2d to_unconstrained(const DelayDistribution& dist);
DelayDistribution from_unconstrained(Family family, const Eigen::Vector2d& u);
std::array<std::string, 2> unconstrained_names(Family family);
/// Maps one unconstrained coordinate to its natural parameter.
double natural_coordinate(Family family, int index, double u);

// --- options --------------------------------------------------------------------

struct NormalPrior {
  double location = 0.0;
  double scale = 1.0;
};

struct McmcOptions {
  int chains = 4;
  int warmup = 1000;
  int samples = 1000;
  double target_acceptance = 0.234;
  /// Scale and covariance adaptation during warmup.
  bool adapt = true;
  /// Unconstrained starting points, one per chain; drawn near the prior when empty.
  std::vector<std::array<double, 2>> inits;
  /// Run chains on separate threads. Results do not depend on this.
  bool parallel = true;
};

struct FitOptions {
  FitMethod method = FitMethod::MLE;
  int quadrature_nodes = 21;
  McmcOptions mcmc;
  std::uint64_t seed = kDefaultSeed;
  /// Normal priors on the unconstrained scale; default centers a moment fit
  /// of the naive delays with unit scale.
  std::optional<std::array<NormalPrior, 2>> priors;
  double ci_level = 0.95;
  /// Overrides the linelist's observation time.
  std::optional<double> observation_time;
  /// Jittered Nelder-Mead restarts after the first run.
  int restarts = 3;

  void validate() const;
};

// --- results --------------------------------------------------------------------

struct Estimate {
  double point = 0.0;
  double lower = std::numeric_limits<double>::quiet_NaN();
  double upper = std::numeric_limits<double>::quiet_NaN();

  bool has_interval() const { return lower == lower && upper == upper; }
  /// Missing bounds compare equal.
  friend bool operator==(const Estimate& a, const Estimate& b) {
    auto same = [](double x, double y) { return x == y || (x != x && y != y); };
    return same(a.point, b.point) && same(a.lower, b.lower) && same(a.upper, b.upper);
  }
};

struct SummaryEstimates {
  Estimate mean;
  Estimate sd;
  Estimate median;
  /// Keyed by the report probabilities.
  std::map<double, Estimate> quantiles;
};

struct FitDiagnostics {
  std::array<std::string, 2> parameter_names;
  // MCMC, per unconstrained parameter.
  std::vector<double> rhat;
  std::vector<double> ess;
  std::vector<double> posterior_mean;
  std::vector<double> mcse;
  /// Acceptance rate of each chain over retained iterations.
  std::vector<double> acceptance;
  // MLE.
  int optimizer_evaluations = 0;
  bool hessian_positive_definite = false;
  std::size_t zero_likelihood_cases = 0;
  std::size_t clamped_cases = 0;
};

struct Provenance {
  std::size_t n = 0;
  std::optional<double> observation_time;
  std::uint64_t seed = 0;
  double runtime_seconds = 0.0;
  std::string version = kVersion;
  std::string data_hash;
  int quadrature_nodes = 21;
  int chains = 0;
  int warmup = 0;
  int samples = 0;
};

struct FitResult {
  Family family = Family::Gamma;
  FitMethod method = FitMethod::MLE;
  AdjustmentSet adjustments;
  double ci_level = 0.95;

  DelayDistribution point = DelayDistribution::gamma(1.0, 1.0);
  Eigen::Vector2d point_unconstrained = Eigen::Vector2d::Zero();
  /// Natural parameters by name; Gamma also carries "scale" = 1 / rate.
  std::map<std::string, Estimate> params;
  SummaryEstimates summary;

  /// MLE: inverse observed information on the unconstrained scale (empty if unavailable).
  Eigen::MatrixXd covariance;
  /// MCMC: retained draws, chain-major rows; unconstrained and natural columns.
  Eigen::MatrixXd draws;
  Eigen::MatrixXd draws_natural;
  std::vector<int> draw_chain;

  /// MLE: per-case log-likelihood at the estimate.
  std::vector<double> pointwise_loglik;
  /// MCMC: per-draw log-likelihood of each window pattern; cases map to
  /// patterns through case_pattern.
  Eigen::MatrixXd pattern_loglik;
  std::vector<std::size_t> case_pattern;
  std::vector<double> pattern_counts;

  double loglik = 0.0;
  double aic = 0.0;
  std::optional<double> waic;
  std::optional<double> lppd;
  std::optional<double> p_waic;

  FitDiagnostics diagnostics;
  std::vector<std::string> flags;
  Provenance provenance;

  static constexpr int dim() { return 2; }
  bool has_flag(const std::string& flag) const;
  bool converged() const { return !has_flag(kFlagNotConverged); }
  /// Per-draw per-case log-likelihood (MCMC), draws by cases.
  Eigen::MatrixXd pointwise_matrix() const;
};

FitResult fit_mle(const Linelist& linelist, Family family, const AdjustmentSet& adjustments,
                  const FitOptions& options = {});
FitResult fit_mcmc(const Linelist& linelist, Family family, const AdjustmentSet& adjustments,
                   const FitOptions& options = {});
/// Dispatches on options.method.
FitResult fit(const Linelist& linelist, Family family, const AdjustmentSet& adjustments,
              const FitOptions& options = {});

/// The default priors for a family given a linelist.
std::array<NormalPrior, 2> default_priors(const Linelist& linelist, Family family);

// --- comparison ---------------------------------------------------------------------

struct ComparisonRow {
  Family family;
  /// "aic" or "waic".
  std::string criterion;
  double value;
  double delta;
  int rank;
  double loglik;
};

/// Ranks fits ascending by AIC (MLE) or WAIC (MCMC), ties by family name.
/// Throws ValidationError for mixed methods, adjustments or data.
std::vector<ComparisonRow> compare_models(const std::vector<FitResult>& fits);
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

// --- serialization -----------------------------------------------------------------

/// Structured JSON document of a fit; draws and pointwise matrices are omitted.
std::string fit_to_json(const FitResult& fit, bool include_runtime = true);
FitResult fit_from_json(const std::string& text);
/// One column per natural parameter, one row per retained draw, plus the chain.
std::string draws_csv(const FitResult& fit);

} // namespace epidelay
