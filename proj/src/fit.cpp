#include "epidelay/fit.hpp"

#include "epidelay/error.hpp"
#include "epidelay/numerics.hpp"
#include "epidelay/optimize.hpp"
#include "fit_internal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace epidelay {

std::string method_name(FitMethod method) { return method == FitMethod::MLE ? "mle" : "mcmc"; }

FitMethod method_from_name(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "mle") return FitMethod::MLE;
  if (lower == "mcmc") return FitMethod::MCMC;
  throw ValidationError("unknown fit method '" + name + "' (expected mle or mcmc)");
}

// --- parameterization ---------------------------------------------------------

Eigen::Vector2d to_unconstrained(const DelayDistribution& dist) {
  const auto [a, b] = dist.params();
  switch (dist.family()) {
  case Family::Gamma:
  case Family::Weibull:
    return {std::log(a), std::log(b)};
  case Family::Lognormal:
  case Family::Normal:
    return {a, std::log(b)};
  }
  throw ValidationError("unknown family");
}

double natural_coordinate(Family family, int index, double u) {
  const bool first_raw = family == Family::Lognormal || family == Family::Normal;
  return (index == 0 && first_raw) ? u : std::exp(u);
}

DelayDistribution from_unconstrained(Family family, const Eigen::Vector2d& u) {
  return DelayDistribution::from_params(
      family, {natural_coordinate(family, 0, u[0]), natural_coordinate(family, 1, u[1])});
}

std::array<std::string, 2> unconstrained_names(Family family) {
  switch (family) {
  case Family::Gamma:
    return {"log_shape", "log_rate"};
  case Family::Lognormal:
    return {"meanlog", "log_sdlog"};
  case Family::Weibull:
    return {"log_shape", "log_scale"};
  case Family::Normal:
    return {"mean", "log_sd"};
  }
  throw ValidationError("unknown family");
}

void FitOptions::validate() const {
  if (quadrature_nodes < 5) throw ValidationError("fit options: quadrature_nodes must be >= 5");
  if (!(ci_level > 0.0 && ci_level < 1.0)) {
    throw ValidationError("fit options: ci_level must lie in (0, 1)");
  }
  if (restarts < 0) throw ValidationError("fit options: restarts must be >= 0");
  if (method == FitMethod::MCMC) {
    if (mcmc.chains < 2) throw ValidationError("fit options: MCMC needs at least two chains");
    if (mcmc.samples < 4) throw ValidationError("fit options: MCMC needs at least four samples");
    if (mcmc.warmup < 0) throw ValidationError("fit options: warmup must be >= 0");
    if (!(mcmc.target_acceptance > 0.0 && mcmc.target_acceptance < 1.0)) {
      throw ValidationError("fit options: target acceptance must lie in (0, 1)");
    }
    if (!mcmc.inits.empty() && mcmc.inits.size() != static_cast<std::size_t>(mcmc.chains)) {
      throw ValidationError("fit options: one init per chain is required");
    }
  }
  if (priors) {
    for (const auto& p : *priors) {
      if (!(p.scale > 0.0) || !std::isfinite(p.location)) {
        throw ValidationError("fit options: prior scales must be positive");
      }
    }
  }
}

bool FitResult::has_flag(const std::string& flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

Eigen::MatrixXd FitResult::pointwise_matrix() const {
  Eigen::MatrixXd out(pattern_loglik.rows(), static_cast<Eigen::Index>(case_pattern.size()));
  for (std::size_t i = 0; i < case_pattern.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) =
        pattern_loglik.col(static_cast<Eigen::Index>(case_pattern[i]));
  }
  return out;
}

std::array<NormalPrior, 2> default_priors(const Linelist& linelist, Family family) {
  const auto delays = naive_delays(linelist);
  double m = std::accumulate(delays.begin(), delays.end(), 0.0) / static_cast<double>(delays.size());
  double ss = 0.0;
  for (double d : delays) ss += (d - m) * (d - m);
  double s = delays.size() > 1 ? std::sqrt(ss / static_cast<double>(delays.size() - 1)) : 1.0;
  if (family != Family::Normal) m = std::max(m, 0.5);
  s = std::max(s, 0.25);
  DelayDistribution guess = DelayDistribution::normal(m, s);
  try {
    guess = params_from_summary(family, m, s);
  } catch (const Error&) {
    guess = params_from_summary(family, m, std::min(s, m));
  }
  const auto u = to_unconstrained(guess);
  return {NormalPrior{u[0], 1.0}, NormalPrior{u[1], 1.0}};
}

namespace detail {

double loglik_at(const LinelistLikelihood& lik, Family family, const Eigen::Vector2d& u,
                 LinelistLikelihood::Evaluation* out) {
  if (!u.allFinite()) return -numerics::kInf;
  try {
    const auto dist = from_unconstrained(family, u);
    auto ev = lik.evaluate(dist);
    const double v = ev.total;
    if (out) *out = std::move(ev);
    return std::isnan(v) ? -numerics::kInf : v;
  } catch (const Error&) {
    return -numerics::kInf;
  }
}

Eigen::VectorXd summary_vector(const DelayDistribution& dist) {
  Eigen::VectorXd v(kSummarySize);
  v[0] = dist.mean();
  v[1] = dist.sd();
  v[2] = dist.quantile(0.5);
  for (std::size_t i = 0; i < kReportProbabilities.size(); ++i) {
    v[3 + static_cast<Eigen::Index>(i)] = dist.quantile(kReportProbabilities[i]);
  }
  return v;
}

FitResult start_result(const Linelist& linelist, Family family, const AdjustmentSet& adjustments,
                       const FitOptions& options, FitMethod method) {
  options.validate();
  if (linelist.cases.size() < static_cast<std::size_t>(FitResult::dim() + 1)) {
    throw ValidationError("fit: need at least " + std::to_string(FitResult::dim() + 1) +
                          " cases");
  }
  FitResult r;
  r.family = family;
  r.method = method;
  r.adjustments = adjustments;
  r.ci_level = options.ci_level;
  r.diagnostics.parameter_names = unconstrained_names(family);
  r.provenance.n = linelist.cases.size();
  r.provenance.observation_time = resolve_observation_time(linelist, options.observation_time);
  r.provenance.seed = options.seed;
  r.provenance.data_hash = data_hash(linelist);
  r.provenance.quadrature_nodes = options.quadrature_nodes;
  if (method == FitMethod::MCMC) {
    r.provenance.chains = options.mcmc.chains;
    r.provenance.warmup = options.mcmc.warmup;
    r.provenance.samples = options.mcmc.samples;
  }
  return r;
}

double critical_value(double level) { return numerics::inverse_normal_cdf(0.5 + 0.5 * level); }

} // namespace detail

namespace {

void add_flag(FitResult& r, const std::string& flag) {
  if (!r.has_flag(flag)) r.flags.push_back(flag);
}

Estimate delta_interval(double value, double se, double z, bool log_scale) {
  Estimate e{value};
  if (!std::isfinite(se)) return e;
  if (log_scale && value > 0.0) {
    const double sl = se / value;
    e.lower = value * std::exp(-z * sl);
    e.upper = value * std::exp(z * sl);
  } else {
    e.lower = value - z * se;
    e.upper = value + z * se;
  }
  return e;
}

} // namespace

FitResult fit_mle(const Linelist& linelist, Family family, const AdjustmentSet& adjustments,
                  const FitOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  FitOptions opts = options;
  opts.method = FitMethod::MLE;
  FitResult r = detail::start_result(linelist, family, adjustments, opts, FitMethod::MLE);
  const LinelistLikelihood lik(linelist, family, adjustments, r.provenance.observation_time,
                               opts.quadrature_nodes);

  const numerics::Objective objective = [&](const Eigen::VectorXd& u) {
    return -detail::loglik_at(lik, family, Eigen::Vector2d(u));
  };
  const auto prior = default_priors(linelist, family);
  Eigen::VectorXd x0(2);
  x0 << prior[0].location, prior[1].location;

  numerics::NelderMeadOptions nm;
  auto best = numerics::nelder_mead(objective, x0, nm);
  int evaluations = best.evaluations;
  std::mt19937_64 rng(numerics::derive_seed(opts.seed, 0x6d6c65));
  for (int k = 0; k < opts.restarts; ++k) {
    Eigen::VectorXd start = best.x;
    for (Eigen::Index i = 0; i < start.size(); ++i) start[i] += 0.2 * numerics::standard_normal(rng);
    auto run = numerics::nelder_mead(objective, start, nm);
    evaluations += run.evaluations;
    if (run.value < best.value || (run.value == best.value && run.converged && !best.converged)) {
      best = run;
    }
  }
  if (!std::isfinite(best.value)) {
    throw ConvergenceError("fit_mle: no parameter value gives a finite likelihood");
  }
  if (!best.converged) {
    throw ConvergenceError("fit_mle: Nelder-Mead did not converge after restarts");
  }
  r.diagnostics.optimizer_evaluations = evaluations;

  const Eigen::Vector2d u = best.x;
  r.point_unconstrained = u;
  r.point = from_unconstrained(family, u);
  LinelistLikelihood::Evaluation ev;
  r.loglik = detail::loglik_at(lik, family, u, &ev);
  r.aic = 2.0 * FitResult::dim() - 2.0 * r.loglik;
  r.diagnostics.zero_likelihood_cases = ev.zero_likelihood_cases;
  r.diagnostics.clamped_cases = ev.clamped_cases;
  if (ev.zero_likelihood_cases > 0) add_flag(r, kFlagZeroLikelihood);
  if (ev.clamped_cases > 0) add_flag(r, kFlagTruncationClamped);
  r.pointwise_loglik.reserve(lik.n_cases());
  for (std::size_t idx : lik.case_pattern()) r.pointwise_loglik.push_back(ev.pattern_values[idx]);
  r.case_pattern = lik.case_pattern();
  r.pattern_counts = lik.pattern_counts();

  // Observed information and its inverse.
  const Eigen::MatrixXd hess = numerics::finite_difference_hessian(objective, u, 1e-4);
  Eigen::LLT<Eigen::MatrixXd> llt(hess);
  const bool pd = hess.allFinite() && llt.info() == Eigen::Success;
  r.diagnostics.hessian_positive_definite = pd;
  if (pd) {
    r.covariance = llt.solve(Eigen::MatrixXd::Identity(2, 2));
    if (!r.covariance.allFinite() || r.covariance.diagonal().minCoeff() <= 0.0) {
      r.covariance.resize(0, 0);
    }
  }
  const bool intervals = r.covariance.size() == 4;
  if (!intervals) add_flag(r, kFlagIntervalsUnavailable);

  const double z = detail::critical_value(opts.ci_level);
  const auto names = r.point.param_names();
  for (int i = 0; i < 2; ++i) {
    Estimate e{r.point.params()[static_cast<std::size_t>(i)]};
    if (intervals) {
      const double se = std::sqrt(r.covariance(i, i));
      e.lower = natural_coordinate(family, i, u[i] - z * se);
      e.upper = natural_coordinate(family, i, u[i] + z * se);
    }
    r.params[std::string(names[static_cast<std::size_t>(i)])] = e;
  }
  if (family == Family::Gamma) {
    const auto& rate = r.params.at("rate");
    r.params["scale"] = {1.0 / rate.point, 1.0 / rate.upper, 1.0 / rate.lower};
  }

  // Delta method for the summary statistics.
  const Eigen::VectorXd g = detail::summary_vector(r.point);
  Eigen::VectorXd se = Eigen::VectorXd::Constant(g.size(), std::numeric_limits<double>::quiet_NaN());
  if (intervals) {
    const auto jac = numerics::finite_difference_jacobian(
        [family](const Eigen::VectorXd& x) {
          return detail::summary_vector(from_unconstrained(family, Eigen::Vector2d(x)));
        },
        u, 1e-5);
    const Eigen::MatrixXd cov = jac * r.covariance * jac.transpose();
    for (Eigen::Index i = 0; i < g.size(); ++i) se[i] = std::sqrt(std::max(cov(i, i), 0.0));
  }
  const bool positive = r.point.positive_support();
  r.summary.mean = delta_interval(g[0], se[0], z, positive);
  r.summary.sd = delta_interval(g[1], se[1], z, true);
  r.summary.median = delta_interval(g[2], se[2], z, positive);
  for (std::size_t i = 0; i < kReportProbabilities.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(3 + i);
    r.summary.quantiles[kReportProbabilities[i]] = delta_interval(g[k], se[k], z, positive);
  }

  r.provenance.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

FitResult fit(const Linelist& linelist, Family family, const AdjustmentSet& adjustments,
              const FitOptions& options) {
  return options.method == FitMethod::MLE ? fit_mle(linelist, family, adjustments, options)
                                          : fit_mcmc(linelist, family, adjustments, options);
}

// --- comparison ---------------------------------------------------------------------

std::vector<ComparisonRow> compare_models(const std::vector<FitResult>& fits) {
  if (fits.empty()) throw ValidationError("compare: no fits given");
  const auto& first = fits.front();
  for (const auto& f : fits) {
    if (f.method != first.method) throw ValidationError("compare: fits use different methods");
    if (f.provenance.data_hash != first.provenance.data_hash) {
      throw ValidationError("compare: fits were made on different linelists (data hash mismatch)");
    }
    if (!(f.adjustments == first.adjustments)) {
      throw ValidationError("compare: fits use different adjustment sets");
    }
    if (f.method == FitMethod::MCMC && !f.waic) {
      throw ValidationError("compare: MCMC fit without WAIC");
    }
  }
  const bool mle = first.method == FitMethod::MLE;
  std::vector<ComparisonRow> rows;
  for (const auto& f : fits) {
    rows.push_back({f.family, mle ? "aic" : "waic", mle ? f.aic : *f.waic, 0.0, 0, f.loglik});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    if (a.value != b.value) return a.value < b.value;
    return family_name(a.family) < family_name(b.family);
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].rank = static_cast<int>(i + 1);
    rows[i].delta = rows[i].value - rows.front().value;
  }
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "rank,family,criterion,value,delta,loglik\n";
  for (const auto& r : rows) {
    out << r.rank << ',' << family_name(r.family) << ',' << r.criterion << ','
        << format_number(r.value) << ',' << format_number(r.delta) << ','
        << format_number(r.loglik) << '\n';
  }
  return out.str();
}

} // namespace epidelay
