#include "epidelay/diagnostics.hpp"
#include "epidelay/error.hpp"
#include "epidelay/fit.hpp"
#include "epidelay/numerics.hpp"
#include "fit_internal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <random>

namespace epidelay {

namespace {

struct ChainOutput {
  std::vector<Eigen::Vector2d> draws;
  std::vector<std::vector<double>> pattern_values;
  std::size_t accepted = 0;
};

class Posterior {
public:
  Posterior(const LinelistLikelihood& lik, Family family, std::array<NormalPrior, 2> prior)
      : lik_(lik), family_(family), prior_(prior) {}

  double operator()(const Eigen::Vector2d& u, std::vector<double>* patterns) const {
    LinelistLikelihood::Evaluation ev;
    const double ll = detail::loglik_at(lik_, family_, u, &ev);
    if (!(ll > -numerics::kInf)) return -numerics::kInf;
    double lp = ll;
    for (int i = 0; i < 2; ++i) {
      const double zi = (u[i] - prior_[static_cast<std::size_t>(i)].location) /
                        prior_[static_cast<std::size_t>(i)].scale;
      lp -= 0.5 * zi * zi + std::log(prior_[static_cast<std::size_t>(i)].scale);
    }
    if (patterns) *patterns = std::move(ev.pattern_values);
    return lp;
  }

  const std::array<NormalPrior, 2>& prior() const { return prior_; }
  std::size_t n_patterns() const { return lik_.n_patterns(); }

private:
  const LinelistLikelihood& lik_;
  Family family_;
  std::array<NormalPrior, 2> prior_;
};

Eigen::Matrix2d sample_covariance(const std::vector<Eigen::Vector2d>& xs, std::size_t from) {
  const double n = static_cast<double>(xs.size() - from);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (std::size_t i = from; i < xs.size(); ++i) mean += xs[i];
  mean /= n;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (std::size_t i = from; i < xs.size(); ++i) cov += (xs[i] - mean) * (xs[i] - mean).transpose();
  return cov / (n - 1.0);
}

// Adaptive random-walk Metropolis: Robbins-Monro scale toward the target
// acceptance rate and an empirical proposal covariance, both frozen after warmup.
ChainOutput run_chain(const Posterior& post, const McmcOptions& mc, std::uint64_t seed, int chain) {
  std::mt19937_64 rng(numerics::derive_seed(seed, 1000 + static_cast<std::uint64_t>(chain)));
  ChainOutput out;

  Eigen::Vector2d x;
  std::vector<double> patterns;
  double current = -numerics::kInf;
  if (!mc.inits.empty()) {
    const auto& init = mc.inits[static_cast<std::size_t>(chain)];
    x = {init[0], init[1]};
    current = post(x, &patterns);
  } else {
    const auto& prior = post.prior();
    for (int attempt = 0; attempt < 100 && !(current > -numerics::kInf); ++attempt) {
      for (int i = 0; i < 2; ++i) {
        x[i] = prior[static_cast<std::size_t>(i)].location +
               0.5 * prior[static_cast<std::size_t>(i)].scale * numerics::standard_normal(rng);
      }
      current = post(x, &patterns);
    }
    if (!(current > -numerics::kInf)) {
      throw ConvergenceError("fit_mcmc: no starting point with finite posterior density");
    }
  }
  if (patterns.size() != post.n_patterns()) patterns.assign(post.n_patterns(), -numerics::kInf);

  const double base_scale = 2.38 / std::sqrt(2.0);
  Eigen::Matrix2d chol = 0.1 * Eigen::Matrix2d::Identity();
  double log_lambda = 0.0;
  bool empirical = false;
  std::vector<Eigen::Vector2d> history;
  const int total = mc.warmup + mc.samples;
  out.draws.reserve(static_cast<std::size_t>(mc.samples));
  out.pattern_values.reserve(static_cast<std::size_t>(mc.samples));

  std::vector<double> proposal_patterns;
  for (int t = 0; t < total; ++t) {
    const Eigen::Vector2d z(numerics::standard_normal(rng), numerics::standard_normal(rng));
    const Eigen::Vector2d prop = x + std::exp(log_lambda) * (chol * z);
    const double lp = post(prop, &proposal_patterns);
    double alpha = 0.0;
    if (lp > -numerics::kInf) {
      alpha = current > -numerics::kInf ? std::min(1.0, std::exp(lp - current)) : 1.0;
    }
    const bool accept = numerics::open_uniform(rng) < alpha;
    if (accept) {
      x = prop;
      current = lp;
      patterns.swap(proposal_patterns);
    }

    if (t < mc.warmup) {
      if (!mc.adapt) continue;
      log_lambda += std::pow(t + 1.0, -0.6) * (alpha - mc.target_acceptance);
      log_lambda = std::clamp(log_lambda, -20.0, 20.0);
      history.push_back(x);
      const auto seen = static_cast<std::size_t>(t + 1);
      if (seen >= 100 && seen % 50 == 0) {
        const Eigen::Matrix2d cov =
            sample_covariance(history, seen / 2) + 1e-12 * Eigen::Matrix2d::Identity();
        Eigen::LLT<Eigen::Matrix2d> llt(cov);
        if (cov.allFinite() && llt.info() == Eigen::Success) {
          chol = base_scale * Eigen::Matrix2d(llt.matrixL());
          if (!empirical) log_lambda = 0.0;
          empirical = true;
        }
      }
      continue;
    }
    if (accept) ++out.accepted;
    out.draws.push_back(x);
    out.pattern_values.push_back(patterns);
  }
  if (!chol.allFinite()) throw ConvergenceError("fit_mcmc: degenerate proposal covariance");
  return out;
}

Estimate equal_tailed(std::vector<double> values, double level) {
  std::erase_if(values, [](double v) { return !std::isfinite(v); });
  if (values.empty()) return Estimate{std::numeric_limits<double>::quiet_NaN()};
  return {diagnostics::quantile(values, 0.5), diagnostics::quantile(values, 0.5 - 0.5 * level),
          diagnostics::quantile(values, 0.5 + 0.5 * level)};
}

} // namespace

FitResult fit_mcmc(const Linelist& linelist, Family family, const AdjustmentSet& adjustments,
                   const FitOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  FitOptions opts = options;
  opts.method = FitMethod::MCMC;
  FitResult r = detail::start_result(linelist, family, adjustments, opts, FitMethod::MCMC);
  const LinelistLikelihood lik(linelist, family, adjustments, r.provenance.observation_time,
                               opts.quadrature_nodes);
  const Posterior post(lik, family, opts.priors ? *opts.priors : default_priors(linelist, family));
  const auto& mc = opts.mcmc;

  std::vector<ChainOutput> chains(static_cast<std::size_t>(mc.chains));
  if (mc.parallel) {
    std::vector<std::future<ChainOutput>> jobs;
    for (int c = 0; c < mc.chains; ++c) {
      jobs.push_back(std::async(std::launch::async,
                                [&, c] { return run_chain(post, mc, opts.seed, c); }));
    }
    for (int c = 0; c < mc.chains; ++c) chains[static_cast<std::size_t>(c)] = jobs[static_cast<std::size_t>(c)].get();
  } else {
    for (int c = 0; c < mc.chains; ++c) chains[static_cast<std::size_t>(c)] = run_chain(post, mc, opts.seed, c);
  }

  const auto s = static_cast<std::size_t>(mc.samples);
  const auto rows = static_cast<Eigen::Index>(chains.size() * s);
  const auto n_pat = static_cast<Eigen::Index>(lik.n_patterns());
  r.draws.resize(rows, 2);
  r.draws_natural.resize(rows, 2);
  r.pattern_loglik.resize(rows, n_pat);
  for (std::size_t c = 0; c < chains.size(); ++c) {
    r.diagnostics.acceptance.push_back(static_cast<double>(chains[c].accepted) / static_cast<double>(s));
    for (std::size_t i = 0; i < s; ++i) {
      const auto row = static_cast<Eigen::Index>(c * s + i);
      const auto& u = chains[c].draws[i];
      r.draws.row(row) = u.transpose();
      r.draws_natural(row, 0) = natural_coordinate(family, 0, u[0]);
      r.draws_natural(row, 1) = natural_coordinate(family, 1, u[1]);
      r.draw_chain.push_back(static_cast<int>(c));
      for (Eigen::Index j = 0; j < n_pat; ++j) {
        r.pattern_loglik(row, j) = chains[c].pattern_values[i][static_cast<std::size_t>(j)];
      }
    }
  }
  r.case_pattern = lik.case_pattern();
  r.pattern_counts = lik.pattern_counts();

  bool converged = true;
  for (int p = 0; p < 2; ++p) {
    diagnostics::Chains per_chain;
    for (const auto& ch : chains) {
      std::vector<double> v;
      for (const auto& d : ch.draws) v.push_back(d[p]);
      per_chain.push_back(std::move(v));
    }
    const double rhat = diagnostics::split_rhat(per_chain);
    r.diagnostics.rhat.push_back(rhat);
    r.diagnostics.ess.push_back(diagnostics::ess_bulk(per_chain));
    r.diagnostics.mcse.push_back(diagnostics::mcse_mean(per_chain));
    r.diagnostics.posterior_mean.push_back(r.draws.col(p).mean());
    if (!(rhat <= 1.05)) converged = false;
  }
  if (!converged) r.flags.push_back(kFlagNotConverged);

  // Posterior medians and equal-tailed intervals.
  Eigen::Vector2d med;
  for (int p = 0; p < 2; ++p) {
    med[p] = diagnostics::quantile(std::vector<double>(r.draws.col(p).begin(), r.draws.col(p).end()), 0.5);
  }
  r.point_unconstrained = med;
  r.point = from_unconstrained(family, med);
  const auto names = r.point.param_names();
  for (int p = 0; p < 2; ++p) {
    r.params[std::string(names[static_cast<std::size_t>(p)])] = equal_tailed(
        std::vector<double>(r.draws_natural.col(p).begin(), r.draws_natural.col(p).end()),
        opts.ci_level);
  }
  if (family == Family::Gamma) {
    std::vector<double> scale;
    for (Eigen::Index i = 0; i < rows; ++i) scale.push_back(1.0 / r.draws_natural(i, 1));
    r.params["scale"] = equal_tailed(scale, opts.ci_level);
  }

  std::vector<std::vector<double>> stats(detail::kSummarySize);
  for (Eigen::Index i = 0; i < rows; ++i) {
    Eigen::VectorXd g = Eigen::VectorXd::Constant(detail::kSummarySize, std::numeric_limits<double>::quiet_NaN());
    try {
      g = detail::summary_vector(from_unconstrained(family, Eigen::Vector2d(r.draws.row(i).transpose())));
    } catch (const Error&) {
    }
    for (int k = 0; k < detail::kSummarySize; ++k) stats[static_cast<std::size_t>(k)].push_back(g[k]);
  }
  r.summary.mean = equal_tailed(stats[0], opts.ci_level);
  r.summary.sd = equal_tailed(stats[1], opts.ci_level);
  r.summary.median = equal_tailed(stats[2], opts.ci_level);
  for (std::size_t i = 0; i < kReportProbabilities.size(); ++i) {
    r.summary.quantiles[kReportProbabilities[i]] = equal_tailed(stats[3 + i], opts.ci_level);
  }

  LinelistLikelihood::Evaluation ev;
  r.loglik = detail::loglik_at(lik, family, med, &ev);
  r.aic = 2.0 * FitResult::dim() - 2.0 * r.loglik;
  r.diagnostics.zero_likelihood_cases = ev.zero_likelihood_cases;
  r.diagnostics.clamped_cases = ev.clamped_cases;
  if (ev.zero_likelihood_cases > 0) r.flags.push_back(kFlagZeroLikelihood);
  if (ev.clamped_cases > 0) r.flags.push_back(kFlagTruncationClamped);

  const auto w = diagnostics::waic_weighted(r.pattern_loglik, r.pattern_counts);
  r.waic = w.waic;
  r.lppd = w.lppd;
  r.p_waic = w.p_waic;

  r.provenance.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

} // namespace epidelay
