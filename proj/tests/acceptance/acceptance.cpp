// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Pass criterion numbers as arguments to run a subset.

#include "epidelay/adjustments.hpp"
#include "epidelay/calibration.hpp"
#include "epidelay/diagnostics.hpp"
#include "epidelay/distributions.hpp"
#include "epidelay/error.hpp"
#include "epidelay/fit.hpp"
#include "epidelay/likelihood.hpp"
#include "epidelay/numerics.hpp"
#include "epidelay/reporting.hpp"
#include "epidelay/synthdata.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace epidelay;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::string fmt(double x) { return format_number(x); }

Linelist simulate(const DelayDistribution& truth, std::size_t n, double r, double duration,
                  std::optional<double> t, std::uint64_t seed) {
  OutbreakScenario sc;
  sc.true_dist = truth;
  sc.seed = seed;
  sc.observation.n_cases = n;
  sc.observation.growth_rate = r;
  sc.observation.duration = duration;
  sc.observation.truncation_time = t;
  return simulate_linelist(sc).linelist;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Independent tilt oracle: integrate f(x) e^{-rx} and x f(x) e^{-rx} directly.
std::pair<double, double> tilt_oracle(const DelayDistribution& d, double r) {
  auto weight = [&](double x) {
    const double lp = d.log_pdf(x);
    return std::isfinite(lp) ? std::exp(lp - r * x) : 0.0;
  };
  double z = 0.0;
  double m = 0.0;
  if (d.family() == Family::Normal) {
    boost::math::quadrature::sinh_sinh<double> q;
    z = q.integrate(weight);
    m = q.integrate([&](double x) { return x * weight(x); });
  } else {
    boost::math::quadrature::exp_sinh<double> q;
    z = q.integrate(weight, 0.0, std::numeric_limits<double>::infinity());
    m = q.integrate([&](double x) { return x * weight(x); }, 0.0,
                    std::numeric_limits<double>::infinity());
  }
  return {std::log(z), m / z};
}

// --- criteria ------------------------------------------------------------------------

Outcome criterion1() {
  Outcome o;
  const double r = 0.1;
  struct Case {
    DelayDistribution base;
    DelayDistribution expected;
  };
  const Case cases[] = {{DelayDistribution::gamma(2.0, 0.5), DelayDistribution::gamma(2.0, 0.6)},
                        {DelayDistribution::normal(5.0, 2.0), DelayDistribution::normal(4.6, 2.0)}};
  double worst = 0.0;
  for (const auto& c : cases) {
    const auto t = tilt(c.base, r);
    o.require(t.closed_form().has_value(), "closed form available");
    if (!t.closed_form()) continue;
    for (int i = 0; i < 2; ++i) {
      o.require(std::abs(t.closed_form()->params()[i] - c.expected.params()[i]) < 1e-12,
                "tilted parameters");
    }
    const auto [log_z, mean] = tilt_oracle(c.base, r);
    const double e1 = std::abs(t.log_normalizer() - log_z);
    const double e2 = std::abs(t.mean() - mean);
    worst = std::max({worst, e1, e2});
    o.require(e1 < 1e-6, "log-normalizer vs quadrature");
    o.require(e2 < 1e-6, "mean vs quadrature");

    const auto fwd = forward_from_backward(*t.closed_form(), r);
    o.require(fwd.closed_form().has_value(), "inverse closed form");
    if (fwd.closed_form()) {
      for (int i = 0; i < 2; ++i) {
        o.require(std::abs(fwd.closed_form()->params()[i] - c.base.params()[i]) < 1e-12,
                  "backward_to_forward restores parameters");
      }
    }
    const auto back = backward_to_forward(*t.closed_form(), r);
    o.require(rel_err(back.mean, c.base.mean()) < 1e-12, "backward_to_forward mean");
    o.require(rel_err(back.sd, c.base.sd()) < 1e-12, "backward_to_forward sd");
  }
  const auto g = tilt(DelayDistribution::gamma(2.0, 0.5), r);
  o.detail << "Gamma(2,0.5)->Gamma(" << fmt(g.closed_form()->params()[0]) << ","
           << fmt(g.closed_form()->params()[1]) << "), tilted mean " << fmt(g.mean())
           << "; max oracle gap " << fmt(worst);
  return o;
}

Outcome criterion2() {
  Outcome o;
  const std::vector<double> means = {0.5, 1.0, 5.0, 20.0};
  const std::vector<double> sds = {0.25, 1.0, 5.0};
  double worst = 0.0;
  int checked = 0;
  for (Family f : {Family::Gamma, Family::Lognormal, Family::Weibull, Family::Normal}) {
    auto grid = means;
    if (f == Family::Normal) grid.insert(grid.end(), {-3.0, 0.0});
    for (double m : grid) {
      for (double s : sds) {
        const auto d = params_from_summary(f, m, s);
        const auto back = summary_from_params(d);
        const double e = std::max(rel_err(back.mean, m), rel_err(back.sd, s));
        worst = std::max(worst, std::isfinite(e) ? e : 1.0);
        ++checked;
        // Also natural -> summary -> natural.
        const auto again = params_from_summary(f, d.mean(), d.sd());
        for (int i = 0; i < 2; ++i) {
          worst = std::max(worst, rel_err(again.params()[i], d.params()[i]));
        }
      }
    }
  }
  o.require(worst < 1e-9, "relative error < 1e-9");
  o.detail << checked << " grid points, max relative error " << fmt(worst);
  return o;
}

// Midpoint rule on an n x n grid over the primary and secondary windows.
double brute_force(const DelayDistribution& d, double p_lo, double p_hi, double s_lo, double s_hi,
                   int n) {
  const double hp = (p_hi - p_lo) / n;
  const double hs = (s_hi - s_lo) / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double p = p_lo + (i + 0.5) * hp;
    for (int j = 0; j < n; ++j) sum += d.pdf(s_lo + (j + 0.5) * hs - p);
  }
  return sum * hp * hs / ((p_hi - p_lo) * (s_hi - s_lo));
}

Outcome criterion3() {
  Outcome o;
  const auto g = DelayDistribution::gamma(2.0, 0.5);
  auto record = [](double p_lo, double p_hi, double s_lo, double s_hi) {
    return CaseRecord{"x", EventWindow::interval(p_lo, p_hi), EventWindow::interval(s_lo, s_hi), {}, true};
  };
  double worst = 0.0;
  // Windows where the delay stays non-negative, so the midpoint rule sees a smooth integrand.
  for (auto [p, s] : std::vector<std::pair<double, double>>{{0, 5}, {0, 1}, {3, 12}, {2, 4}, {0, 2}}) {
    const double oracle = std::log(brute_force(g, p, p + 1, s, s + 1, 200));
    const double ll =
        loglik_case(g, record(p, p + 1, s, s + 1), AdjustmentSet::censoring_only(), std::nullopt).value;
    worst = std::max(worst, std::abs(ll - oracle));
  }
  o.require(worst < 1e-5, "daily windows vs 200x200 brute force");

  const double eps = 1e-6;
  const auto c = record(0, eps, 5, 5 + eps);
  const double logf5 = g.log_pdf(5.0);
  const double logF10 = std::log(g.cdf(10.0));
  const double plain = loglik_case(g, c, AdjustmentSet::censoring_only(), std::nullopt).value;
  const double trunc = loglik_case(g, c, AdjustmentSet::censoring_and_truncation(), 10.0).value;
  o.require(std::abs(plain - logf5) < 1e-6, "degenerate windows give ln f(5)");
  o.require(std::abs(trunc - (logf5 - logF10)) < 1e-6, "degenerate windows give ln f(5) - ln F(10)");
  o.detail << "max brute-force gap " << fmt(worst) << "; |ll - ln f(5)| = " << fmt(std::abs(plain - logf5))
           << "; |ll - (ln f(5) - ln F(10))| = " << fmt(std::abs(trunc - (logf5 - logF10)));
  return o;
}

Outcome criterion4() {
  Outcome o;
  // Lognormal with mean 10 and sdlog 0.5.
  const double sdlog = 0.5;
  const auto truth = DelayDistribution::lognormal(std::log(10.0) - 0.5 * sdlog * sdlog, sdlog);
  const auto ll = simulate(truth, 19500, 0.3, 21.0, 21.0, 2024);
  const double naive = mean_of(naive_delays(ll));
  const auto fit = fit_mle(ll, Family::Lognormal, AdjustmentSet::censoring_and_truncation());
  const auto& m = fit.summary.mean;
  o.require(std::abs(truth.mean() - 10.0) < 1e-12, "true mean is 10");
  o.require(naive <= 0.7 * truth.mean(), "naive mean <= 0.7 x true mean");
  o.require(m.lower <= truth.mean() && truth.mean() <= m.upper, "adjusted 95% interval covers truth");

  const auto truth2 = DelayDistribution::lognormal(1.0, 0.5);
  const auto ll2 = simulate(truth2, 3500, 0.2, 30.0, 30.0, 2025);
  const auto fit2 = fit_mle(ll2, Family::Lognormal, AdjustmentSet::censoring_and_truncation());
  const double rel = rel_err(fit2.summary.mean.point, truth2.mean());
  o.require(std::abs(truth2.mean() - 3.08) < 0.005, "second scenario mean is 3.08");
  o.require(rel < 0.10, "r = 0.2 adjusted mean within 10%");

  o.detail << "r=0.3: n=" << ll.cases.size() << ", naive mean " << fmt(naive) << " (ratio "
           << fmt(naive / truth.mean()) << "), adjusted " << fmt(m.point) << " [" << fmt(m.lower) << ", "
           << fmt(m.upper) << "]; r=0.2: n=" << ll2.cases.size() << ", adjusted "
           << fmt(fit2.summary.mean.point) << " vs " << fmt(truth2.mean()) << " (rel err " << fmt(rel)
           << ")";
  return o;
}

Outcome criterion5() {
  Outcome o;
  const auto truth = DelayDistribution::normal(5.0, 0.6);
  const auto ll = simulate(truth, 5000, 0.0, 30.0, std::nullopt, 55);
  const auto naive = naive_delays(ll);
  const double naive_sd = sd_of(naive);
  // Two independent U(-1/2, 1/2) terms add 2/12 to the variance.
  const double predicted = std::sqrt(0.36 + 2.0 / 12.0);
  // Standard error of a sample sd, from the fourth moment of the naive delays.
  double m4 = 0.0;
  const double mu = mean_of(naive);
  for (double x : naive) m4 += std::pow(x - mu, 4);
  m4 /= static_cast<double>(naive.size());
  const double var = naive_sd * naive_sd;
  const double se = std::sqrt((m4 - var * var) / static_cast<double>(naive.size())) / (2.0 * naive_sd);
  const auto fit = fit_mle(ll, Family::Normal, AdjustmentSet::censoring_only());
  const double adjusted_sd = fit.summary.sd.point;
  o.require(naive_sd - 0.6 >= predicted - 0.6, "naive sd inflation reaches the variance-addition prediction");
  o.require(rel_err(adjusted_sd, 0.6) < 0.10, "adjusted sd within 10%");
  o.detail << "naive sd " << fmt(naive_sd) << " (inflation " << fmt(naive_sd - 0.6) << ", predicted "
           << fmt(predicted - 0.6) << ", SE " << fmt(se) << "); adjusted sd " << fmt(adjusted_sd);
  return o;
}

Outcome criterion6() {
  Outcome o;
  const auto truth = DelayDistribution::gamma(2.0, 0.4);
  const double duration = 40.0;
  for (double r : {0.15, -0.15}) {
    const auto ll = simulate(truth, 20000, r, duration, std::nullopt, r > 0 ? 61 : 62);
    const auto all = naive_delays(ll);
    const double fwd = mean_of(all);
    const double fwd_se = sd_of(all) / std::sqrt(static_cast<double>(all.size()));
    // Late backward cohorts: secondary events in the final week of the primary period.
    std::vector<double> late;
    for (const auto& c : cohort(ll, Direction::Backward, 7.0)) {
      if (c.bin != static_cast<std::int64_t>(duration / 7.0) - 1) continue;
      Linelist sub;
      sub.cases = c.cases;
      for (double d : naive_delays(sub)) late.push_back(d);
    }
    const double bwd = mean_of(late);
    const double bwd_se = sd_of(late) / std::sqrt(static_cast<double>(late.size()));
    const double se = std::hypot(fwd_se, bwd_se);
    const double margin = r > 0 ? fwd - bwd : bwd - fwd;
    o.require(margin > 3.0 * se, r > 0 ? "growing: backward below forward by 3 SE"
                                       : "declining: backward above forward by 3 SE");
    o.detail << "r=" << fmt(r) << ": forward " << fmt(fwd) << ", late backward " << fmt(bwd) << " (n="
             << late.size() << "), margin " << fmt(margin / se) << " SE; ";
  }
  return o;
}

Outcome criterion7() {
  Outcome o;
  // Stationary synthetic chains.
  std::mt19937_64 rng(7);
  diagnostics::Chains iid(4);
  for (auto& c : iid) {
    for (int i = 0; i < 1000; ++i) c.push_back(numerics::standard_normal(rng));
  }
  const double rhat = diagnostics::split_rhat(iid);
  const double ess = diagnostics::ess_bulk(iid);
  o.require(rhat >= 0.99 && rhat <= 1.01, "stationary R-hat in [0.99, 1.01]");
  o.require(ess >= 0.5 * 4000, "stationary ESS >= half the draws");

  const auto small = simulate(DelayDistribution::normal(5.0, 1.0), 200, 0.0, 30.0, std::nullopt, 3);
  FitOptions bad;
  bad.method = FitMethod::MCMC;
  bad.mcmc.chains = 2;
  bad.mcmc.warmup = 0;
  bad.mcmc.samples = 10;
  bad.mcmc.adapt = false;
  bad.mcmc.inits = {{10.0, 10.0}, {-10.0, -10.0}};
  const auto unmixed = fit_mcmc(small, Family::Normal, AdjustmentSet::censoring_only(), bad);
  o.require(!unmixed.converged(), "unmixed chains flagged");

  const auto big = simulate(DelayDistribution::gamma(2.0, 0.5), 20000, 0.0, 30.0, std::nullopt, 17);
  const auto mle = fit_mle(big, Family::Gamma, AdjustmentSet::censoring_only());
  FitOptions opts;
  opts.method = FitMethod::MCMC;
  opts.seed = 5;
  const auto post = fit_mcmc(big, Family::Gamma, AdjustmentSet::censoring_only(), opts);
  double worst = 0.0;
  for (std::size_t p = 0; p < 2; ++p) {
    const double z = std::abs(post.diagnostics.posterior_mean[p] - mle.point_unconstrained[static_cast<int>(p)]) /
                     post.diagnostics.mcse[p];
    worst = std::max(worst, z);
  }
  o.require(worst <= 2.0, "posterior means within 2 MCSE of the MLE");

  const Eigen::MatrixXd pw = post.pointwise_matrix();
  const double s = static_cast<double>(pw.rows());
  long double lppd = 0.0L;
  long double pwaic = 0.0L;
  for (Eigen::Index j = 0; j < pw.cols(); ++j) {
    const auto col = pw.col(j);
    const double mx = col.maxCoeff();
    double term = mx;
    term += std::log((col.array() - mx).exp().sum() / s);
    lppd += term;
    pwaic += (col.array() - col.mean()).square().sum() / (s - 1.0);
  }
  const double waic = -2.0 * (static_cast<double>(lppd) - static_cast<double>(pwaic));
  const double gap = std::abs(waic - post.waic.value_or(NAN));
  o.require(gap < 1e-9, "WAIC recomputed from pointwise matrix");
  o.detail << "iid R-hat " << fmt(rhat) << ", ESS " << fmt(ess) << "; unmixed R-hat "
           << fmt(unmixed.diagnostics.rhat[0]) << "; max |post - MLE| / MCSE " << fmt(worst)
           << "; WAIC gap " << fmt(gap);
  return o;
}

Outcome criterion8() {
  Outcome o;
  int contexts = 0;
  int emitted = 0;
  for (int real : {0, 1}) {
    for (Direction dir : {Direction::Forward, Direction::Backward}) {
      for (int known : {0, 1}) {
        for (int early : {0, 1}) {
          DecisionContext c;
          c.real_time = real;
          c.modeling_direction = dir;
          c.growth_rate_known = known;
          c.growth_rate = 0.1;
          c.surveillance_ended_early = early;
          ++contexts;
          try {
            const auto a = decide_adjustments(c);
            ++emitted;
            o.require(!(a.right_truncation() && a.dynamical_rate()), "never truncation with dynamical");
            o.require(a.double_censoring(), "double censoring always adjusted");
          } catch (const ValidationError&) {
            o.require(dir == Direction::Backward && !known, "only backward without r is rejected");
          }
        }
      }
    }
  }
  bool rejects = false;
  try {
    AdjustmentSet(true, true, 0.1, Direction::Backward);
  } catch (const ValidationError&) {
    rejects = true;
  }
  o.require(rejects, "AdjustmentSet rejects truncation with dynamical");

  DecisionContext retro;
  DecisionContext real;
  real.real_time = true;
  DecisionContext back;
  back.modeling_direction = Direction::Backward;
  back.growth_rate_known = true;
  back.growth_rate = 0.1;
  o.require(decide_adjustments(retro) == AdjustmentSet::censoring_only(), "retrospective forward complete");
  o.require(decide_adjustments(real) == AdjustmentSet::censoring_and_truncation(), "real-time forward");
  o.require(decide_adjustments(back) == AdjustmentSet::dynamical(0.1), "backward with known r");
  o.detail << contexts << " contexts, " << emitted << " adjustment sets; mappings "
           << decide_adjustments(retro).describe() << ", " << decide_adjustments(real).describe() << ", "
           << decide_adjustments(back).describe();
  return o;
}

Outcome criterion9() {
  Outcome o;
  OutbreakScenario sc;
  sc.true_dist = DelayDistribution::lognormal(1.0, 0.5);
  sc.seed = 91;
  sc.observation.n_cases = 1200;
  sc.observation.growth_rate = 0.1;
  sc.observation.truncation_time = 30.0;
  sc.strata = {{"sex", {"f", "m"}}};
  const auto ll = simulate_linelist(sc).linelist;
  const auto adj = AdjustmentSet::censoring_and_truncation();
  const auto fit = fit_mle(ll, Family::Lognormal, adj);
  ReportConfig cfg;
  cfg.unadjusted_fit = fit_mle(ll, Family::Lognormal, AdjustmentSet::censoring_only());
  cfg.comparison = compare_models({fit, fit_mle(ll, Family::Gamma, adj), fit_mle(ll, Family::Weibull, adj)});
  const auto other = simulate(DelayDistribution::gamma(3.0, 1.0), 300, 0.0, 30.0, std::nullopt, 92);
  const auto ofit = fit_mle(other, Family::Gamma, AdjustmentSet::censoring_only());
  cfg.other_intervals = {{"onset to report", "gamma", ofit.summary.mean, ofit.summary.sd}};
  cfg.multiple_exposure_note = "One exposure window per case.";
  cfg.data_reference = "data.csv";
  const auto curve = epidemic_curve(ll);
  const auto full = build_report(fit, ll, curve, estimate_growth_rate(curve), cfg);
  const auto score = checklist_score(full);
  o.require(score.fraction == 1.0, "full pipeline scores 1.0");

  std::set<double> keys;
  for (const auto& q : full.quantile_table) keys.insert(q.probability);
  o.require(keys == std::set<double>{0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975, 0.99}, "quantile keys");
  o.require(full.quantile_table.size() == 8, "eight quantile rows");
  o.require(report_from_json(render_json(full)) == full, "JSON round trip");

  const auto without = build_report(fit, ll, std::nullopt, std::nullopt, cfg);
  const auto s2 = checklist_score(without);
  o.require(s2.missing == std::vector<std::string>{checklist::kEpidemicCurve},
            "removing the curve drops exactly one item");
  o.detail << "score " << fmt(score.fraction) << " over " << full.checklist.size() << " items; without curve "
           << fmt(s2.fraction) << " missing " << (s2.missing.empty() ? "" : s2.missing[0]);
  return o;
}

Outcome criterion10() {
  Outcome o;
  SbcConfig cfg;
  cfg.scenario.true_dist = DelayDistribution::lognormal(1.0, 0.5);
  cfg.scenario.observation.n_cases = 2500;
  cfg.scenario.observation.growth_rate = 0.1;
  cfg.scenario.observation.duration = 30.0;
  cfg.scenario.observation.truncation_time = 30.0;
  cfg.family = Family::Lognormal;
  cfg.adjustments = AdjustmentSet::censoring_and_truncation();
  cfg.fit_options.method = FitMethod::MCMC;
  cfg.fit_options.ci_level = 0.90;
  cfg.replicates = 100;
  cfg.seed = 1010;
  cfg.candidates = {Family::Gamma, Family::Lognormal, Family::Weibull};
  std::size_t n_total = 0;
  const auto s = run_sbc(cfg, [&](const SbcReplicate& r) { n_total += r.n_observed; });
  o.require(s.covered >= 83 && s.covered <= 97, "90% intervals cover truth in 83-97 of 100");
  o.require(s.selected_true >= 90, "lognormal selected in >= 90 of 100");
  o.require(s.failed == 0, "every replicate fitted");
  o.detail << "coverage " << s.covered << "/100, lognormal selected " << s.selected_true
           << "/100, not converged " << s.not_converged << ", bias " << fmt(s.bias) << ", mean n "
           << fmt(static_cast<double>(n_total) / 100.0);
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "tilting identities", 1.0, criterion1},
      {2, "conversion round trips", 1.0, criterion2},
      {3, "likelihood oracle", 10.0, criterion3},
      {4, "truncation bias", 300.0, criterion4},
      {5, "censoring bias", 120.0, criterion5},
      {6, "dynamical bias", 120.0, criterion6},
      {7, "MCMC validity", 300.0, criterion7},
      {8, "decision tree", 1.0, criterion8},
      {9, "reporting completeness", 60.0, criterion9},
      {10, "simulation-based calibration", 1800.0, criterion10},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs >= c.limit_seconds) {
      o.pass = false;
      o.detail << " [failed: runtime limit]";
    }
    std::printf("Criterion %d (%s): %s - %s (%.2f s, limit %.0f s)\n", c.id, c.name,
                o.pass ? "PASS" : "FAIL", o.detail.str().c_str(), secs, c.limit_seconds);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
