#include "epidelay/cli.hpp"

#include "epidelay/calibration.hpp"
#include "epidelay/error.hpp"
#include "epidelay/fit.hpp"
#include "epidelay/linelist.hpp"
#include "epidelay/reporting.hpp"
#include "epidelay/synthdata.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace epidelay::cli {

namespace {

namespace fs = std::filesystem;

struct ContextFlags {
  bool real_time = false;
  bool retrospective = false;
  bool forward = false;
  bool backward = false;
  std::optional<double> growth_known;
  bool ended_early = false;
  bool complete = false;

  bool any() const {
    return real_time || retrospective || forward || backward || growth_known || ended_early ||
           complete;
  }

  DecisionContext context() const {
    if (real_time && retrospective) throw ValidationError("--real-time and --retrospective conflict");
    if (forward && backward) throw ValidationError("--forward and --backward conflict");
    if (ended_early && complete) throw ValidationError("--ended-early and --complete conflict");
    DecisionContext c;
    c.real_time = real_time;
    c.modeling_direction = backward ? Direction::Backward : Direction::Forward;
    c.growth_rate_known = growth_known.has_value();
    c.growth_rate = growth_known.value_or(0.0);
    c.surveillance_ended_early = ended_early;
    return c;
  }
};

struct FitFlags {
  std::string family = "lognormal";
  std::string method = "mle";
  std::vector<std::string> adjust;
  std::optional<double> horizon;
  double ci = 0.95;
  int nodes = 21;
  int chains = 4;
  int warmup = 1000;
  int samples = 1000;
  bool no_adapt = false;
  bool sequential = false;
  std::optional<std::string> negative_policy;
  ContextFlags ctx;
};

struct TruthFlags {
  std::string family = "gamma";
  std::vector<double> params;
  std::optional<double> mean;
  std::optional<double> sd;
  std::size_t n = 1000;
  double growth = 0.0;
  double duration = 30.0;
  std::optional<double> horizon;
  double width = 1.0;
  std::optional<double> primary_width;
  std::optional<double> secondary_width;
  std::string delay_name = "incubation period";
  std::vector<std::string> strata;
};

struct Common {
  std::uint64_t seed = kDefaultSeed;
  int verbose = 0;
};

void add_context_flags(CLI::App* app, ContextFlags& c) {
  app->add_flag("--real-time", c.real_time, "Estimating during an ongoing outbreak");
  app->add_flag("--retrospective", c.retrospective, "Estimating after the outbreak");
  app->add_flag("--forward", c.forward, "Modeling the forward (primary-cohort) distribution");
  app->add_flag("--backward", c.backward, "Modeling the backward (secondary-cohort) distribution");
  app->add_option("--growth-known", c.growth_known, "Known epidemic growth rate per day");
  app->add_flag("--ended-early", c.ended_early, "Surveillance ended before all delays completed");
  app->add_flag("--complete", c.complete, "All delays completed before data collection ended");
}

void add_fit_flags(CLI::App* app, FitFlags& f, bool with_horizon = true) {
  app->add_option("--family", f.family, "Delay family")
      ->check(CLI::IsMember({"gamma", "lognormal", "weibull", "normal"}))
      ->capture_default_str();
  app->add_option("--method", f.method, "Estimation method")
      ->check(CLI::IsMember({"mle", "mcmc"}))
      ->capture_default_str();
  app->add_option("--adjust", f.adjust,
                  "Adjustments: censoring, truncation, dynamical:R or none (repeat or comma-separate)")
      ->delimiter(',');
  if (with_horizon) {
    app->add_option("--T", f.horizon, "Final observation time in days (overrides the linelist)");
  }
  app->add_option("--ci", f.ci, "Interval level")->check(CLI::Range(0.5, 0.999))->capture_default_str();
  app->add_option("--nodes", f.nodes, "Gauss-Legendre nodes per quadrature piece")
      ->check(CLI::Range(5, 201))
      ->capture_default_str();
  app->add_option("--chains", f.chains, "MCMC chains")->check(CLI::Range(2, 64))->capture_default_str();
  app->add_option("--warmup", f.warmup, "MCMC warmup iterations per chain")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app->add_option("--samples", f.samples, "MCMC retained iterations per chain")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_flag("--no-adapt", f.no_adapt, "Disable proposal adaptation during warmup");
  app->add_flag("--sequential", f.sequential, "Run MCMC chains on one thread");
  app->add_option("--negative-policy", f.negative_policy,
                  "Serial intervals: keep, drop or reverse negative-capable cases")
      ->check(CLI::IsMember({"keep", "drop", "reverse"}));
  add_context_flags(app, f.ctx);
}

void add_truth_flags(CLI::App* app, TruthFlags& t, const std::string& family_flag) {
  app->add_option(family_flag, t.family, "True delay family")
      ->check(CLI::IsMember({"gamma", "lognormal", "weibull", "normal"}))
      ->capture_default_str();
  app->add_option("--params", t.params, "True natural parameters a,b")->delimiter(',')->expected(2);
  app->add_option("--mean", t.mean, "True mean delay (with --sd, instead of --params)");
  app->add_option("--sd", t.sd, "True delay standard deviation");
  app->add_option("--n", t.n, "Cases generated before truncation")->capture_default_str();
  app->add_option("--r", t.growth, "Exponential growth rate of primary events per day")
      ->capture_default_str();
  app->add_option("--duration", t.duration, "Length of the primary-event period in days")
      ->capture_default_str();
  app->add_option("--T", t.horizon, "Truncation time; cases whose secondary window ends later are dropped");
  app->add_option("--width", t.width, "Censoring window width for both events")->capture_default_str();
  app->add_option("--primary-width", t.primary_width, "Primary window width (overrides --width)");
  app->add_option("--secondary-width", t.secondary_width, "Secondary window width (overrides --width)");
  app->add_option("--delay-name", t.delay_name, "Delay name stored in the metadata")->capture_default_str();
  app->add_option("--strata", t.strata, "Random covariate NAME=level1,level2 (repeatable)");
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app->add_flag("-v,--verbose", c.verbose, "Print progress and timing to stderr");
}

DelayDistribution truth_dist(const TruthFlags& t) {
  const Family family = family_from_name(t.family);
  if (t.params.size() == 2) return DelayDistribution::from_params(family, {t.params[0], t.params[1]});
  if (t.mean && t.sd) return params_from_summary(family, *t.mean, *t.sd);
  if (family == Family::Gamma && !t.mean && !t.sd) return DelayDistribution::gamma(2.0, 0.5);
  throw ValidationError("give the true distribution with --params a,b or --mean and --sd");
}

OutbreakScenario scenario_from(const TruthFlags& t, std::uint64_t seed) {
  OutbreakScenario sc;
  sc.true_dist = truth_dist(t);
  sc.seed = seed;
  sc.delay_name = t.delay_name;
  sc.observation.n_cases = t.n;
  sc.observation.growth_rate = t.growth;
  sc.observation.duration = t.duration;
  sc.observation.truncation_time = t.horizon;
  sc.observation.primary_width = t.primary_width.value_or(t.width);
  sc.observation.secondary_width = t.secondary_width.value_or(t.width);
  for (const auto& spec : t.strata) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--strata expects NAME=level1,level2");
    std::vector<std::string> levels;
    std::stringstream in(spec.substr(eq + 1));
    for (std::string level; std::getline(in, level, ',');) {
      if (!level.empty()) levels.push_back(level);
    }
    sc.strata[spec.substr(0, eq)] = levels;
  }
  sc.validate();
  return sc;
}

AdjustmentSet parse_adjustments(const std::vector<std::string>& items) {
  bool censoring = false;
  bool truncation = false;
  std::optional<double> rate;
  for (const auto& item : items) {
    if (item == "censoring") {
      censoring = true;
    } else if (item == "truncation") {
      truncation = true;
    } else if (item.rfind("dynamical:", 0) == 0) {
      try {
        rate = std::stod(item.substr(10));
      } catch (const std::exception&) {
        throw ValidationError("--adjust dynamical:R needs a numeric rate, got '" + item + "'");
      }
    } else if (item != "none") {
      throw ValidationError("unknown adjustment '" + item + "'");
    }
  }
  return AdjustmentSet(censoring, truncation, rate, rate ? Direction::Backward : Direction::Forward);
}

AdjustmentSet resolve_adjustments(const FitFlags& f, std::ostream& err) {
  std::optional<AdjustmentSet> decided;
  if (f.ctx.any()) decided = decide_adjustments(f.ctx.context());
  if (f.adjust.empty()) return decided.value_or(AdjustmentSet::censoring_only());
  const auto chosen = parse_adjustments(f.adjust);
  if (!chosen.double_censoring()) {
    err << "warning: double interval censoring is not adjusted for\n";
  }
  if (decided && !(chosen == *decided)) {
    err << "warning: --adjust gives " << chosen.describe() << " but the context flags suggest "
        << decided->describe() << "\n";
  }
  return chosen;
}

FitOptions fit_options(const FitFlags& f, std::uint64_t seed) {
  FitOptions o;
  o.method = method_from_name(f.method);
  o.quadrature_nodes = f.nodes;
  o.seed = seed;
  o.ci_level = f.ci;
  o.observation_time = f.horizon;
  o.mcmc.chains = f.chains;
  o.mcmc.warmup = f.warmup;
  o.mcmc.samples = f.samples;
  o.mcmc.adapt = !f.no_adapt;
  o.mcmc.parallel = !f.sequential;
  o.validate();
  return o;
}

Linelist load_linelist(const std::string& path, const std::optional<std::string>& policy) {
  auto ll = read_linelist(path);
  if (policy) ll = apply_negative_policy(ll, negative_policy_from_name(*policy));
  return ll;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

std::string interval_text(const Estimate& e) {
  std::string s = format_number(e.point);
  if (e.has_interval()) s += " (" + format_number(e.lower) + ", " + format_number(e.upper) + ")";
  return s;
}

void print_fit(const FitResult& f, std::ostream& out) {
  out << family_name(f.family) << ' ' << method_name(f.method) << ' ' << f.adjustments.describe()
      << ": mean " << interval_text(f.summary.mean) << ", sd " << interval_text(f.summary.sd) << "\n";
  for (const auto& flag : f.flags) out << "flag: " << flag << "\n";
}

// --- subcommands ------------------------------------------------------------------

struct SimulateArgs {
  TruthFlags truth;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a, const Common& c, std::ostream& out) {
  const auto sim = simulate_linelist(scenario_from(a.truth, c.seed));
  const auto dir = prepare_dir(a.out);
  write_linelist(sim.linelist, (dir / "linelist.csv").string());
  std::ostringstream truth;
  write_truth_csv(sim.truth, truth);
  write_text(dir / "truth.csv", truth.str());
  out << "simulated " << sim.truth.cases.size() << " cases, " << sim.linelist.cases.size()
      << " observed -> " << (dir / "linelist.csv").string() << "\n";
  return kExitOk;
}

struct FitArgs {
  std::string linelist;
  FitFlags fit;
  std::string out;
};

int cmd_fit(const FitArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
  const auto ll = load_linelist(a.linelist, a.fit.negative_policy);
  const auto adj = resolve_adjustments(a.fit, err);
  const auto result = fit(ll, family_from_name(a.fit.family), adj, fit_options(a.fit, c.seed));
  const auto dir = prepare_dir(a.out);
  write_text(dir / "fit.json", fit_to_json(result, false));
  if (result.method == FitMethod::MCMC) write_text(dir / "draws.csv", draws_csv(result));
  print_fit(result, out);
  if (c.verbose) err << "runtime " << format_number(result.provenance.runtime_seconds) << " s\n";
  return result.converged() ? kExitOk : kExitNotConverged;
}

struct CompareArgs {
  std::string linelist;
  std::vector<std::string> families{"gamma", "lognormal", "weibull"};
  std::vector<std::string> fits;
  FitFlags fit;
  std::string out;
};

int cmd_compare(const CompareArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
  std::vector<FitResult> fits;
  const auto dir = prepare_dir(a.out);
  if (!a.fits.empty()) {
    for (const auto& path : a.fits) fits.push_back(fit_from_json(read_text(path)));
  } else {
    if (a.linelist.empty()) throw ValidationError("compare needs --linelist or --fits");
    const auto ll = load_linelist(a.linelist, a.fit.negative_policy);
    const auto adj = resolve_adjustments(a.fit, err);
    const auto opts = fit_options(a.fit, c.seed);
    for (const auto& name : a.families) {
      fits.push_back(fit(ll, family_from_name(name), adj, opts));
      write_text(dir / ("fit_" + name + ".json"), fit_to_json(fits.back(), false));
    }
  }
  const auto rows = compare_models(fits);
  const auto csv = comparison_csv(rows);
  write_text(dir / "comparison.csv", csv);
  out << csv;
  bool converged = true;
  for (const auto& f : fits) converged = converged && f.converged();
  return converged ? kExitOk : kExitNotConverged;
}

struct ReportArgs {
  std::string linelist;
  std::string fit;
  std::optional<std::string> unadjusted;
  std::vector<std::string> compare;
  std::vector<std::string> other;
  std::optional<std::string> negative_policy;
  std::optional<std::string> exposure_note;
  std::optional<std::string> infectors_note;
  bool no_curve = false;
  std::optional<double> widen;
  std::size_t ppc_samples = 100000;
  std::string out;
};

int cmd_report(const ReportArgs& a, const Common& c, std::ostream& out) {
  const auto ll = load_linelist(a.linelist, a.negative_policy);
  const auto fit = fit_from_json(read_text(a.fit));
  ReportConfig cfg;
  if (a.unadjusted) cfg.unadjusted_fit = fit_from_json(read_text(*a.unadjusted));
  if (!a.compare.empty()) {
    std::vector<FitResult> fits;
    for (const auto& path : a.compare) fits.push_back(fit_from_json(read_text(path)));
    cfg.comparison = compare_models(fits);
  }
  for (const auto& spec : a.other) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--other expects NAME=FIT.json");
    const auto o = fit_from_json(read_text(spec.substr(eq + 1)));
    cfg.other_intervals.push_back(
        {spec.substr(0, eq), std::string(family_name(o.family)), o.summary.mean, o.summary.sd});
  }
  if (a.negative_policy) cfg.negative_policy = negative_policy_from_name(*a.negative_policy);
  cfg.multiple_exposure_note = a.exposure_note;
  cfg.multiple_infectors_note = a.infectors_note;

  const auto dir = prepare_dir(a.out);
  ExportOptions exp;
  exp.widen_to_grid = a.widen;
  write_linelist(ll, (dir / "data.csv").string(), exp);
  cfg.data_reference = "data.csv (epidelay " + std::string(kVersion) + ")";

  std::optional<EpidemicCurve> curve;
  std::optional<GrowthEstimate> growth;
  if (!a.no_curve) {
    curve = epidemic_curve(ll);
    try {
      growth = estimate_growth_rate(*curve);
    } catch (const ValidationError&) {
    }
  }
  const auto report = build_report(fit, ll, curve, growth, cfg);
  write_text(dir / "report.json", render_json(report));
  write_text(dir / "report.md", render_markdown(report));

  double rate = 0.0;
  if (fit.adjustments.dynamical_rate()) {
    rate = *fit.adjustments.dynamical_rate();
  } else if (growth) {
    rate = growth->rate;
  }
  if (a.ppc_samples > 0) {
    const auto obs = observation_model_for(ll, rate, a.ppc_samples);
    write_text(dir / "ppc.csv", ppc_csv(ppc_data(fit, ll, obs, c.seed)));
  }

  const auto score = checklist_score(report);
  out << "checklist score " << format_number(score.fraction) << "\n";
  for (const auto& m : score.missing) out << "missing: " << m << "\n";
  return fit.converged() ? kExitOk : kExitNotConverged;
}

int cmd_check(const ContextFlags& ctx, std::ostream& out) {
  out << decide_adjustments(ctx.context()).describe() << "\n";
  return kExitOk;
}

struct SbcArgs {
  TruthFlags truth;
  FitFlags fit;
  int replicates = 100;
  std::vector<std::string> candidates;
  std::string out;
};

int cmd_sbc(const SbcArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
  SbcConfig cfg;
  cfg.scenario = scenario_from(a.truth, c.seed);
  cfg.family = family_from_name(a.fit.family);
  cfg.adjustments = resolve_adjustments(a.fit, err);
  cfg.fit_options = fit_options(a.fit, c.seed);
  cfg.replicates = a.replicates;
  cfg.seed = c.seed;
  for (const auto& name : a.candidates) cfg.candidates.push_back(family_from_name(name));
  const auto summary = run_sbc(cfg, [&](const SbcReplicate& r) {
    if (c.verbose) {
      err << "replicate " << r.index << ": mean " << interval_text(r.mean)
          << (r.covered ? " covered" : " missed") << "\n";
    }
  });
  const auto dir = prepare_dir(a.out);
  write_text(dir / "sbc.csv", sbc_csv(summary));
  const auto json = sbc_summary_json(summary);
  write_text(dir / "sbc_summary.json", json);
  out << json;
  return summary.not_converged == 0 && summary.failed == 0 ? kExitOk : kExitNotConverged;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Estimate epidemiological delay distributions from linelist data", "epidelay"};
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "", "TOML file whose keys mirror the command-line flags");
  app.require_subcommand(1);

  Common common;

  SimulateArgs sim;
  auto* s_sim = app.add_subcommand("simulate", "Generate a censored, truncated synthetic linelist");
  add_truth_flags(s_sim, sim.truth, "--family");
  s_sim->add_option("--out", sim.out, "Output directory")->required();
  add_common(s_sim, common);

  FitArgs fa;
  auto* s_fit = app.add_subcommand("fit", "Fit a delay distribution to a linelist");
  s_fit->add_option("--linelist", fa.linelist, "Linelist CSV")->required()->check(CLI::ExistingFile);
  add_fit_flags(s_fit, fa.fit);
  s_fit->add_option("--out", fa.out, "Output directory")->required();
  add_common(s_fit, common);

  CompareArgs ca;
  auto* s_cmp = app.add_subcommand("compare", "Rank candidate families by AIC or WAIC");
  s_cmp->add_option("--linelist", ca.linelist, "Linelist CSV")->check(CLI::ExistingFile);
  s_cmp->add_option("--families", ca.families, "Families to fit")
      ->delimiter(',')
      ->check(CLI::IsMember({"gamma", "lognormal", "weibull", "normal"}))
      ->capture_default_str();
  s_cmp->add_option("--fits", ca.fits, "Existing fit documents to rank instead of fitting")
      ->check(CLI::ExistingFile);
  add_fit_flags(s_cmp, ca.fit);
  s_cmp->add_option("--out", ca.out, "Output directory")->required();
  add_common(s_cmp, common);

  ReportArgs ra;
  auto* s_rep = app.add_subcommand("report", "Write the reporting-checklist report for a fit");
  s_rep->add_option("--linelist", ra.linelist, "Linelist CSV the fit used")
      ->required()
      ->check(CLI::ExistingFile);
  s_rep->add_option("--fit", ra.fit, "Fit document")->required()->check(CLI::ExistingFile);
  s_rep->add_option("--unadjusted", ra.unadjusted, "Companion fit without the truncation adjustment")
      ->check(CLI::ExistingFile);
  s_rep->add_option("--compare", ra.compare, "Fit documents of the candidate families")
      ->check(CLI::ExistingFile);
  s_rep->add_option("--other", ra.other, "Another estimated interval NAME=FIT.json (repeatable)");
  s_rep->add_option("--negative-policy", ra.negative_policy, "Negative serial interval handling")
      ->check(CLI::IsMember({"keep", "drop", "reverse"}));
  s_rep->add_option("--exposure-note", ra.exposure_note, "How multiple possible exposures were handled");
  s_rep->add_option("--infectors-note", ra.infectors_note, "How multiple possible infectors were handled");
  s_rep->add_flag("--no-curve", ra.no_curve, "Omit the epidemic curve and growth estimate");
  s_rep->add_option("--widen", ra.widen, "Widen exported windows to this grid for privacy");
  s_rep->add_option("--ppc-samples", ra.ppc_samples, "Cases simulated for the predictive check (0 skips)")
      ->capture_default_str();
  s_rep->add_option("--out", ra.out, "Output directory")->required();
  add_common(s_rep, common);

  ContextFlags cf;
  auto* s_chk = app.add_subcommand("check", "Print the adjustments the decision tree recommends");
  add_context_flags(s_chk, cf);

  SbcArgs sa;
  auto* s_sbc = app.add_subcommand("sbc", "Coverage and bias over repeated simulate-fit runs");
  add_truth_flags(s_sbc, sa.truth, "--truth-family");
  add_fit_flags(s_sbc, sa.fit, false);
  s_sbc->add_option("--replicates", sa.replicates, "Number of replicates")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  s_sbc->add_option("--candidates", sa.candidates, "Families ranked by AIC on each replicate")
      ->delimiter(',')
      ->check(CLI::IsMember({"gamma", "lognormal", "weibull", "normal"}));
  s_sbc->add_option("--out", sa.out, "Output directory")->required();
  add_common(s_sbc, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*s_sim) return cmd_simulate(sim, common, out);
    if (*s_fit) return cmd_fit(fa, common, out, err);
    if (*s_cmp) return cmd_compare(ca, common, out, err);
    if (*s_rep) return cmd_report(ra, common, out);
    if (*s_chk) return cmd_check(cf, out);
    if (*s_sbc) return cmd_sbc(sa, common, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNotConverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

} // namespace epidelay::cli
