#include "epidelay/reporting.hpp"

#include "epidelay/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace epidelay {

namespace {

using nlohmann::json;

double round9(double x) {
  if (!std::isfinite(x)) return x;
  return std::stod(format_number(x));
}

Estimate round9(const Estimate& e) { return {round9(e.point), round9(e.lower), round9(e.upper)}; }

std::vector<double> round9(const std::vector<double>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (double x : v) out.push_back(round9(x));
  return out;
}

std::string kind_name(DelayKind kind) {
  switch (kind) {
    case DelayKind::IncubationPeriod: return "incubation_period";
    case DelayKind::SerialInterval: return "serial_interval";
    case DelayKind::Other: return "other";
  }
  return "other";
}

DelayKind kind_from_name(const std::string& name) {
  if (name == "incubation_period") return DelayKind::IncubationPeriod;
  if (name == "serial_interval") return DelayKind::SerialInterval;
  if (name == "other") return DelayKind::Other;
  throw ValidationError("report: unknown delay kind '" + name + "'");
}

bool finite_with_interval(const Estimate& e) {
  return std::isfinite(e.point) && std::isfinite(e.lower) && std::isfinite(e.upper);
}

DelaySummary summarize(const FitResult& fit) {
  return {fit.adjustments.describe(), round9(fit.summary.mean), round9(fit.summary.median),
          round9(fit.summary.sd)};
}

bool conversion_round_trips(const FitResult& fit) {
  try {
    const auto back = params_from_summary(fit.family, fit.point.mean(), fit.point.sd());
    for (int i = 0; i < 2; ++i) {
      const double a = fit.point.params()[static_cast<std::size_t>(i)];
      const double b = back.params()[static_cast<std::size_t>(i)];
      if (!(std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(a)))) return false;
    }
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::map<std::string, bool> evaluate_checklist(const DelayReport& r, const FitResult& fit) {
  namespace c = checklist;
  std::map<std::string, bool> out;
  for (const auto& id : checklist_items(r.kind)) out[id] = false;

  out[c::kAdjustBiases] =
      fit.adjustments.double_censoring() && (!fit.adjustments.right_truncation() || r.unadjusted);
  out[c::kCompareDistributions] = r.comparison.size() >= 2;
  out[c::kParameterConversion] = !r.params_table.empty() && conversion_round_trips(fit);
  out[c::kStratification] = !r.strata_summary.empty();
  out[c::kOtherIntervals] = !r.other_intervals.empty();

  const auto& d = r.diagnostics;
  bool diag = d.converged;
  if (fit.method == FitMethod::MCMC) {
    diag = diag && !d.rhat.empty() && std::all_of(d.rhat.begin(), d.rhat.end(),
                                                  [](double x) { return std::isfinite(x); });
  } else {
    diag = diag && d.hessian_positive_definite;
  }
  out[c::kDiagnostics] = diag;

  out[c::kCentralVariability] =
      finite_with_interval(r.mean) && finite_with_interval(r.median) && finite_with_interval(r.sd);
  out[c::kQuantiles] = r.quantile_table.size() == kReportProbabilities.size() &&
                       std::all_of(r.quantile_table.begin(), r.quantile_table.end(),
                                   [](const QuantileRow& q) { return std::isfinite(q.days.point); });
  out[c::kParameters] = !r.params_table.empty() && !r.pdf_formula.empty() &&
                        std::all_of(r.params_table.begin(), r.params_table.end(),
                                    [](const ParamRow& p) { return std::isfinite(p.value.point); });
  bool intervals = out[c::kCentralVariability];
  for (const auto& q : r.quantile_table) intervals = intervals && finite_with_interval(q.days);
  for (const auto& p : r.params_table) intervals = intervals && finite_with_interval(p.value);
  out[c::kUncertainty] = intervals && !r.interval_kind.empty();
  out[c::kSampleCharacteristics] = r.sample_size > 0;
  out[c::kEpidemicCurve] = r.epidemic_curve.has_value() || r.growth.has_value();
  out[c::kDataCode] = r.data_reference.has_value() && !r.data_reference->empty();

  if (r.kind == DelayKind::IncubationPeriod) {
    out[c::kMultipleExposures] = r.multiple_exposure_note.has_value();
  }
  if (r.kind == DelayKind::SerialInterval) {
    out[c::kNegativeIntervals] = r.negative_interval_policy.has_value();
    out[c::kMultipleInfectors] = r.multiple_infectors_note.has_value();
  }
  return out;
}

// --- JSON helpers ---------------------------------------------------------------

json number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double read_number(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ValidationError("report: bad number '" + s + "'");
  }
  return j.get<double>();
}

json numbers(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

std::vector<double> read_numbers(const json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(read_number(x));
  return out;
}

json estimate_json(const Estimate& e) {
  return {{"point", number(e.point)}, {"lower", number(e.lower)}, {"upper", number(e.upper)}};
}

Estimate read_estimate(const json& j) {
  return {read_number(j.at("point")), read_number(j.at("lower")), read_number(j.at("upper"))};
}

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> read_optional_string(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::string>();
}

// --- markdown helpers -----------------------------------------------------------

std::string cell(double v) { return std::isnan(v) ? "NA" : format_number(v); }

void estimate_row(std::ostringstream& md, const std::string& label, const Estimate& e) {
  md << "| " << label << " | " << cell(e.point) << " | " << cell(e.lower) << " | " << cell(e.upper)
     << " |\n";
}

std::string percent(double level) { return format_number(level * 100.0) + "%"; }

} // namespace

std::vector<std::string> checklist_items(DelayKind kind) {
  namespace c = checklist;
  std::vector<std::string> ids = {c::kAdjustBiases,      c::kCompareDistributions,
                                  c::kParameterConversion, c::kStratification,
                                  c::kOtherIntervals,    c::kDiagnostics,
                                  c::kCentralVariability, c::kQuantiles,
                                  c::kParameters,        c::kUncertainty,
                                  c::kSampleCharacteristics, c::kEpidemicCurve,
                                  c::kDataCode};
  if (kind == DelayKind::IncubationPeriod) ids.push_back(c::kMultipleExposures);
  if (kind == DelayKind::SerialInterval) {
    ids.push_back(c::kNegativeIntervals);
    ids.push_back(c::kMultipleInfectors);
  }
  return ids;
}

std::string pdf_formula(Family family) {
  switch (family) {
    case Family::Gamma:
      return "f(x) = beta^k x^(k-1) exp(-beta x) / Gamma(k), k = shape, beta = rate = 1/scale";
    case Family::Lognormal:
      return "f(x) = exp(-(ln x - mu)^2 / (2 sigma^2)) / (x sigma sqrt(2 pi)), mu = meanlog, "
             "sigma = sdlog";
    case Family::Weibull:
      return "f(x) = (k/lambda) (x/lambda)^(k-1) exp(-(x/lambda)^k), k = shape, lambda = scale";
    case Family::Normal:
      return "f(x) = exp(-(x - mu)^2 / (2 sigma^2)) / (sigma sqrt(2 pi)), mu = mean, sigma = sd";
  }
  return {};
}

DelayReport build_report(const FitResult& fit, const Linelist& linelist,
                         const std::optional<EpidemicCurve>& curve,
                         const std::optional<GrowthEstimate>& growth, const ReportConfig& config) {
  const std::string hash = data_hash(linelist);
  if (fit.provenance.data_hash != hash) {
    throw ValidationError("build_report: fit was produced from different data");
  }
  if (config.unadjusted_fit && config.unadjusted_fit->provenance.data_hash != hash) {
    throw ValidationError("build_report: unadjusted fit was produced from different data");
  }

  DelayReport r;
  r.delay_name = linelist.meta.delay_name;
  r.kind = delay_kind(linelist);
  r.sample_size = linelist.cases.size();
  r.family = std::string(family_name(fit.family));
  r.method = method_name(fit.method);
  r.interval_level = round9(fit.ci_level);
  r.interval_kind = fit.method == FitMethod::MCMC ? "credible" : "confidence";
  r.adjustments_applied = fit.adjustments.describe();
  r.mean = round9(fit.summary.mean);
  r.median = round9(fit.summary.median);
  r.sd = round9(fit.summary.sd);
  for (double p : kReportProbabilities) {
    const auto it = fit.summary.quantiles.find(p);
    if (it == fit.summary.quantiles.end()) {
      throw ValidationError("build_report: fit lacks the " + format_number(p) + " quantile");
    }
    r.quantile_table.push_back({p, round9(it->second)});
  }
  std::vector<std::string> order;
  for (auto name : fit.point.param_names()) order.emplace_back(name);
  for (const auto& [name, e] : fit.params) {
    if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
  }
  for (const auto& name : order) {
    const auto it = fit.params.find(name);
    if (it != fit.params.end()) r.params_table.push_back({name, round9(it->second)});
  }
  r.pdf_formula = pdf_formula(fit.family);
  if (config.unadjusted_fit) r.unadjusted = summarize(*config.unadjusted_fit);

  if (curve) {
    EpidemicCurve c = *curve;
    c.counts = round9(c.counts);
    r.epidemic_curve = std::move(c);
  }
  if (growth) {
    GrowthEstimate g = *growth;
    g.rate = round9(g.rate);
    g.std_error = round9(g.std_error);
    r.growth = g;
  }
  r.strata_summary = strata_counts(linelist);

  auto& d = r.diagnostics;
  d.method = r.method;
  d.parameter_names = {fit.diagnostics.parameter_names[0], fit.diagnostics.parameter_names[1]};
  d.rhat = round9(fit.diagnostics.rhat);
  d.ess = round9(fit.diagnostics.ess);
  d.acceptance = round9(fit.diagnostics.acceptance);
  d.hessian_positive_definite = fit.diagnostics.hessian_positive_definite;
  d.converged = fit.converged();
  d.zero_likelihood_cases = fit.diagnostics.zero_likelihood_cases;
  d.clamped_cases = fit.diagnostics.clamped_cases;
  d.flags = fit.flags;
  d.note = fit.method == FitMethod::MCMC
               ? "Random-walk Metropolis has no divergent transitions; mixing is judged by split "
                 "R-hat, bulk ESS and per-chain acceptance."
               : "Intervals come from the observed information at the optimum.";

  for (const auto& row : config.comparison) {
    r.comparison.push_back({static_cast<std::size_t>(row.rank), std::string(family_name(row.family)),
                            row.criterion, round9(row.value), round9(row.delta)});
  }
  for (auto o : config.other_intervals) {
    o.mean = round9(o.mean);
    o.sd = round9(o.sd);
    r.other_intervals.push_back(std::move(o));
  }

  if (r.kind == DelayKind::SerialInterval) {
    if (config.negative_policy) r.negative_interval_policy = negative_policy_name(*config.negative_policy);
    r.multiple_infectors_note = config.multiple_infectors_note;
  }
  if (r.kind == DelayKind::IncubationPeriod) {
    r.multiple_exposure_note = config.multiple_exposure_note;
    if (!r.multiple_exposure_note) {
      const auto n = std::count_if(linelist.cases.begin(), linelist.cases.end(),
                                   [](const CaseRecord& c) { return c.primary.is_disjoint_union(); });
      if (n > 0) {
        r.multiple_exposure_note = std::to_string(n) +
                                   " cases have exposure windows made of several disjoint intervals; "
                                   "each is integrated over its full window.";
      }
    }
  }
  r.data_reference = config.data_reference;
  r.provenance = {fit.provenance.seed, fit.provenance.version, hash};
  r.checklist = evaluate_checklist(r, fit);
  return r;
}

ChecklistScore checklist_score(const DelayReport& report) {
  ChecklistScore s;
  std::size_t present = 0;
  const auto ids = checklist_items(report.kind);
  for (const auto& id : ids) {
    const auto it = report.checklist.find(id);
    if (it != report.checklist.end() && it->second) {
      ++present;
    } else {
      s.missing.push_back(id);
    }
  }
  s.fraction = ids.empty() ? 1.0 : static_cast<double>(present) / static_cast<double>(ids.size());
  return s;
}

std::string render_json(const DelayReport& r) {
  json quantiles = json::array();
  for (const auto& q : r.quantile_table) {
    json row = estimate_json(q.days);
    row["probability"] = q.probability;
    quantiles.push_back(row);
  }
  json params = json::array();
  for (const auto& p : r.params_table) {
    json row = estimate_json(p.value);
    row["name"] = p.name;
    params.push_back(row);
  }
  json unadjusted = nullptr;
  if (r.unadjusted) {
    unadjusted = {{"adjustments", r.unadjusted->adjustments},
                  {"mean", estimate_json(r.unadjusted->mean)},
                  {"median", estimate_json(r.unadjusted->median)},
                  {"sd", estimate_json(r.unadjusted->sd)}};
  }
  json curve = nullptr;
  if (r.epidemic_curve) {
    curve = {{"first_day", r.epidemic_curve->first_day}, {"counts", numbers(r.epidemic_curve->counts)}};
  }
  json growth = nullptr;
  if (r.growth) {
    growth = {{"rate", number(r.growth->rate)},
              {"std_error", number(r.growth->std_error)},
              {"day_lo", r.growth->day_lo},
              {"day_hi", r.growth->day_hi}};
  }
  const auto& d = r.diagnostics;
  json diag = {{"method", d.method},
               {"parameter_names", d.parameter_names},
               {"rhat", numbers(d.rhat)},
               {"ess", numbers(d.ess)},
               {"acceptance", numbers(d.acceptance)},
               {"hessian_positive_definite", d.hessian_positive_definite},
               {"converged", d.converged},
               {"zero_likelihood_cases", d.zero_likelihood_cases},
               {"clamped_cases", d.clamped_cases},
               {"flags", d.flags},
               {"note", d.note}};
  json comparison = json::array();
  for (const auto& c : r.comparison) {
    comparison.push_back({{"rank", c.rank},
                          {"family", c.family},
                          {"criterion", c.criterion},
                          {"value", number(c.value)},
                          {"delta", number(c.delta)}});
  }
  json others = json::array();
  for (const auto& o : r.other_intervals) {
    others.push_back({{"name", o.name},
                      {"family", o.family},
                      {"mean", estimate_json(o.mean)},
                      {"sd", estimate_json(o.sd)}});
  }
  const auto score = checklist_score(r);
  json doc = {{"schema", kReportSchema},
              {"delay_name", r.delay_name},
              {"kind", kind_name(r.kind)},
              {"sample_size", r.sample_size},
              {"family", r.family},
              {"method", r.method},
              {"interval_level", r.interval_level},
              {"interval_kind", r.interval_kind},
              {"adjustments_applied", r.adjustments_applied},
              {"central", {{"mean", estimate_json(r.mean)}, {"median", estimate_json(r.median)}}},
              {"variability", {{"sd", estimate_json(r.sd)}}},
              {"quantile_table", quantiles},
              {"params_table", {{"rows", params}, {"pdf_formula", r.pdf_formula}}},
              {"unadjusted", unadjusted},
              {"epidemic_curve", curve},
              {"growth", growth},
              {"strata_summary", r.strata_summary},
              {"diagnostics", diag},
              {"comparison", comparison},
              {"other_intervals", others},
              {"negative_interval_policy", optional_string(r.negative_interval_policy)},
              {"multiple_exposure_note", optional_string(r.multiple_exposure_note)},
              {"multiple_infectors_note", optional_string(r.multiple_infectors_note)},
              {"data_reference", optional_string(r.data_reference)},
              {"provenance",
               {{"seed", r.provenance.seed},
                {"version", r.provenance.version},
                {"data_hash", r.provenance.data_hash}}},
              {"checklist", r.checklist},
              {"checklist_score", {{"fraction", score.fraction}, {"missing", score.missing}}}};
  return doc.dump(2) + "\n";
}

DelayReport report_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report document: ") + e.what());
  }
  try {
    if (doc.at("schema") != kReportSchema) throw ValidationError("report document: unsupported schema");
    DelayReport r;
    r.delay_name = doc.at("delay_name").get<std::string>();
    r.kind = kind_from_name(doc.at("kind").get<std::string>());
    r.sample_size = doc.at("sample_size").get<std::size_t>();
    r.family = doc.at("family").get<std::string>();
    r.method = doc.at("method").get<std::string>();
    r.interval_level = doc.at("interval_level").get<double>();
    r.interval_kind = doc.at("interval_kind").get<std::string>();
    r.adjustments_applied = doc.at("adjustments_applied").get<std::string>();
    r.mean = read_estimate(doc.at("central").at("mean"));
    r.median = read_estimate(doc.at("central").at("median"));
    r.sd = read_estimate(doc.at("variability").at("sd"));
    for (const auto& q : doc.at("quantile_table")) {
      r.quantile_table.push_back({q.at("probability").get<double>(), read_estimate(q)});
    }
    for (const auto& p : doc.at("params_table").at("rows")) {
      r.params_table.push_back({p.at("name").get<std::string>(), read_estimate(p)});
    }
    r.pdf_formula = doc.at("params_table").at("pdf_formula").get<std::string>();
    if (const auto& u = doc.at("unadjusted"); !u.is_null()) {
      r.unadjusted = DelaySummary{u.at("adjustments").get<std::string>(), read_estimate(u.at("mean")),
                                  read_estimate(u.at("median")), read_estimate(u.at("sd"))};
    }
    if (const auto& c = doc.at("epidemic_curve"); !c.is_null()) {
      r.epidemic_curve = EpidemicCurve{c.at("first_day").get<std::int64_t>(), read_numbers(c.at("counts"))};
    }
    if (const auto& g = doc.at("growth"); !g.is_null()) {
      r.growth = GrowthEstimate{read_number(g.at("rate")), read_number(g.at("std_error")),
                                g.at("day_lo").get<std::int64_t>(), g.at("day_hi").get<std::int64_t>()};
    }
    r.strata_summary =
        doc.at("strata_summary").get<std::map<std::string, std::map<std::string, std::size_t>>>();
    const auto& d = doc.at("diagnostics");
    auto& rd = r.diagnostics;
    rd.method = d.at("method").get<std::string>();
    rd.parameter_names = d.at("parameter_names").get<std::vector<std::string>>();
    rd.rhat = read_numbers(d.at("rhat"));
    rd.ess = read_numbers(d.at("ess"));
    rd.acceptance = read_numbers(d.at("acceptance"));
    rd.hessian_positive_definite = d.at("hessian_positive_definite").get<bool>();
    rd.converged = d.at("converged").get<bool>();
    rd.zero_likelihood_cases = d.at("zero_likelihood_cases").get<std::size_t>();
    rd.clamped_cases = d.at("clamped_cases").get<std::size_t>();
    rd.flags = d.at("flags").get<std::vector<std::string>>();
    rd.note = d.at("note").get<std::string>();
    for (const auto& c : doc.at("comparison")) {
      r.comparison.push_back({c.at("rank").get<std::size_t>(), c.at("family").get<std::string>(),
                              c.at("criterion").get<std::string>(), read_number(c.at("value")),
                              read_number(c.at("delta"))});
    }
    for (const auto& o : doc.at("other_intervals")) {
      r.other_intervals.push_back({o.at("name").get<std::string>(), o.at("family").get<std::string>(),
                                   read_estimate(o.at("mean")), read_estimate(o.at("sd"))});
    }
    r.negative_interval_policy = read_optional_string(doc.at("negative_interval_policy"));
    r.multiple_exposure_note = read_optional_string(doc.at("multiple_exposure_note"));
    r.multiple_infectors_note = read_optional_string(doc.at("multiple_infectors_note"));
    r.data_reference = read_optional_string(doc.at("data_reference"));
    const auto& p = doc.at("provenance");
    r.provenance = {p.at("seed").get<std::uint64_t>(), p.at("version").get<std::string>(),
                    p.at("data_hash").get<std::string>()};
    r.checklist = doc.at("checklist").get<std::map<std::string, bool>>();
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report document: ") + e.what());
  }
}

std::string render_markdown(const DelayReport& r) {
  std::ostringstream md;
  md << "# " << r.delay_name << " report\n\n";
  md << "- Sample size: " << r.sample_size << " cases\n";
  md << "- Family: " << r.family << "\n";
  md << "- Method: " << r.method << "\n";
  md << "- Adjustments applied: " << r.adjustments_applied << "\n\n";
  if (r.interval_kind == "credible") {
    md << "All intervals are equal-tailed " << percent(r.interval_level)
       << " credible intervals computed from the posterior draws.\n\n";
  } else {
    md << "All intervals are " << percent(r.interval_level)
       << " confidence intervals from the observed information, mapped from the unconstrained "
          "parameter scale.\n\n";
  }

  md << "## Central tendency and variability\n\n";
  md << "| statistic | estimate | lower | upper |\n|---|---|---|---|\n";
  estimate_row(md, "mean", r.mean);
  estimate_row(md, "median", r.median);
  estimate_row(md, "sd", r.sd);
  if (r.unadjusted) {
    md << "\nWithout the right-truncation adjustment (" << r.unadjusted->adjustments << "):\n\n";
    md << "| statistic | estimate | lower | upper |\n|---|---|---|---|\n";
    estimate_row(md, "mean", r.unadjusted->mean);
    estimate_row(md, "median", r.unadjusted->median);
    estimate_row(md, "sd", r.unadjusted->sd);
  }

  md << "\n## Quantiles\n\n";
  md << "| probability | days | lower | upper |\n|---|---|---|---|\n";
  for (const auto& q : r.quantile_table) estimate_row(md, format_number(q.probability), q.days);

  md << "\n## Parameters\n\n";
  md << "| parameter | estimate | lower | upper |\n|---|---|---|---|\n";
  for (const auto& p : r.params_table) estimate_row(md, p.name, p.value);
  md << "\nDensity: `" << r.pdf_formula << "`\n";

  md << "\n## Epidemic context\n\n";
  if (r.epidemic_curve) {
    md << "- Epidemic curve: days " << r.epidemic_curve->first_day << " to "
       << r.epidemic_curve->last_day() << ", " << format_number(r.epidemic_curve->total())
       << " cases (daily counts in the JSON report)\n";
  } else {
    md << "- Epidemic curve: missing\n";
  }
  if (r.growth) {
    md << "- Growth rate: " << format_number(r.growth->rate) << " per day (SE "
       << format_number(r.growth->std_error) << ", days " << r.growth->day_lo << " to "
       << r.growth->day_hi << ")\n";
  } else {
    md << "- Growth rate: missing\n";
  }

  md << "\n## Strata\n\n";
  if (r.strata_summary.empty()) md << "No stratifying variables recorded.\n";
  for (const auto& [var, levels] : r.strata_summary) {
    md << "- " << var << ":";
    for (const auto& [level, n] : levels) md << " " << level << " (" << n << ")";
    md << "\n";
  }

  if (!r.comparison.empty()) {
    md << "\n## Model comparison\n\n";
    md << "| rank | family | criterion | value | delta |\n|---|---|---|---|---|\n";
    for (const auto& c : r.comparison) {
      md << "| " << c.rank << " | " << c.family << " | " << c.criterion << " | " << cell(c.value)
         << " | " << cell(c.delta) << " |\n";
    }
  }
  if (!r.other_intervals.empty()) {
    md << "\n## Other intervals\n\n";
    md << "| interval | family | mean | lower | upper | sd |\n|---|---|---|---|---|---|\n";
    for (const auto& o : r.other_intervals) {
      md << "| " << o.name << " | " << o.family << " | " << cell(o.mean.point) << " | "
         << cell(o.mean.lower) << " | " << cell(o.mean.upper) << " | " << cell(o.sd.point) << " |\n";
    }
  }

  md << "\n## Diagnostics\n\n";
  const auto& d = r.diagnostics;
  md << "- Converged: " << (d.converged ? "yes" : "no") << "\n";
  if (!d.rhat.empty()) {
    md << "\n| parameter | R-hat | ESS |\n|---|---|---|\n";
    for (std::size_t i = 0; i < d.rhat.size(); ++i) {
      md << "| " << (i < d.parameter_names.size() ? d.parameter_names[i] : "") << " | "
         << cell(d.rhat[i]) << " | " << (i < d.ess.size() ? cell(d.ess[i]) : "NA") << " |\n";
    }
    md << "\n- Acceptance per chain:";
    for (double a : d.acceptance) md << " " << cell(a);
    md << "\n";
  } else {
    md << "- Hessian positive definite: " << (d.hessian_positive_definite ? "yes" : "no") << "\n";
  }
  md << "- Zero-likelihood cases: " << d.zero_likelihood_cases << "\n";
  md << "- Truncation-clamped cases: " << d.clamped_cases << "\n";
  md << "- Flags:";
  if (d.flags.empty()) md << " none";
  for (std::size_t i = 0; i < d.flags.size(); ++i) md << (i ? "; " : " ") << d.flags[i];
  md << "\n- " << d.note << "\n";

  if (r.negative_interval_policy || r.multiple_exposure_note || r.multiple_infectors_note) {
    md << "\n## Delay-specific notes\n\n";
    if (r.negative_interval_policy) md << "- Negative intervals: " << *r.negative_interval_policy << "\n";
    if (r.multiple_exposure_note) md << "- Multiple exposures: " << *r.multiple_exposure_note << "\n";
    if (r.multiple_infectors_note) md << "- Multiple infectors: " << *r.multiple_infectors_note << "\n";
  }

  md << "\n## Data and provenance\n\n";
  md << "- Data and code: " << (r.data_reference ? *r.data_reference : std::string("missing")) << "\n";
  md << "- Seed: " << r.provenance.seed << "\n";
  md << "- Version: " << r.provenance.version << "\n";
  md << "- Data hash: " << r.provenance.data_hash << "\n";

  const auto score = checklist_score(r);
  md << "\n## Checklist\n\n";
  md << "Score: " << format_number(score.fraction) << "\n\n";
  md << "| item | status |\n|---|---|\n";
  for (const auto& id : checklist_items(r.kind)) {
    const auto it = r.checklist.find(id);
    md << "| " << id << " | " << (it != r.checklist.end() && it->second ? "present" : "missing")
       << " |\n";
  }
  if (!score.missing.empty()) {
    md << "\n## Checklist gaps\n\n";
    for (const auto& id : score.missing) md << "- " << id << "\n";
  }
  return md.str();
}

// --- predictive check -------------------------------------------------------------

ObservationModel observation_model_for(const Linelist& linelist, double growth_rate,
                                       std::size_t n_cases) {
  if (linelist.cases.empty()) throw ValidationError("observation_model_for: empty linelist");
  double origin = std::numeric_limits<double>::infinity();
  double last = -std::numeric_limits<double>::infinity();
  std::vector<double> pw;
  std::vector<double> sw;
  for (const auto& c : linelist.cases) {
    origin = std::min(origin, c.primary.lower());
    last = std::max(last, c.primary.upper());
    pw.push_back(c.primary.measure());
    sw.push_back(c.secondary.measure());
  }
  auto median = [](std::vector<double>& v) {
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
    return v[v.size() / 2];
  };
  ObservationModel obs;
  obs.growth_rate = growth_rate;
  obs.n_cases = n_cases;
  obs.primary_width = median(pw);
  obs.secondary_width = median(sw);
  if (linelist.meta.observation_time) {
    obs.truncation_time = *linelist.meta.observation_time - origin;
    obs.duration = *obs.truncation_time;
  } else {
    obs.duration = last - origin;
  }
  return obs;
}

PpcData ppc_data(const FitResult& fit, const Linelist& linelist, const ObservationModel& observation,
                 std::uint64_t seed) {
  if (linelist.cases.empty()) throw ValidationError("ppc_data: empty linelist");
  const auto observed = naive_delays(linelist);
  const auto predicted = simulate_observed_from_fit(fit.point, observation, seed);
  if (predicted.empty()) throw ValidationError("ppc_data: the observation model kept no cases");

  auto [omin, omax] = std::minmax_element(observed.begin(), observed.end());
  auto [pmin, pmax] = std::minmax_element(predicted.begin(), predicted.end());
  const auto lo = static_cast<std::int64_t>(std::floor(std::min(*omin, *pmin)));
  const auto hi = static_cast<std::int64_t>(std::floor(std::max(*omax, *pmax)));
  const auto nbins = static_cast<std::size_t>(hi - lo + 1);
  std::vector<double> oc(nbins, 0.0);
  std::vector<double> pc(nbins, 0.0);
  auto bin = [&](double x) { return static_cast<std::size_t>(static_cast<std::int64_t>(std::floor(x)) - lo); };
  for (double x : observed) oc[bin(x)] += 1.0;
  for (double x : predicted) pc[bin(x)] += 1.0;

  PpcData out;
  out.n_observed = observed.size();
  out.n_predicted = predicted.size();
  for (std::size_t i = 0; i < nbins; ++i) {
    const double b = static_cast<double>(lo + static_cast<std::int64_t>(i));
    out.bins.push_back({b, b + 1.0, oc[i] / static_cast<double>(out.n_observed),
                        pc[i] / static_cast<double>(out.n_predicted)});
  }
  return out;
}

std::string ppc_csv(const PpcData& data) {
  std::ostringstream out;
  out << "bin_lo,bin_hi,observed_freq,predicted_freq\n";
  for (const auto& b : data.bins) {
    out << format_number(b.lo) << ',' << format_number(b.hi) << ',' << format_number(b.observed_freq)
        << ',' << format_number(b.predicted_freq) << '\n';
  }
  return out.str();
}

} // namespace epidelay
