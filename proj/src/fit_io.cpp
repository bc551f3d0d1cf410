#include "epidelay/error.hpp"
#include "epidelay/fit.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace epidelay {

namespace {

using nlohmann::json;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double read_number(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json estimate_json(const Estimate& e) {
  return {{"point", number(e.point)}, {"lower", number(e.lower)}, {"upper", number(e.upper)}};
}

Estimate estimate_from(const json& j) {
  return {read_number(j.at("point")), read_number(j.at("lower")), read_number(j.at("upper"))};
}

json vector_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

std::vector<double> vector_from(const json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(read_number(x));
  return out;
}

std::string direction_name(Direction d) { return d == Direction::Forward ? "forward" : "backward"; }

} // namespace

std::string fit_to_json(const FitResult& fit, bool include_runtime) {
  json adj = {{"double_censoring", fit.adjustments.double_censoring()},
              {"right_truncation", fit.adjustments.right_truncation()},
              {"dynamical_rate", fit.adjustments.dynamical_rate()
                                     ? json(*fit.adjustments.dynamical_rate())
                                     : json(nullptr)},
              {"direction", direction_name(fit.adjustments.direction())},
              {"primary_prior",
               {{"kind", fit.adjustments.primary_prior().kind == PrimaryPrior::Kind::Uniform
                             ? "uniform"
                             : "growth_tilted"},
                {"rate", fit.adjustments.primary_prior().rate}}},
              {"description", fit.adjustments.describe()}};

  json params = json::object();
  for (const auto& [name, e] : fit.params) params[name] = estimate_json(e);

  json quantiles = json::array();
  for (const auto& [p, e] : fit.summary.quantiles) {
    json q = estimate_json(e);
    q["probability"] = p;
    quantiles.push_back(q);
  }

  json cov = nullptr;
  if (fit.covariance.size() == 4) {
    cov = json::array({json::array({fit.covariance(0, 0), fit.covariance(0, 1)}),
                       json::array({fit.covariance(1, 0), fit.covariance(1, 1)})});
  }

  const auto& d = fit.diagnostics;
  json diag = {{"parameter_names", {d.parameter_names[0], d.parameter_names[1]}},
               {"rhat", vector_json(d.rhat)},
               {"ess", vector_json(d.ess)},
               {"posterior_mean", vector_json(d.posterior_mean)},
               {"mcse", vector_json(d.mcse)},
               {"acceptance", vector_json(d.acceptance)},
               {"optimizer_evaluations", d.optimizer_evaluations},
               {"hessian_positive_definite", d.hessian_positive_definite},
               {"zero_likelihood_cases", d.zero_likelihood_cases},
               {"clamped_cases", d.clamped_cases}};

  const auto& pv = fit.provenance;
  json prov = {{"n", pv.n},
               {"observation_time", pv.observation_time ? json(*pv.observation_time) : json(nullptr)},
               {"seed", pv.seed},
               {"version", pv.version},
               {"data_hash", pv.data_hash},
               {"quadrature_nodes", pv.quadrature_nodes},
               {"chains", pv.chains},
               {"warmup", pv.warmup},
               {"samples", pv.samples}};
  if (include_runtime) prov["runtime_seconds"] = pv.runtime_seconds;

  json doc = {{"schema", "epidelay.fit/1"},
              {"family", std::string(family_name(fit.family))},
              {"method", method_name(fit.method)},
              {"adjustments", adj},
              {"ci_level", fit.ci_level},
              {"point", {{std::string(fit.point.param_names()[0]), fit.point.params()[0]},
                         {std::string(fit.point.param_names()[1]), fit.point.params()[1]}}},
              {"point_unconstrained", {fit.point_unconstrained[0], fit.point_unconstrained[1]}},
              {"params", params},
              {"summary",
               {{"mean", estimate_json(fit.summary.mean)},
                {"sd", estimate_json(fit.summary.sd)},
                {"median", estimate_json(fit.summary.median)},
                {"quantiles", quantiles}}},
              {"covariance", cov},
              {"loglik", number(fit.loglik)},
              {"aic", number(fit.aic)},
              {"waic", fit.waic ? number(*fit.waic) : json(nullptr)},
              {"lppd", fit.lppd ? number(*fit.lppd) : json(nullptr)},
              {"p_waic", fit.p_waic ? number(*fit.p_waic) : json(nullptr)},
              {"diagnostics", diag},
              {"flags", fit.flags},
              {"provenance", prov}};
  return doc.dump(2) + "\n";
}

FitResult fit_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("fit document: ") + e.what());
  }
  try {
    if (doc.at("schema") != "epidelay.fit/1") {
      throw ValidationError("fit document: unsupported schema");
    }
    FitResult r;
    r.family = family_from_name(doc.at("family").get<std::string>());
    r.method = method_from_name(doc.at("method").get<std::string>());
    const auto& a = doc.at("adjustments");
    std::optional<double> dyn;
    if (!a.at("dynamical_rate").is_null()) dyn = a.at("dynamical_rate").get<double>();
    PrimaryPrior prior;
    if (a.at("primary_prior").at("kind") == "growth_tilted") {
      prior = PrimaryPrior::growth_tilted(a.at("primary_prior").at("rate").get<double>());
    }
    r.adjustments = AdjustmentSet(a.at("double_censoring").get<bool>(),
                                  a.at("right_truncation").get<bool>(), dyn,
                                  a.at("direction") == "backward" ? Direction::Backward
                                                                  : Direction::Forward,
                                  prior);
    r.ci_level = doc.at("ci_level").get<double>();
    const auto& pu = doc.at("point_unconstrained");
    r.point_unconstrained = {pu[0].get<double>(), pu[1].get<double>()};
    const auto names = DelayDistribution::from_params(r.family, {1.0, 1.0}).param_names();
    r.point = DelayDistribution::from_params(
        r.family, {doc.at("point").at(std::string(names[0])).get<double>(),
                   doc.at("point").at(std::string(names[1])).get<double>()});
    for (const auto& [name, e] : doc.at("params").items()) r.params[name] = estimate_from(e);
    const auto& s = doc.at("summary");
    r.summary.mean = estimate_from(s.at("mean"));
    r.summary.sd = estimate_from(s.at("sd"));
    r.summary.median = estimate_from(s.at("median"));
    for (const auto& q : s.at("quantiles")) {
      r.summary.quantiles[q.at("probability").get<double>()] = estimate_from(q);
    }
    if (!doc.at("covariance").is_null()) {
      const auto& c = doc.at("covariance");
      r.covariance.resize(2, 2);
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) r.covariance(i, j) = c[i][j].get<double>();
      }
    }
    r.loglik = read_number(doc.at("loglik"));
    r.aic = read_number(doc.at("aic"));
    if (!doc.at("waic").is_null()) r.waic = doc.at("waic").get<double>();
    if (!doc.at("lppd").is_null()) r.lppd = doc.at("lppd").get<double>();
    if (!doc.at("p_waic").is_null()) r.p_waic = doc.at("p_waic").get<double>();

    const auto& d = doc.at("diagnostics");
    r.diagnostics.parameter_names = {d.at("parameter_names")[0].get<std::string>(),
                                     d.at("parameter_names")[1].get<std::string>()};
    r.diagnostics.rhat = vector_from(d.at("rhat"));
    r.diagnostics.ess = vector_from(d.at("ess"));
    r.diagnostics.posterior_mean = vector_from(d.at("posterior_mean"));
    r.diagnostics.mcse = vector_from(d.at("mcse"));
    r.diagnostics.acceptance = vector_from(d.at("acceptance"));
    r.diagnostics.optimizer_evaluations = d.at("optimizer_evaluations").get<int>();
    r.diagnostics.hessian_positive_definite = d.at("hessian_positive_definite").get<bool>();
    r.diagnostics.zero_likelihood_cases = d.at("zero_likelihood_cases").get<std::size_t>();
    r.diagnostics.clamped_cases = d.at("clamped_cases").get<std::size_t>();
    r.flags = doc.at("flags").get<std::vector<std::string>>();

    const auto& p = doc.at("provenance");
    r.provenance.n = p.at("n").get<std::size_t>();
    if (!p.at("observation_time").is_null()) {
      r.provenance.observation_time = p.at("observation_time").get<double>();
    }
    r.provenance.seed = p.at("seed").get<std::uint64_t>();
    r.provenance.version = p.at("version").get<std::string>();
    r.provenance.data_hash = p.at("data_hash").get<std::string>();
    r.provenance.quadrature_nodes = p.at("quadrature_nodes").get<int>();
    r.provenance.chains = p.at("chains").get<int>();
    r.provenance.warmup = p.at("warmup").get<int>();
    r.provenance.samples = p.at("samples").get<int>();
    if (p.contains("runtime_seconds")) r.provenance.runtime_seconds = p.at("runtime_seconds").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("fit document: ") + e.what());
  }
}

std::string draws_csv(const FitResult& fit) {
  std::ostringstream out;
  const auto names = fit.point.param_names();
  out << "chain," << names[0] << ',' << names[1] << '\n';
  for (Eigen::Index i = 0; i < fit.draws_natural.rows(); ++i) {
    out << fit.draw_chain[static_cast<std::size_t>(i)] << ',' << format_number(fit.draws_natural(i, 0))
        << ',' << format_number(fit.draws_natural(i, 1)) << '\n';
  }
  return out.str();
}

} // namespace epidelay
