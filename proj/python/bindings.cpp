#include "epidelay/adjustments.hpp"
#include "epidelay/error.hpp"
#include "epidelay/fit.hpp"
#include "epidelay/reporting.hpp"
#include "epidelay/synthdata.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace epidelay;

namespace {

Family family_arg(const std::string& name) { return family_from_name(name); }

py::dict estimate_dict(const Estimate& e) {
  py::dict d;
  d["point"] = e.point;
  d["lower"] = e.lower;
  d["upper"] = e.upper;
  return d;
}

AdjustmentSet make_adjustments(bool censoring, bool truncation, std::optional<double> dynamical) {
  return AdjustmentSet(censoring, truncation, dynamical,
                       dynamical ? Direction::Backward : Direction::Forward);
}

Linelist simulate(const std::string& family, std::array<double, 2> params, std::size_t n, double r,
                  double duration, std::optional<double> observation_time, double width,
                  std::uint64_t seed, const std::string& delay_name,
                  const std::map<std::string, std::vector<std::string>>& strata) {
  OutbreakScenario sc;
  sc.true_dist = DelayDistribution::from_params(family_arg(family), params);
  sc.observation.n_cases = n;
  sc.observation.growth_rate = r;
  sc.observation.duration = duration;
  sc.observation.truncation_time = observation_time;
  sc.observation.primary_width = width;
  sc.observation.secondary_width = width;
  sc.seed = seed;
  sc.delay_name = delay_name;
  sc.strata = strata;
  return simulate_linelist(sc).linelist;
}

FitResult run_fit(const Linelist& ll, const std::string& family, const AdjustmentSet& adj,
                  const std::string& method, double ci, std::uint64_t seed, int chains, int warmup,
                  int samples) {
  FitOptions o;
  o.method = method_from_name(method);
  o.ci_level = ci;
  o.seed = seed;
  o.mcmc.chains = chains;
  o.mcmc.warmup = warmup;
  o.mcmc.samples = samples;
  return fit(ll, family_arg(family), adj, o);
}

DelayReport make_report(const FitResult& f, const Linelist& ll, std::optional<FitResult> unadjusted,
                        const std::vector<FitResult>& comparison,
                        const std::map<std::string, FitResult>& other, bool curve, std::optional<std::string> negative_policy,
                        std::optional<std::string> exposure_note,
                        std::optional<std::string> infectors_note,
                        std::optional<std::string> data_reference) {
  ReportConfig cfg;
  cfg.unadjusted_fit = std::move(unadjusted);
  if (!comparison.empty()) cfg.comparison = compare_models(comparison);
  for (const auto& [name, o] : other)
    cfg.other_intervals.push_back(
        {name, std::string(family_name(o.family)), o.summary.mean, o.summary.sd});
  if (negative_policy) cfg.negative_policy = negative_policy_from_name(*negative_policy);
  cfg.multiple_exposure_note = std::move(exposure_note);
  cfg.multiple_infectors_note = std::move(infectors_note);
  cfg.data_reference = std::move(data_reference);
  std::optional<EpidemicCurve> c;
  std::optional<GrowthEstimate> g;
  if (curve) {
    c = epidemic_curve(ll);
    try {
      g = estimate_growth_rate(*c);
    } catch (const ValidationError&) {
    }
  }
  return build_report(f, ll, c, g, cfg);
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Delay distribution estimation with censoring, truncation and growth adjustments.";
  m.attr("__version__") = kVersion;

  const auto& base_error = py::register_exception<Error>(m, "EpidelayError");
  py::register_exception<ValidationError>(m, "ValidationError", base_error.ptr());

  py::class_<DelayDistribution>(m, "Distribution")
      .def(py::init([](const std::string& family, double a, double b) {
             return DelayDistribution::from_params(family_arg(family), {a, b});
           }),
           py::arg("family"), py::arg("a"), py::arg("b"))
      .def_property_readonly("family", [](const DelayDistribution& d) {
        return std::string(family_name(d.family()));
      })
      .def_property_readonly("params", &DelayDistribution::params)
      .def("pdf", &DelayDistribution::pdf)
      .def("log_pdf", &DelayDistribution::log_pdf)
      .def("cdf", &DelayDistribution::cdf)
      .def("quantile", &DelayDistribution::quantile)
      .def("mean", &DelayDistribution::mean)
      .def("sd", &DelayDistribution::sd)
      .def("__eq__", [](const DelayDistribution& a, const DelayDistribution& b) { return a == b; })
      .def("__repr__", [](const DelayDistribution& d) {
        return "Distribution('" + std::string(family_name(d.family())) + "', " +
               format_number(d.params()[0]) + ", " + format_number(d.params()[1]) + ")";
      });

  m.def("params_from_summary",
        [](const std::string& family, double mean, double sd) {
          return params_from_summary(family_arg(family), mean, sd);
        },
        py::arg("family"), py::arg("mean"), py::arg("sd"));

  py::class_<AdjustmentSet>(m, "Adjustments")
      .def(py::init(&make_adjustments), py::arg("censoring") = true, py::arg("truncation") = false,
           py::arg("dynamical") = py::none())
      .def_property_readonly("double_censoring", &AdjustmentSet::double_censoring)
      .def_property_readonly("right_truncation", &AdjustmentSet::right_truncation)
      .def_property_readonly("dynamical_rate", &AdjustmentSet::dynamical_rate)
      .def("describe", &AdjustmentSet::describe)
      .def("__repr__", &AdjustmentSet::describe);

  m.def("decide_adjustments",
        [](bool real_time, bool backward, std::optional<double> growth_rate, bool ended_early) {
          DecisionContext c;
          c.real_time = real_time;
          c.modeling_direction = backward ? Direction::Backward : Direction::Forward;
          c.growth_rate_known = growth_rate.has_value();
          c.growth_rate = growth_rate.value_or(0.0);
          c.surveillance_ended_early = ended_early;
          return decide_adjustments(c);
        },
        py::arg("real_time") = false, py::arg("backward") = false,
        py::arg("growth_rate") = py::none(), py::arg("ended_early") = false);

  py::class_<Linelist>(m, "Linelist")
      .def("__len__", [](const Linelist& l) { return l.cases.size(); })
      .def_property_readonly("delay_name", [](const Linelist& l) { return l.meta.delay_name; })
      .def_property_readonly("observation_time",
                             [](const Linelist& l) { return l.meta.observation_time; })
      .def("to_csv", [](const Linelist& l) { return export_csv_string(l); })
      .def("data_hash", [](const Linelist& l) { return data_hash(l); })
      .def("naive_delays", [](const Linelist& l) { return naive_delays(l); })
      .def("save", [](const Linelist& l, const std::string& path) { write_linelist(l, path); },
           py::arg("path"));

  m.def("read_linelist", &read_linelist, py::arg("path"));
  m.def("parse_linelist",
        [](const std::string& text, std::optional<double> observation_time,
           const std::string& delay_name) {
          IngestOptions o;
          o.metadata.observation_time = observation_time;
          o.metadata.delay_name = delay_name;
          return ingest_csv_string(text, o);
        },
        py::arg("text"), py::arg("observation_time") = py::none(),
        py::arg("delay_name") = "incubation period");
  m.def("simulate", &simulate, py::arg("family"), py::arg("params"), py::arg("n"),
        py::arg("r") = 0.0, py::arg("duration") = 30.0, py::arg("observation_time") = py::none(),
        py::arg("width") = 1.0, py::arg("seed") = 1, py::arg("delay_name") = "incubation period",
        py::arg("strata") = std::map<std::string, std::vector<std::string>>{});

  py::class_<FitResult>(m, "Fit")
      .def_property_readonly("family",
                             [](const FitResult& f) { return std::string(family_name(f.family)); })
      .def_property_readonly("method", [](const FitResult& f) { return method_name(f.method); })
      .def_property_readonly("distribution", [](const FitResult& f) { return f.point; })
      .def_property_readonly("adjustments", [](const FitResult& f) { return f.adjustments; })
      .def_property_readonly("mean", [](const FitResult& f) { return estimate_dict(f.summary.mean); })
      .def_property_readonly("sd", [](const FitResult& f) { return estimate_dict(f.summary.sd); })
      .def_property_readonly("median",
                             [](const FitResult& f) { return estimate_dict(f.summary.median); })
      .def_property_readonly("params",
                             [](const FitResult& f) {
                               py::dict d;
                               for (const auto& [k, v] : f.params) d[py::str(k)] = estimate_dict(v);
                               return d;
                             })
      .def_readonly("loglik", &FitResult::loglik)
      .def_readonly("aic", &FitResult::aic)
      .def_readonly("waic", &FitResult::waic)
      .def_readonly("flags", &FitResult::flags)
      .def_property_readonly("converged", &FitResult::converged)
      .def("to_json", [](const FitResult& f) { return fit_to_json(f, false); });

  m.def("fit_from_json", &fit_from_json, py::arg("text"));
  m.def("fit", &run_fit, py::arg("linelist"), py::arg("family"),
        py::arg("adjustments") = AdjustmentSet{}, py::arg("method") = "mle", py::arg("ci") = 0.95,
        py::arg("seed") = kDefaultSeed, py::arg("chains") = 4, py::arg("warmup") = 1000,
        py::arg("samples") = 1000, py::call_guard<py::gil_scoped_release>());

  m.def("compare",
        [](const std::vector<FitResult>& fits) {
          py::list out;
          for (const auto& r : compare_models(fits)) {
            py::dict d;
            d["rank"] = r.rank;
            d["family"] = std::string(family_name(r.family));
            d["criterion"] = r.criterion;
            d["value"] = r.value;
            d["delta"] = r.delta;
            out.append(d);
          }
          return out;
        },
        py::arg("fits"));

  py::class_<DelayReport>(m, "Report")
      .def_readonly("checklist", &DelayReport::checklist)
      .def_property_readonly("score",
                             [](const DelayReport& r) { return checklist_score(r).fraction; })
      .def_property_readonly("missing",
                             [](const DelayReport& r) { return checklist_score(r).missing; })
      .def("to_json", &render_json)
      .def("to_markdown", &render_markdown)
      .def("__eq__", [](const DelayReport& a, const DelayReport& b) { return a == b; });

  m.def("report", &make_report, py::arg("fit"), py::arg("linelist"),
        py::arg("unadjusted") = py::none(), py::arg("comparison") = std::vector<FitResult>{},
        py::arg("other") = std::map<std::string, FitResult>{}, py::arg("curve") = true,
        py::arg("negative_policy") = py::none(), py::arg("exposure_note") = py::none(),
        py::arg("infectors_note") = py::none(), py::arg("data_reference") = py::none());
  m.def("report_from_json", &report_from_json, py::arg("text"));
}
