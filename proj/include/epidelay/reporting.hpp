#pragma once

#include "epidelay/fit.hpp"
#include "epidelay/linelist.hpp"
#include "epidelay/synthdata.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace epidelay {

inline constexpr const char* kReportSchema = "epidelay.report/1";

// Checklist ids.
namespace checklist {
inline constexpr const char* kAdjustBiases = "adjust_biases";
inline constexpr const char* kCompareDistributions = "compare_distributions";
inline constexpr const char* kParameterConversion = "parameter_conversion";
inline constexpr const char* kStratification = "stratification";
inline constexpr const char* kOtherIntervals = "other_intervals";
inline constexpr const char* kDiagnostics = "diagnostics";
inline constexpr const char* kCentralVariability = "central_variability";
inline constexpr const char* kQuantiles = "quantiles";
inline constexpr const char* kParameters = "parameters";
inline constexpr const char* kUncertainty = "uncertainty";
inline constexpr const char* kSampleCharacteristics = "sample_characteristics";
inline constexpr const char* kEpidemicCurve = "epidemic_curve";
inline constexpr const char* kDataCode = "data_code";
inline constexpr const char* kMultipleExposures = "multiple_exposures";
inline constexpr const char* kNegativeIntervals = "negative_intervals";
inline constexpr const char* kMultipleInfectors = "multiple_infectors";
} // namespace checklist

/// Ids applicable to a delay kind, in display order.
std::vector<std::string> checklist_items(DelayKind kind);

struct QuantileRow {
  double probability;
  Estimate days;
  friend bool operator==(const QuantileRow&, const QuantileRow&) = default;
};

struct ParamRow {
  std::string name;
  Estimate value;
  friend bool operator==(const ParamRow&, const ParamRow&) = default;
};

struct DelaySummary {
  std::string adjustments;
  Estimate mean;
  Estimate median;
  Estimate sd;
  friend bool operator==(const DelaySummary&, const DelaySummary&) = default;
};

struct OtherInterval {
  std::string name;
  std::string family;
  Estimate mean;
  Estimate sd;
  friend bool operator==(const OtherInterval&, const OtherInterval&) = default;
};

struct ReportDiagnostics {
  std::string method;
  std::vector<std::string> parameter_names;
  std::vector<double> rhat;
  std::vector<double> ess;
  std::vector<double> acceptance;
  bool hessian_positive_definite = false;
  bool converged = false;
  std::size_t zero_likelihood_cases = 0;
  std::size_t clamped_cases = 0;
  std::vector<std::string> flags;
  std::string note;
  friend bool operator==(const ReportDiagnostics&, const ReportDiagnostics&) = default;
};

struct ComparisonEntry {
  std::size_t rank;
  std::string family;
  std::string criterion;
  double value;
  double delta;
  friend bool operator==(const ComparisonEntry&, const ComparisonEntry&) = default;
};

struct ReportProvenance {
  std::uint64_t seed = 0;
  std::string version;
  std::string data_hash;
  friend bool operator==(const ReportProvenance&, const ReportProvenance&) = default;
};

struct DelayReport {
  std::string delay_name;
  DelayKind kind = DelayKind::Other;
  std::size_t sample_size = 0;
  std::string family;
  std::string method;
  double interval_level = 0.95;
  std::string interval_kind;
  std::string adjustments_applied;
  Estimate mean;
  Estimate median;
  Estimate sd;
  std::vector<QuantileRow> quantile_table;
  std::vector<ParamRow> params_table;
  std::string pdf_formula;
  std::optional<DelaySummary> unadjusted;
  std::optional<EpidemicCurve> epidemic_curve;
  std::optional<GrowthEstimate> growth;
  std::map<std::string, std::map<std::string, std::size_t>> strata_summary;
  ReportDiagnostics diagnostics;
  std::vector<ComparisonEntry> comparison;
  std::vector<OtherInterval> other_intervals;
  std::optional<std::string> negative_interval_policy;
  std::optional<std::string> multiple_exposure_note;
  std::optional<std::string> multiple_infectors_note;
  std::optional<std::string> data_reference;
  ReportProvenance provenance;
  std::map<std::string, bool> checklist;

  friend bool operator==(const DelayReport&, const DelayReport&) = default;
};

struct ReportConfig {
  /// Companion fit without the right-truncation adjustment.
  std::optional<FitResult> unadjusted_fit;
  std::vector<ComparisonRow> comparison;
  std::vector<OtherInterval> other_intervals;
  std::optional<NegativePolicy> negative_policy;
  std::optional<std::string> multiple_exposure_note;
  std::optional<std::string> multiple_infectors_note;
  /// Where the anonymized data and code are published.
  std::optional<std::string> data_reference;
};

/// Throws ValidationError when the fit was not produced from `linelist`.
/// Every number is rounded to 9 significant digits.
DelayReport build_report(const FitResult& fit, const Linelist& linelist,
                         const std::optional<EpidemicCurve>& curve,
                         const std::optional<GrowthEstimate>& growth,
                         const ReportConfig& config = {});

struct ChecklistScore {
  double fraction = 0.0;
  std::vector<std::string> missing;
};

ChecklistScore checklist_score(const DelayReport& report);

/// PDF of the fitted family with its parameter symbols.
std::string pdf_formula(Family family);

std::string render_markdown(const DelayReport& report);
std::string render_json(const DelayReport& report);
DelayReport report_from_json(const std::string& text);

// --- posterior/parametric predictive check -------------------------------------

struct PpcBin {
  double lo;
  double hi;
  double observed_freq;
  double predicted_freq;
};

struct PpcData {
  std::vector<PpcBin> bins;
  std::size_t n_observed = 0;
  std::size_t n_predicted = 0;
};

/// Observation model matching the linelist's window widths and horizon,
/// with primary times measured from the earliest primary bound.
ObservationModel observation_model_for(const Linelist& linelist, double growth_rate,
                                       std::size_t n_cases);

/// Throws ValidationError on an empty linelist.
PpcData ppc_data(const FitResult& fit, const Linelist& linelist, const ObservationModel& observation,
                 std::uint64_t seed);

/// `bin_lo,bin_hi,observed_freq,predicted_freq`.
std::string ppc_csv(const PpcData& data);

} // namespace epidelay
