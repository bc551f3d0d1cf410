#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace epidelay {

/// Half-open interval [lo, hi) in days.
struct Segment {
  double lo;
  double hi;
  friend auto operator<=>(const Segment&, const Segment&) = default;
};

/// The set of times an event may have happened: a sorted union of pairwise
/// disjoint half-open segments with positive total measure.
class EventWindow {
public:
  explicit EventWindow(std::vector<Segment> segments);
  static EventWindow interval(double lo, double hi);
  /// [day, day + 1): a single reported date is still interval-censored.
  static EventWindow day(double day);

  const std::vector<Segment>& segments() const { return segments_; }
  double lower() const { return segments_.front().lo; }
  double upper() const { return segments_.back().hi; }
  double measure() const;
  /// Measure-weighted centroid of the segments.
  double centroid() const;
  bool is_disjoint_union() const { return segments_.size() > 1; }

  friend bool operator==(const EventWindow&, const EventWindow&) = default;
  friend auto operator<=>(const EventWindow&, const EventWindow&) = default;

private:
  std::vector<Segment> segments_;
};

struct CaseRecord {
  std::string id;
  EventWindow primary;
  EventWindow secondary;
  std::map<std::string, std::string> strata;
  bool pair_order_known = true;

  friend bool operator==(const CaseRecord&, const CaseRecord&) = default;
};

struct LinelistMetadata {
  /// Final observation time T; empty means no truncation horizon.
  std::optional<double> observation_time;
  bool allow_negative = false;
  std::string delay_name = "incubation period";
  /// ISO date mapped to day 0 when windows are given as calendar dates.
  std::optional<std::string> epoch_date;

  friend bool operator==(const LinelistMetadata&, const LinelistMetadata&) = default;
};

struct Linelist {
  std::vector<CaseRecord> cases;
  LinelistMetadata meta;

  /// Throws ValidationError if a case breaks the ordering or horizon invariants.
  void validate() const;

  friend bool operator==(const Linelist&, const Linelist&) = default;
};

enum class DelayKind { IncubationPeriod, SerialInterval, Other };
/// Classifies a delay by its name ("incubation period", "serial interval").
DelayKind delay_kind(const Linelist& linelist);

enum class Direction { Forward, Backward };
enum class EventKind { Primary, Secondary };
enum class NegativePolicy { Keep, Drop, Reverse };

NegativePolicy negative_policy_from_name(const std::string& name);
std::string negative_policy_name(NegativePolicy policy);

// --- ingestion and export ----------------------------------------------------

struct IngestOptions {
  LinelistMetadata metadata;
};

/// Parses `id,primary_window,secondary_window[,strata_*]`. Windows are
/// `lo:hi` segments joined by `|`, or a bare day `d` meaning [d, d+1).
/// With an epoch date set, bounds may also be ISO dates (YYYY-MM-DD).
/// Errors carry the 1-based data row number.
Linelist ingest_csv(std::istream& in, const IngestOptions& options = {});
Linelist ingest_csv_string(const std::string& text, const IngestOptions& options = {});

struct ExportOptions {
  /// Snap every segment outward to a grid of this width (privacy widening).
  std::optional<double> widen_to_grid;
};

void export_csv(const Linelist& linelist, std::ostream& out, const ExportOptions& options = {});
std::string export_csv_string(const Linelist& linelist, const ExportOptions& options = {});

std::string metadata_to_json(const LinelistMetadata& meta);
LinelistMetadata metadata_from_json(const std::string& text);

/// Reads `path` and, when present, its `path.meta.json` sidecar.
Linelist read_linelist(const std::string& path);
void write_linelist(const Linelist& linelist, const std::string& path,
                    const ExportOptions& options = {});

/// Stable 64-bit FNV-1a digest (hex) of the canonical CSV and metadata.
std::string data_hash(const Linelist& linelist);

/// 9 significant digits, the on-disk number format.
std::string format_number(double value);

// --- operations --------------------------------------------------------------

struct Cohort {
  std::int64_t bin;
  std::vector<CaseRecord> cases;
};

/// Forward: bin by primary lower bound; Backward: by secondary lower bound.
std::vector<Cohort> cohort(const Linelist& linelist, Direction direction, double bin_width);

struct EpidemicCurve {
  std::int64_t first_day = 0;
  std::vector<double> counts;

  std::int64_t last_day() const { return first_day + static_cast<std::int64_t>(counts.size()) - 1; }
  double total() const;
  double count(std::int64_t day) const;
  friend bool operator==(const EpidemicCurve&, const EpidemicCurve&) = default;
};

EpidemicCurve epidemic_curve(const Linelist& linelist, EventKind event = EventKind::Primary);

struct GrowthEstimate {
  double rate = 0.0;
  double std_error = 0.0;
  std::int64_t day_lo = 0;
  std::int64_t day_hi = 0;
  friend bool operator==(const GrowthEstimate&, const GrowthEstimate&) = default;
};

/// OLS of ln(count + 0.5) on day over [day_lo, day_hi] inclusive.
GrowthEstimate estimate_growth_rate(const EpidemicCurve& curve, std::int64_t day_lo,
                                    std::int64_t day_hi);
GrowthEstimate estimate_growth_rate(const EpidemicCurve& curve);

/// A case is negative-capable when its secondary centroid precedes its
/// primary centroid.
bool negative_capable(const CaseRecord& record);
Linelist apply_negative_policy(const Linelist& linelist, NegativePolicy policy);

/// Centroid(secondary) - centroid(primary) per case.
std::vector<double> naive_delays(const Linelist& linelist);

/// Stratum variable -> value -> case count.
std::map<std::string, std::map<std::string, std::size_t>> strata_counts(const Linelist& linelist);

} // namespace epidelay
