#include "epidelay/linelist.hpp"

#include "epidelay/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace epidelay {

EventWindow::EventWindow(std::vector<Segment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw ValidationError("event window needs at least one segment");
  for (const auto& s : segments_) {
    if (!std::isfinite(s.lo) || !std::isfinite(s.hi)) {
      throw ValidationError("event window bounds must be finite");
    }
    if (!(s.hi > s.lo)) throw ValidationError("window upper <= lower");
  }
  std::sort(segments_.begin(), segments_.end());
  for (std::size_t i = 1; i < segments_.size(); ++i) {
    if (segments_[i].lo < segments_[i - 1].hi) {
      throw ValidationError("overlapping window segments");
    }
  }
}

EventWindow EventWindow::interval(double lo, double hi) { return EventWindow({{lo, hi}}); }

EventWindow EventWindow::day(double day) { return interval(day, day + 1.0); }

double EventWindow::measure() const {
  double m = 0.0;
  for (const auto& s : segments_) m += s.hi - s.lo;
  return m;
}

double EventWindow::centroid() const {
  double moment = 0.0;
  for (const auto& s : segments_) moment += (s.hi - s.lo) * 0.5 * (s.hi + s.lo);
  return moment / measure();
}

void Linelist::validate() const {
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    const std::string where = " (case '" + c.id + "', row " + std::to_string(i + 1) + ")";
    if (!meta.allow_negative && c.secondary.upper() < c.primary.lower()) {
      throw ValidationError("secondary window ends before primary window starts" + where);
    }
    if (meta.observation_time && c.secondary.upper() > *meta.observation_time) {
      throw ValidationError("secondary window extends past the observation time" + where);
    }
  }
}

DelayKind delay_kind(const Linelist& linelist) {
  std::string name = linelist.meta.delay_name;
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (name.find("serial") != std::string::npos) return DelayKind::SerialInterval;
  if (name.find("incubation") != std::string::npos) return DelayKind::IncubationPeriod;
  return DelayKind::Other;
}

NegativePolicy negative_policy_from_name(const std::string& name) {
  if (name == "keep") return NegativePolicy::Keep;
  if (name == "drop") return NegativePolicy::Drop;
  if (name == "reverse") return NegativePolicy::Reverse;
  throw ValidationError("unknown negative-interval policy '" + name + "'");
}

std::string negative_policy_name(NegativePolicy policy) {
  switch (policy) {
  case NegativePolicy::Keep: return "keep";
  case NegativePolicy::Drop: return "drop";
  case NegativePolicy::Reverse: return "reverse";
  }
  return "keep";
}

std::vector<Cohort> cohort(const Linelist& linelist, Direction direction, double bin_width) {
  if (!(bin_width > 0.0)) throw ValidationError("cohort: bin width must be positive");
  std::map<std::int64_t, std::vector<CaseRecord>> bins;
  for (const auto& c : linelist.cases) {
    const double anchor = direction == Direction::Forward ? c.primary.lower() : c.secondary.lower();
    bins[static_cast<std::int64_t>(std::floor(anchor / bin_width))].push_back(c);
  }
  std::vector<Cohort> out;
  out.reserve(bins.size());
  for (auto& [bin, cases] : bins) out.push_back({bin, std::move(cases)});
  return out;
}

double EpidemicCurve::total() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }

double EpidemicCurve::count(std::int64_t day) const {
  if (day < first_day || day > last_day()) return 0.0;
  return counts[static_cast<std::size_t>(day - first_day)];
}

EpidemicCurve epidemic_curve(const Linelist& linelist, EventKind event) {
  if (linelist.cases.empty()) throw ValidationError("epidemic_curve: empty linelist");
  std::vector<std::int64_t> days;
  days.reserve(linelist.cases.size());
  for (const auto& c : linelist.cases) {
    const double lb = event == EventKind::Primary ? c.primary.lower() : c.secondary.lower();
    days.push_back(static_cast<std::int64_t>(std::floor(lb)));
  }
  const auto [lo, hi] = std::minmax_element(days.begin(), days.end());
  EpidemicCurve curve;
  curve.first_day = *lo;
  curve.counts.assign(static_cast<std::size_t>(*hi - *lo + 1), 0.0);
  for (auto d : days) curve.counts[static_cast<std::size_t>(d - curve.first_day)] += 1.0;
  return curve;
}

GrowthEstimate estimate_growth_rate(const EpidemicCurve& curve, std::int64_t day_lo,
                                    std::int64_t day_hi) {
  if (day_hi - day_lo + 1 < 3) throw ValidationError("growth rate: window must span >= 3 days");
  if (day_lo < curve.first_day || day_hi > curve.last_day()) {
    throw ValidationError("growth rate: window lies outside the epidemic curve");
  }
  const auto n = static_cast<double>(day_hi - day_lo + 1);
  double any = 0.0;
  double mean_t = 0.0;
  double mean_y = 0.0;
  for (auto d = day_lo; d <= day_hi; ++d) {
    any += curve.count(d);
    mean_t += static_cast<double>(d);
    mean_y += std::log(curve.count(d) + 0.5);
  }
  if (any <= 0.0) throw ValidationError("growth rate: all counts in the window are zero");
  mean_t /= n;
  mean_y /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (auto d = day_lo; d <= day_hi; ++d) {
    const double dt = static_cast<double>(d) - mean_t;
    sxx += dt * dt;
    sxy += dt * (std::log(curve.count(d) + 0.5) - mean_y);
  }
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (auto d = day_lo; d <= day_hi; ++d) {
    const double fitted = mean_y + slope * (static_cast<double>(d) - mean_t);
    const double e = std::log(curve.count(d) + 0.5) - fitted;
    rss += e * e;
  }
  GrowthEstimate g;
  g.rate = slope;
  g.std_error = std::sqrt(rss / (n - 2.0) / sxx);
  g.day_lo = day_lo;
  g.day_hi = day_hi;
  return g;
}

GrowthEstimate estimate_growth_rate(const EpidemicCurve& curve) {
  return estimate_growth_rate(curve, curve.first_day, curve.last_day());
}

bool negative_capable(const CaseRecord& record) {
  return record.secondary.centroid() < record.primary.centroid();
}

Linelist apply_negative_policy(const Linelist& linelist, NegativePolicy policy) {
  Linelist out;
  out.meta = linelist.meta;
  out.cases.reserve(linelist.cases.size());
  for (const auto& c : linelist.cases) {
    if (policy == NegativePolicy::Keep || !negative_capable(c)) {
      out.cases.push_back(c);
    } else if (policy == NegativePolicy::Reverse) {
      CaseRecord swapped = c;
      std::swap(swapped.primary, swapped.secondary);
      out.cases.push_back(std::move(swapped));
    }
  }
  return out;
}

std::vector<double> naive_delays(const Linelist& linelist) {
  if (linelist.cases.empty()) throw ValidationError("naive_delays: empty linelist");
  std::vector<double> out;
  out.reserve(linelist.cases.size());
  for (const auto& c : linelist.cases) out.push_back(c.secondary.centroid() - c.primary.centroid());
  return out;
}

std::map<std::string, std::map<std::string, std::size_t>> strata_counts(const Linelist& linelist) {
  std::map<std::string, std::map<std::string, std::size_t>> out;
  for (const auto& c : linelist.cases) {
    for (const auto& [key, value] : c.strata) ++out[key][value];
  }
  return out;
}

} // namespace epidelay
