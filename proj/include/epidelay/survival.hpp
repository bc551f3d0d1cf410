#pragma once

#include <cstddef>
#include <vector>

namespace epidelay {

struct SurvivalStep {
  double time;
  /// S(t) on [time, next time).
  double survival;
  std::size_t at_risk;
  std::size_t events;
  std::size_t censored;
};

/// Product-limit estimate over the distinct observed times.
struct SurvivalCurve {
  std::vector<SurvivalStep> steps;

  /// 1 before the first time.
  double survival_at(double t) const;
};

/// Kaplan-Meier estimator for right-censored delays.
/// Throws ValidationError on empty or mismatched input or negative delays.
SurvivalCurve kaplan_meier(const std::vector<double>& delays, const std::vector<bool>& observed);

} // namespace epidelay
