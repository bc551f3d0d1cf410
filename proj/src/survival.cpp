#include "epidelay/survival.hpp"

#include "epidelay/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace epidelay {

double SurvivalCurve::survival_at(double t) const {
  double s = 1.0;
  for (const auto& step : steps) {
    if (step.time > t) break;
    s = step.survival;
  }
  return s;
}

SurvivalCurve kaplan_meier(const std::vector<double>& delays, const std::vector<bool>& observed) {
  if (delays.empty()) throw ValidationError("kaplan_meier: no delays");
  if (delays.size() != observed.size()) {
    throw ValidationError("kaplan_meier: delays and event flags differ in length");
  }
  // time -> (events, censored)
  std::map<double, std::pair<std::size_t, std::size_t>> table;
  for (std::size_t i = 0; i < delays.size(); ++i) {
    if (!std::isfinite(delays[i]) || delays[i] < 0.0) {
      throw ValidationError("kaplan_meier: delays must be finite and non-negative");
    }
    auto& cell = table[delays[i]];
    (observed[i] ? cell.first : cell.second) += 1;
  }
  SurvivalCurve curve;
  std::size_t at_risk = delays.size();
  double s = 1.0;
  for (const auto& [time, counts] : table) {
    const auto [events, censored] = counts;
    if (events > 0) s *= 1.0 - static_cast<double>(events) / static_cast<double>(at_risk);
    curve.steps.push_back({time, s, at_risk, events, censored});
    at_risk -= events + censored;
  }
  return curve;
}

} // namespace epidelay
