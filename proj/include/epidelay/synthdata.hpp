#pragma once

#include "epidelay/distributions.hpp"
#include "epidelay/linelist.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace epidelay {

/// Censoring and truncation applied when observing an outbreak.
struct ObservationModel {
  /// Primary events have time density proportional to exp(growth_rate * t) on [0, duration].
  double growth_rate = 0.0;
  double duration = 30.0;
  std::size_t n_cases = 1000;
  double primary_width = 1.0;
  double secondary_width = 1.0;
  /// Cases are kept iff their secondary window ends by this time.
  std::optional<double> truncation_time;

  void validate() const;
};

struct OutbreakScenario {
  ObservationModel observation;
  DelayDistribution true_dist = DelayDistribution::gamma(2.0, 0.5);
  std::uint64_t seed = 1;
  std::string delay_name = "incubation period";
  /// Categorical covariates assigned uniformly at random, e.g. {"sex": {"f", "m"}}.
  std::map<std::string, std::vector<std::string>> strata;

  void validate() const;
};

struct SimulatedCase {
  std::string id;
  double primary;
  double secondary;
  double delay;
  bool included;
};

struct SimTruth {
  OutbreakScenario scenario;
  /// Every generated case, including those removed by truncation.
  std::vector<SimulatedCase> cases;
};

struct Simulation {
  Linelist linelist;
  SimTruth truth;
};

Simulation simulate_linelist(const OutbreakScenario& scenario);

/// Midpoint delays of the cases that survive censoring and truncation when
/// `fit` is the true delay distribution. This is the predictive distribution
/// of observed delays used for posterior-predictive overlays.
std::vector<double> simulate_observed_from_fit(const DelayDistribution& fit,
                                               const ObservationModel& observation,
                                               std::uint64_t seed);

/// `id,true_primary,true_secondary,included`.
void write_truth_csv(const SimTruth& truth, std::ostream& out);

} // namespace epidelay
