#include "epidelay/synthdata.hpp"

#include "epidelay/error.hpp"
#include "epidelay/numerics.hpp"

#include <cmath>
#include <ostream>
#include <random>

namespace epidelay {

namespace {

// Inverse CDF of the density proportional to exp(r t) on [0, D].
double primary_time(double u, double r, double duration) {
  if (r == 0.0) return u * duration;
  return std::log1p(u * std::expm1(r * duration)) / r;
}

EventWindow grid_window(double t, double width) {
  const double lo = std::floor(t / width) * width;
  return EventWindow::interval(lo, lo + width);
}

} // namespace

void ObservationModel::validate() const {
  if (!(duration > 0.0)) throw ValidationError("scenario: duration must be positive");
  if (!(primary_width > 0.0) || !(secondary_width > 0.0)) {
    throw ValidationError("scenario: censoring widths must be positive");
  }
  if (!std::isfinite(growth_rate)) throw ValidationError("scenario: growth rate must be finite");
  if (truncation_time && !(*truncation_time > 0.0)) {
    throw ValidationError("scenario: truncation time must be positive");
  }
}

void OutbreakScenario::validate() const {
  observation.validate();
  for (const auto& [name, levels] : strata) {
    if (name.empty() || levels.empty()) {
      throw ValidationError("scenario: strata need a name and at least one level");
    }
  }
}

Simulation simulate_linelist(const OutbreakScenario& scenario) {
  scenario.validate();
  const auto& obs = scenario.observation;
  const std::size_t n = obs.n_cases;

  std::mt19937_64 rng(numerics::derive_seed(scenario.seed, 0));
  const auto delays = sample(scenario.true_dist, n, numerics::derive_seed(scenario.seed, 1));
  std::mt19937_64 strata_rng(numerics::derive_seed(scenario.seed, 2));

  Simulation sim;
  sim.truth.scenario = scenario;
  sim.truth.cases.reserve(n);
  sim.linelist.meta.observation_time = obs.truncation_time;
  sim.linelist.meta.allow_negative = !scenario.true_dist.positive_support();
  sim.linelist.meta.delay_name = scenario.delay_name;

  for (std::size_t i = 0; i < n; ++i) {
    const double p = primary_time(numerics::open_uniform(rng), obs.growth_rate, obs.duration);
    const double s = p + delays[i];
    auto primary = grid_window(p, obs.primary_width);
    auto secondary = grid_window(s, obs.secondary_width);
    const bool included = !obs.truncation_time || secondary.upper() <= *obs.truncation_time;
    std::string id = "c" + std::to_string(i + 1);
    std::map<std::string, std::string> strata;
    for (const auto& [name, levels] : scenario.strata) {
      std::uniform_int_distribution<std::size_t> pick(0, levels.size() - 1);
      strata[name] = levels[pick(strata_rng)];
    }
    sim.truth.cases.push_back({id, p, s, delays[i], included});
    if (included) {
      sim.linelist.cases.push_back(
          {std::move(id), std::move(primary), std::move(secondary), std::move(strata), true});
    }
  }
  return sim;
}

std::vector<double> simulate_observed_from_fit(const DelayDistribution& fit,
                                               const ObservationModel& observation,
                                               std::uint64_t seed) {
  OutbreakScenario scenario;
  scenario.observation = observation;
  scenario.true_dist = fit;
  scenario.seed = seed;
  const auto sim = simulate_linelist(scenario);
  if (sim.linelist.cases.empty()) return {};
  return naive_delays(sim.linelist);
}

void write_truth_csv(const SimTruth& truth, std::ostream& out) {
  out << "id,true_primary,true_secondary,included\n";
  for (const auto& c : truth.cases) {
    out << c.id << ',' << format_number(c.primary) << ',' << format_number(c.secondary) << ','
        << (c.included ? 1 : 0) << '\n';
  }
}

} // namespace epidelay
