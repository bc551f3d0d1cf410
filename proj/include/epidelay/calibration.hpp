#pragma once

#include "epidelay/fit.hpp"
#include "epidelay/synthdata.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace epidelay {

/// Repeated simulate -> fit runs of one fixed scenario.
struct SbcConfig {
  OutbreakScenario scenario;
  Family family = Family::Lognormal;
  AdjustmentSet adjustments = AdjustmentSet::censoring_and_truncation();
  /// ci_level sets the interval checked for coverage; seed is replaced per replicate.
  FitOptions fit_options;
  int replicates = 100;
  std::uint64_t seed = kDefaultSeed;
  /// Families ranked by AIC from MLE fits on each replicate; empty skips selection.
  std::vector<Family> candidates;

  void validate() const;
};

struct SbcReplicate {
  int index = 0;
  std::uint64_t seed = 0;
  std::size_t n_observed = 0;
  Estimate mean;
  bool covered = false;
  bool converged = false;
  std::optional<Family> selected;
};

struct SbcSummary {
  double truth_mean = 0.0;
  int replicates = 0;
  int covered = 0;
  int not_converged = 0;
  /// Replicates whose fit failed outright.
  int failed = 0;
  double coverage = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
  /// Replicates where the candidate ranking put the scenario's family first.
  int selected_true = 0;
  std::vector<SbcReplicate> rows;
};

/// Replicate i simulates with derive_seed(seed, i) and fits with a seed
/// derived from that. `progress` is called after each replicate.
SbcSummary run_sbc(const SbcConfig& config,
                   const std::function<void(const SbcReplicate&)>& progress = {});

/// `replicate,seed,n,mean,lower,upper,covered,converged,selected`.
std::string sbc_csv(const SbcSummary& summary);
std::string sbc_summary_json(const SbcSummary& summary);

} // namespace epidelay
