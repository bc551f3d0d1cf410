#pragma once

#include "epidelay/distributions.hpp"
#include "epidelay/linelist.hpp"

#include <optional>
#include <string>

namespace epidelay {

/// Prior density of the latent primary event time within its window.
struct PrimaryPrior {
  enum class Kind { Uniform, GrowthTilted };
  Kind kind = Kind::Uniform;
  /// Growth rate r for GrowthTilted (density proportional to exp(r * p)).
  double rate = 0.0;

  static PrimaryPrior uniform() { return {}; }
  static PrimaryPrior growth_tilted(double r) { return {Kind::GrowthTilted, r}; }
  friend bool operator==(const PrimaryPrior&, const PrimaryPrior&) = default;
};

/// Which biases a likelihood corrects for.
///
/// Right truncation and dynamical (growth-rate) correction are mutually
/// exclusive: applying both overcorrects and overestimates the delay. The
/// dynamical correction models the forward distribution through backward
/// cohorts and therefore requires the backward modeling direction.
class AdjustmentSet {
public:
  /// Double interval censoring only.
  AdjustmentSet() = default;
  /// Throws ValidationError when the combination is not allowed.
  AdjustmentSet(bool double_censoring, bool right_truncation, std::optional<double> dynamical_rate,
                Direction direction, PrimaryPrior primary_prior = {});

  static AdjustmentSet censoring_only() { return {}; }
  static AdjustmentSet censoring_and_truncation() {
    return {true, true, std::nullopt, Direction::Forward};
  }
  static AdjustmentSet dynamical(double rate) { return {true, false, rate, Direction::Backward}; }
  /// Midpoint delays, no censoring adjustment. Comparison baseline only.
  static AdjustmentSet naive(bool right_truncation = false) {
    return {false, right_truncation, std::nullopt, Direction::Forward};
  }

  AdjustmentSet with_primary_prior(PrimaryPrior prior) const;

  bool double_censoring() const { return double_censoring_; }
  bool right_truncation() const { return right_truncation_; }
  const std::optional<double>& dynamical_rate() const { return dynamical_rate_; }
  Direction direction() const { return direction_; }
  const PrimaryPrior& primary_prior() const { return primary_prior_; }

  /// e.g. "{double_censoring, right_truncation}" or "{double_censoring, dynamical(r=0.1)}".
  std::string describe() const;

  friend bool operator==(const AdjustmentSet&, const AdjustmentSet&) = default;

private:
  bool double_censoring_ = true;
  bool right_truncation_ = false;
  std::optional<double> dynamical_rate_;
  Direction direction_ = Direction::Forward;
  PrimaryPrior primary_prior_;
};

struct DecisionContext {
  bool real_time = false;
  Direction modeling_direction = Direction::Forward;
  bool growth_rate_known = false;
  /// Used for the dynamical correction when growth_rate_known is set.
  double growth_rate = 0.0;
  bool surveillance_ended_early = false;
};

/// Which adjustments to apply, always including double interval censoring:
///   forward, real time or surveillance ended early -> + right truncation
///   forward, complete retrospective data           -> censoring only
///   backward                                       -> + dynamical(r); needs a known r
AdjustmentSet decide_adjustments(const DecisionContext& context);

/// Summary of the forward distribution implied by a backward distribution
/// under constant growth rate r: forward density proportional to b(x) e^{r x}.
/// Throws DivergenceError when that density cannot be normalized.
SummaryStats backward_to_forward(const DelayDistribution& backward, double rate);
/// The forward density itself (in-family for Gamma and Normal).
TiltedDensity forward_from_backward(const DelayDistribution& backward, double rate);

} // namespace epidelay
