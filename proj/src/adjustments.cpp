#include "epidelay/adjustments.hpp"

#include "epidelay/error.hpp"
#include "epidelay/linelist.hpp"

#include <cmath>

namespace epidelay {

AdjustmentSet::AdjustmentSet(bool double_censoring, bool right_truncation,
                             std::optional<double> dynamical_rate, Direction direction,
                             PrimaryPrior primary_prior)
    : double_censoring_(double_censoring), right_truncation_(right_truncation),
      dynamical_rate_(dynamical_rate), direction_(direction), primary_prior_(primary_prior) {
  if (right_truncation_ && dynamical_rate_) {
    throw ValidationError(
        "adjustments: right truncation and dynamical bias must not be adjusted for together");
  }
  if (dynamical_rate_ && direction_ != Direction::Backward) {
    throw ValidationError("adjustments: the dynamical correction requires backward modeling");
  }
  if (dynamical_rate_ && !std::isfinite(*dynamical_rate_)) {
    throw ValidationError("adjustments: dynamical growth rate must be finite");
  }
  if (!std::isfinite(primary_prior_.rate)) {
    throw ValidationError("adjustments: primary prior rate must be finite");
  }
}

AdjustmentSet AdjustmentSet::with_primary_prior(PrimaryPrior prior) const {
  return {double_censoring_, right_truncation_, dynamical_rate_, direction_, prior};
}

std::string AdjustmentSet::describe() const {
  std::string out = "{";
  auto add = [&out](const std::string& item) {
    if (out.size() > 1) out += ", ";
    out += item;
  };
  if (double_censoring_) add("double_censoring");
  if (right_truncation_) add("right_truncation");
  if (dynamical_rate_) add("dynamical(r=" + format_number(*dynamical_rate_) + ")");
  if (primary_prior_.kind == PrimaryPrior::Kind::GrowthTilted) {
    add("primary_prior=growth_tilted(r=" + format_number(primary_prior_.rate) + ")");
  }
  if (!double_censoring_ && !right_truncation_) add("none");
  return out + "}";
}

AdjustmentSet decide_adjustments(const DecisionContext& context) {
  if (context.modeling_direction == Direction::Backward) {
    if (!context.growth_rate_known) {
      throw ValidationError(
          "decide_adjustments: backward modeling needs a known growth rate for the dynamical "
          "correction");
    }
    return AdjustmentSet::dynamical(context.growth_rate);
  }
  if (context.real_time || context.surveillance_ended_early) {
    return AdjustmentSet::censoring_and_truncation();
  }
  return AdjustmentSet::censoring_only();
}

TiltedDensity forward_from_backward(const DelayDistribution& backward, double rate) {
  return TiltedDensity(backward, -rate);
}

SummaryStats backward_to_forward(const DelayDistribution& backward, double rate) {
  return forward_from_backward(backward, rate).summary();
}

} // namespace epidelay
