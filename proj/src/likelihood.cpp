#include "epidelay/likelihood.hpp"

#include "epidelay/error.hpp"
#include "epidelay/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace epidelay {

namespace {

using numerics::kInf;
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct WeightedNode {
  double p;
  double w;
};

// Gauss-Legendre nodes over the primary window, split at every point where
// the integrand has a kink, weighted by the primary-event prior density.
std::vector<WeightedNode> primary_nodes(const std::vector<Segment>& primary,
                                        std::vector<double> breaks, const PrimaryPrior& prior,
                                        const numerics::GaussLegendre& rule) {
  const double origin = primary.front().lo;
  const bool tilted = prior.kind == PrimaryPrior::Kind::GrowthTilted && prior.rate != 0.0;
  const double r = prior.rate;

  // Normalizer of the prior over the window.
  double z = 0.0;
  for (const auto& seg : primary) {
    if (tilted) {
      z += std::exp(r * (seg.lo - origin)) * std::expm1(r * (seg.hi - seg.lo)) / r;
    } else {
      z += seg.hi - seg.lo;
    }
  }

  std::sort(breaks.begin(), breaks.end());
  std::vector<WeightedNode> out;
  for (const auto& seg : primary) {
    std::vector<double> cuts{seg.lo};
    for (double b : breaks) {
      if (b > seg.lo && b < seg.hi && b > cuts.back()) cuts.push_back(b);
    }
    cuts.push_back(seg.hi);
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      // Smoothstep substitution p = a + L (3u^2 - 2u^3) flattens the
      // endpoint kinks, where F(x) may behave like x^k with k < 1.
      const double a = cuts[k];
      const double len = cuts[k + 1] - cuts[k];
      for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const double u = 0.5 * (rule.nodes[j] + 1.0);
        const double p = a + len * u * u * (3.0 - 2.0 * u);
        const double jac = len * 6.0 * u * (1.0 - u);
        const double density = tilted ? std::exp(r * (p - origin)) / z : 1.0 / z;
        out.push_back({p, 0.5 * rule.weights[j] * jac * density});
      }
    }
  }
  return out;
}

std::vector<double> kink_points(const std::vector<Segment>& secondary,
                                std::optional<double> horizon) {
  std::vector<double> breaks;
  for (const auto& seg : secondary) {
    breaks.push_back(seg.lo);
    breaks.push_back(horizon ? std::min(seg.hi, *horizon) : seg.hi);
  }
  if (horizon) breaks.push_back(*horizon);
  return breaks;
}

std::optional<double> truncation_horizon(const AdjustmentSet& adj, std::optional<double> t) {
  if (!adj.right_truncation()) return std::nullopt;
  if (!t) throw ValidationError("likelihood: right truncation requires an observation time T");
  if (!std::isfinite(*t)) throw ValidationError("likelihood: observation time must be finite");
  return t;
}

void check_sign_compatibility(const CaseRecord& c, bool positive_support) {
  if (positive_support && c.secondary.upper() - c.primary.lower() <= 0.0) {
    throw ValidationError("likelihood: case '" + c.id +
                          "' admits only negative delays, incompatible with a positive-support "
                          "family");
  }
}

// Shared access to F, either of the delay itself or of its backward tilt.
struct Cdf {
  const DelayDistribution& dist;
  std::optional<TiltedDensity> backward;

  Cdf(const DelayDistribution& d, const AdjustmentSet& adj) : dist(d) {
    if (adj.dynamical_rate()) backward.emplace(d, *adj.dynamical_rate());
  }
  double cdf(double x) const { return backward ? backward->cdf(x) : dist.cdf(x); }
  double prob(double a, double b) const {
    return backward ? backward->interval_probability(a, b) : dist.interval_probability(a, b);
  }
  double log_pdf(double x) const { return backward ? backward->log_pdf(x) : dist.log_pdf(x); }
};

} // namespace

std::optional<double> resolve_observation_time(const Linelist& linelist,
                                               std::optional<double> override_time) {
  return override_time ? override_time : linelist.meta.observation_time;
}

CaseLoglik loglik_case(const DelayDistribution& dist, const CaseRecord& record,
                       const AdjustmentSet& adjustments, std::optional<double> observation_time,
                       int nodes) {
  if (nodes < 1) throw ValidationError("likelihood: quadrature needs at least one node");
  const auto horizon = truncation_horizon(adjustments, observation_time);
  check_sign_compatibility(record, dist.positive_support());
  const Cdf f(dist, adjustments);

  CaseLoglik out;
  if (!adjustments.double_censoring()) {
    const double p = record.primary.centroid();
    double v = f.log_pdf(record.secondary.centroid() - p);
    if (horizon) v -= std::log(f.cdf(*horizon - p));
    out.value = v;
    out.zero_likelihood = !(v > -kInf);
    if (out.zero_likelihood) out.value = -kInf;
    return out;
  }

  const auto rule = numerics::gauss_legendre(nodes);
  const auto& sec = record.secondary.segments();
  const auto grid = primary_nodes(record.primary.segments(), kink_points(sec, horizon),
                                  adjustments.primary_prior(), rule);
  double total = 0.0;
  for (const auto& node : grid) {
    double num = 0.0;
    for (const auto& seg : sec) {
      const double hi = horizon ? std::min(seg.hi, *horizon) : seg.hi;
      if (hi > seg.lo) num += std::max(0.0, f.prob(seg.lo - node.p, hi - node.p));
    }
    if (horizon) {
      const double norm = f.cdf(*horizon - node.p);
      if (!(norm > 0.0)) {
        out.truncation_clamped = true;
        continue;
      }
      num /= norm;
    }
    total += node.w * num;
  }
  total /= record.secondary.measure();
  if (!(total > 0.0)) {
    out.value = -kInf;
    out.zero_likelihood = true;
  } else {
    out.value = std::log(total);
  }
  return out;
}

LinelistLikelihood::LinelistLikelihood(const Linelist& linelist, Family family,
                                       AdjustmentSet adjustments,
                                       std::optional<double> observation_time, int nodes)
    : family_(family), adjustments_(std::move(adjustments)), nodes_(nodes) {
  if (linelist.cases.empty()) throw ValidationError("likelihood: linelist is empty");
  if (nodes < 1) throw ValidationError("likelihood: quadrature needs at least one node");
  observation_time_ = truncation_horizon(adjustments_, observation_time);
  const bool positive = family != Family::Normal;
  const auto rule = numerics::gauss_legendre(nodes);

  // Raw CDF arguments; remapped to sorted unique indices at the end.
  std::vector<double> raw;
  auto add_arg = [&](double x) {
    raw.push_back(positive ? std::max(x, 0.0) : x);
    return raw.size() - 1;
  };

  std::map<std::vector<double>, std::size_t> index;
  case_pattern_.reserve(linelist.cases.size());
  for (const auto& c : linelist.cases) {
    check_sign_compatibility(c, positive);
    const double origin = c.primary.lower();
    std::vector<Segment> prim;
    std::vector<Segment> sec;
    for (const auto& s : c.primary.segments()) prim.push_back({s.lo - origin, s.hi - origin});
    for (const auto& s : c.secondary.segments()) sec.push_back({s.lo - origin, s.hi - origin});
    std::optional<double> horizon;
    if (observation_time_) horizon = *observation_time_ - origin;

    std::vector<double> key{static_cast<double>(prim.size())};
    for (const auto& s : prim) key.insert(key.end(), {s.lo, s.hi});
    key.push_back(static_cast<double>(sec.size()));
    for (const auto& s : sec) key.insert(key.end(), {s.lo, s.hi});
    if (horizon) key.push_back(*horizon);

    const auto [it, inserted] = index.try_emplace(std::move(key), patterns_.size());
    case_pattern_.push_back(it->second);
    if (!inserted) {
      pattern_counts_[it->second] += 1.0;
      continue;
    }
    pattern_counts_.push_back(1.0);

    Pattern pat;
    pat.log_inv_measure = -std::log(c.secondary.measure());
    pat.naive_delay = c.secondary.centroid() - c.primary.centroid();
    if (horizon) pat.naive_horizon = *observation_time_ - c.primary.centroid();
    pat.node_begin = node_terms_.size();
    if (adjustments_.double_censoring()) {
      for (const auto& node : primary_nodes(prim, kink_points(sec, horizon),
                                            adjustments_.primary_prior(), rule)) {
        Node term{node.w, pairs_.size(), pairs_.size(), kNone};
        for (const auto& s : sec) {
          const double hi = horizon ? std::min(s.hi, *horizon) : s.hi;
          if (!(hi > s.lo)) continue;
          const std::size_t a = add_arg(s.lo - node.p);
          const std::size_t b = add_arg(hi - node.p);
          pairs_.push_back({a, b});
        }
        term.pair_end = pairs_.size();
        if (horizon) term.norm = add_arg(*horizon - node.p);
        node_terms_.push_back(term);
      }
    }
    pat.node_end = node_terms_.size();
    patterns_.push_back(pat);
  }

  args_ = raw;
  std::sort(args_.begin(), args_.end());
  args_.erase(std::unique(args_.begin(), args_.end()), args_.end());
  auto remap = [&](std::size_t i) {
    return static_cast<std::size_t>(std::lower_bound(args_.begin(), args_.end(), raw[i]) -
                                    args_.begin());
  };
  for (auto& pr : pairs_) pr = {remap(pr.lo), remap(pr.hi)};
  for (auto& node : node_terms_) {
    if (node.norm != kNone) node.norm = remap(node.norm);
  }
}

LinelistLikelihood::Evaluation LinelistLikelihood::evaluate(const DelayDistribution& dist) const {
  if (dist.family() != family_) throw ValidationError("likelihood: family mismatch");
  Evaluation ev;
  ev.pattern_values.assign(patterns_.size(), 0.0);
  const Cdf f(dist, adjustments_);

  if (!adjustments_.double_censoring()) {
    for (std::size_t i = 0; i < patterns_.size(); ++i) {
      const auto& pat = patterns_[i];
      double v = f.log_pdf(pat.naive_delay);
      if (pat.naive_horizon) v -= std::log(f.cdf(*pat.naive_horizon));
      if (!(v > -kInf)) {
        v = -kInf;
        ev.zero_likelihood_cases += static_cast<std::size_t>(pattern_counts_[i]);
      }
      ev.pattern_values[i] = v;
    }
  } else {
    std::vector<double> lower(args_.size());
    std::vector<double> upper(args_.size());
    if (f.backward) {
      f.backward->tabulate(args_, lower, upper);
    } else {
      for (std::size_t k = 0; k < args_.size(); ++k) {
        lower[k] = dist.cdf(args_[k]);
        upper[k] = dist.ccdf(args_[k]);
      }
    }
    // Difference taken in whichever tail keeps precision.
    auto prob = [&](const Pair& pr) {
      const double d = lower[pr.lo] < 0.5 ? lower[pr.hi] - lower[pr.lo]
                                          : upper[pr.lo] - upper[pr.hi];
      return std::max(d, 0.0);
    };
    for (std::size_t i = 0; i < patterns_.size(); ++i) {
      const auto& pat = patterns_[i];
      double total = 0.0;
      bool clamped = false;
      for (std::size_t n = pat.node_begin; n < pat.node_end; ++n) {
        const auto& node = node_terms_[n];
        double num = 0.0;
        for (std::size_t k = node.pair_begin; k < node.pair_end; ++k) num += prob(pairs_[k]);
        if (node.norm != kNone) {
          const double norm = lower[node.norm];
          if (!(norm > 0.0)) {
            clamped = true;
            continue;
          }
          num /= norm;
        }
        total += node.weight * num;
      }
      const auto count = static_cast<std::size_t>(pattern_counts_[i]);
      if (clamped) ev.clamped_cases += count;
      if (total > 0.0) {
        ev.pattern_values[i] = std::log(total) + pat.log_inv_measure;
      } else {
        ev.pattern_values[i] = -kInf;
        ev.zero_likelihood_cases += count;
      }
    }
  }

  double sum = 0.0;
  for (std::size_t i = 0; i < patterns_.size(); ++i) sum += pattern_counts_[i] * ev.pattern_values[i];
  ev.total = sum;
  return ev;
}

std::vector<double> LinelistLikelihood::case_values(const DelayDistribution& dist) const {
  const auto ev = evaluate(dist);
  std::vector<double> out;
  out.reserve(case_pattern_.size());
  for (std::size_t idx : case_pattern_) out.push_back(ev.pattern_values[idx]);
  return out;
}

} // namespace epidelay
