#pragma once

#include "epidelay/adjustments.hpp"
#include "epidelay/distributions.hpp"
#include "epidelay/linelist.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace epidelay {

struct CaseLoglik {
  double value = 0.0;
  /// The likelihood underflowed to zero; value is -inf.
  bool zero_likelihood = false;
  /// N(p) = F(T - p) vanished at a quadrature node; that node contributed nothing.
  bool truncation_clamped = false;
};

/// Log-likelihood of one case with its latent event times integrated out.
///
/// The primary time has a uniform (or growth-tilted) density on its window;
/// the secondary window probability is integrated over it with fixed
/// Gauss-Legendre rules of `nodes` points on each smooth piece. The result is
/// divided by the secondary window measure, so that vanishing windows recover
/// the log density of the delay. With right truncation each term is
/// normalized by F(T - p); with a dynamical rate r, F is the CDF of the
/// backward density b(x) proportional to f(x) e^{-r x}.
CaseLoglik loglik_case(const DelayDistribution& dist, const CaseRecord& record,
                       const AdjustmentSet& adjustments, std::optional<double> observation_time,
                       int nodes = 21);

/// Whole-linelist likelihood for repeated evaluation during fitting.
///
/// Cases whose windows coincide after shifting by the primary lower bound
/// share one term, and the CDF is evaluated once per distinct argument, so
/// daily-censored data costs a few hundred CDF calls per evaluation
/// regardless of n. Sums run in a fixed order and are bit-reproducible.
class LinelistLikelihood {
public:
  /// Throws ValidationError when right truncation is requested without an
  /// observation time, when the linelist is empty, or when a positive-support
  /// family meets a case whose every possible delay is negative.
  LinelistLikelihood(const Linelist& linelist, Family family, AdjustmentSet adjustments,
                     std::optional<double> observation_time, int nodes = 21);

  struct Evaluation {
    double total = 0.0;
    /// One entry per distinct window pattern.
    std::vector<double> pattern_values;
    std::size_t zero_likelihood_cases = 0;
    std::size_t clamped_cases = 0;
  };

  Evaluation evaluate(const DelayDistribution& dist) const;
  double total(const DelayDistribution& dist) const { return evaluate(dist).total; }
  /// Per-case values in linelist order.
  std::vector<double> case_values(const DelayDistribution& dist) const;

  std::size_t n_cases() const { return case_pattern_.size(); }
  std::size_t n_patterns() const { return patterns_.size(); }
  /// Pattern index of each case.
  const std::vector<std::size_t>& case_pattern() const { return case_pattern_; }
  /// Number of cases sharing each pattern.
  const std::vector<double>& pattern_counts() const { return pattern_counts_; }

  Family family() const { return family_; }
  const AdjustmentSet& adjustments() const { return adjustments_; }
  std::optional<double> observation_time() const { return observation_time_; }
  int nodes() const { return nodes_; }

private:
  struct Pair {
    std::size_t lo;
    std::size_t hi;
  };
  struct Node {
    double weight;
    std::size_t pair_begin;
    std::size_t pair_end;
    /// Index of T - p in args_, or npos without truncation.
    std::size_t norm;
  };
  struct Pattern {
    std::size_t node_begin = 0;
    std::size_t node_end = 0;
    double log_inv_measure = 0.0;
    // Midpoint baseline.
    double naive_delay = 0.0;
    std::optional<double> naive_horizon;
  };

  Family family_;
  AdjustmentSet adjustments_;
  std::optional<double> observation_time_;
  int nodes_;
  std::vector<Pattern> patterns_;
  std::vector<Node> node_terms_;
  std::vector<Pair> pairs_;
  std::vector<double> args_;
  std::vector<std::size_t> case_pattern_;
  std::vector<double> pattern_counts_;
};

/// Resolves the truncation horizon: explicit override, else the linelist's.
std::optional<double> resolve_observation_time(const Linelist& linelist,
                                               std::optional<double> override_time);

} // namespace epidelay
