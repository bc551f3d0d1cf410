#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace epidelay {

enum class Family { Gamma, Lognormal, Weibull, Normal };

inline constexpr std::array<Family, 4> kAllFamilies = {Family::Gamma, Family::Lognormal,
                                                       Family::Weibull, Family::Normal};

/// Lower-case family name ("gamma", "lognormal", "weibull", "normal").
std::string_view family_name(Family family);
/// Inverse of family_name; case-insensitive. Throws ValidationError.
Family family_from_name(std::string_view name);

/// The report quantile grid: 2.5, 5, 25, 50, 75, 95, 97.5 and 99 percent.
inline constexpr std::array<double, 8> kReportProbabilities = {0.025, 0.05, 0.25, 0.5,
                                                               0.75,  0.95, 0.975, 0.99};

/// A parametric delay distribution in days.
///
/// Natural parameters per family:
///   Gamma     shape k > 0, rate beta > 0
///   Lognormal meanlog mu, sdlog sigma > 0
///   Weibull   shape k > 0, scale lambda > 0
///   Normal    mean m, sd s > 0
/// Gamma, Lognormal and Weibull live on [0, inf); Normal on the real line.
/// Values are immutable once constructed; construction validates positivity.
class DelayDistribution {
public:
  static DelayDistribution gamma(double shape, double rate);
  static DelayDistribution lognormal(double meanlog, double sdlog);
  static DelayDistribution weibull(double shape, double scale);
  static DelayDistribution normal(double mean, double sd);
  /// Build from the natural parameter pair in the order listed above.
  static DelayDistribution from_params(Family family, std::array<double, 2> params);

  Family family() const { return family_; }
  const std::array<double, 2>& params() const { return params_; }
  /// Parameter names in order ("shape","rate" for Gamma etc.).
  std::array<std::string_view, 2> param_names() const;

  bool positive_support() const { return family_ != Family::Normal; }

  double pdf(double x) const;
  double log_pdf(double x) const;
  double cdf(double x) const;
  /// Survival function 1 - cdf(x), computed without cancellation.
  double ccdf(double x) const;
  /// P(a < X <= b) for a <= b, picking the tail that avoids cancellation.
  double interval_probability(double a, double b) const;
  double quantile(double p) const;

  double mean() const;
  double sd() const;

  friend bool operator==(const DelayDistribution&, const DelayDistribution&) = default;

private:
  DelayDistribution(Family family, std::array<double, 2> params)
      : family_(family), params_(params) {}

  Family family_;
  std::array<double, 2> params_;
};

struct SummaryStats {
  double mean = 0.0;
  double sd = 0.0;
  std::map<double, double> quantiles;
};

struct Evaluation {
  double pdf;
  double log_pdf;
  double cdf;
};

Evaluation eval(const DelayDistribution& dist, double x);

/// Moment matching from (mean, sd) to natural parameters.
DelayDistribution params_from_summary(Family family, double mean, double sd);

SummaryStats summary_from_params(const DelayDistribution& dist,
                                 std::span<const double> probs = kReportProbabilities);

/// Inverse-CDF sampling; deterministic in (dist, n, seed).
std::vector<double> sample(const DelayDistribution& dist, std::size_t n, std::uint64_t seed);

/// Density proportional to f(x) * exp(-rate * x) over the support of f.
///
/// Under constant exponential growth at rate r the backward delay density is
/// the forward density tilted by r. Gamma and Normal stay in-family; other
/// families are handled by adaptive quadrature.
class TiltedDensity {
public:
  enum class Method { Auto, Quadrature };

  /// Throws DivergenceError when the normalizer is infinite.
  TiltedDensity(const DelayDistribution& base, double rate, Method method = Method::Auto);

  const DelayDistribution& base() const { return base_; }
  double rate() const { return rate_; }
  double log_normalizer() const { return log_normalizer_; }
  /// The equivalent in-family distribution, when one exists.
  const std::optional<DelayDistribution>& closed_form() const { return closed_form_; }

  double pdf(double x) const;
  double log_pdf(double x) const;
  double cdf(double x) const;
  double ccdf(double x) const;
  double interval_probability(double a, double b) const;
  /// cdf and ccdf at ascending points, sharing one pass of quadrature.
  void tabulate(std::span<const double> sorted_x, std::vector<double>& cdf_out,
                std::vector<double>& ccdf_out) const;
  double quantile(double p) const;
  double mean() const { return mean_; }
  double sd() const { return sd_; }

  SummaryStats summary(std::span<const double> probs = kReportProbabilities) const;

private:
  DelayDistribution base_;
  double rate_;
  double log_normalizer_ = 0.0;
  double mean_ = 0.0;
  double sd_ = 0.0;
  std::optional<DelayDistribution> closed_form_;

  double integrate_density(double a, double b) const;
};

TiltedDensity tilt(const DelayDistribution& dist, double rate);

} // namespace epidelay
