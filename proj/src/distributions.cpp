#include "epidelay/distributions.hpp"

#include "epidelay/error.hpp"
#include "epidelay/numerics.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>

namespace epidelay {

namespace {

namespace bm = boost::math;
using Policy = bm::policies::policy<bm::policies::overflow_error<bm::policies::ignore_error>,
                                    bm::policies::promote_double<false>>;

using numerics::kInf;

void require(bool ok, const char* message) {
  if (!ok) throw ValidationError(message);
}

// Weibull squared coefficient of variation as a function of shape.
double weibull_cv2(double shape) {
  return std::expm1(std::lgamma(1.0 + 2.0 / shape) - 2.0 * std::lgamma(1.0 + 1.0 / shape));
}

double weibull_mean(double shape, double scale) {
  return scale * std::exp(std::lgamma(1.0 + 1.0 / shape));
}

} // namespace

std::string_view family_name(Family family) {
  switch (family) {
  case Family::Gamma: return "gamma";
  case Family::Lognormal: return "lognormal";
  case Family::Weibull: return "weibull";
  case Family::Normal: return "normal";
  }
  return "unknown";
}

Family family_from_name(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Family f : kAllFamilies) {
    if (family_name(f) == lower) return f;
  }
  throw ValidationError("unknown distribution family '" + std::string(name) + "'");
}

DelayDistribution DelayDistribution::gamma(double shape, double rate) {
  require(shape > 0.0 && std::isfinite(shape), "gamma: shape must be positive and finite");
  require(rate > 0.0 && std::isfinite(rate), "gamma: rate must be positive and finite");
  return {Family::Gamma, {shape, rate}};
}

DelayDistribution DelayDistribution::lognormal(double meanlog, double sdlog) {
  require(std::isfinite(meanlog), "lognormal: meanlog must be finite");
  require(sdlog > 0.0 && std::isfinite(sdlog), "lognormal: sdlog must be positive and finite");
  return {Family::Lognormal, {meanlog, sdlog}};
}

DelayDistribution DelayDistribution::weibull(double shape, double scale) {
  require(shape > 0.0 && std::isfinite(shape), "weibull: shape must be positive and finite");
  require(scale > 0.0 && std::isfinite(scale), "weibull: scale must be positive and finite");
  return {Family::Weibull, {shape, scale}};
}

DelayDistribution DelayDistribution::normal(double mean, double sd) {
  require(std::isfinite(mean), "normal: mean must be finite");
  require(sd > 0.0 && std::isfinite(sd), "normal: sd must be positive and finite");
  return {Family::Normal, {mean, sd}};
}

DelayDistribution DelayDistribution::from_params(Family family, std::array<double, 2> p) {
  switch (family) {
  case Family::Gamma: return gamma(p[0], p[1]);
  case Family::Lognormal: return lognormal(p[0], p[1]);
  case Family::Weibull: return weibull(p[0], p[1]);
  case Family::Normal: return normal(p[0], p[1]);
  }
  throw ValidationError("from_params: unknown family");
}

std::array<std::string_view, 2> DelayDistribution::param_names() const {
  switch (family_) {
  case Family::Gamma: return {"shape", "rate"};
  case Family::Lognormal: return {"meanlog", "sdlog"};
  case Family::Weibull: return {"shape", "scale"};
  case Family::Normal: return {"mean", "sd"};
  }
  return {"", ""};
}

double DelayDistribution::log_pdf(double x) const {
  const auto [a, b] = params_;
  switch (family_) {
  case Family::Gamma:
    if (x < 0.0) return -kInf;
    if (x == 0.0) {
      if (a < 1.0) return kInf;
      return a == 1.0 ? std::log(b) : -kInf;
    }
    return (a - 1.0) * std::log(x) + a * std::log(b) - b * x - std::lgamma(a);
  case Family::Lognormal: {
    if (x <= 0.0) return -kInf;
    const double z = (std::log(x) - a) / b;
    return -0.5 * z * z - std::log(x * b) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  case Family::Weibull: {
    if (x < 0.0) return -kInf;
    if (x == 0.0) {
      if (a < 1.0) return kInf;
      return a == 1.0 ? -std::log(b) : -kInf;
    }
    const double y = x / b;
    return std::log(a / b) + (a - 1.0) * std::log(y) - std::pow(y, a);
  }
  case Family::Normal: {
    const double z = (x - a) / b;
    return -0.5 * z * z - std::log(b) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  }
  return -kInf;
}

double DelayDistribution::pdf(double x) const { return std::exp(log_pdf(x)); }

double DelayDistribution::cdf(double x) const {
  const auto [a, b] = params_;
  switch (family_) {
  case Family::Gamma:
    if (x <= 0.0) return 0.0;
    if (x == kInf) return 1.0;
    return bm::gamma_p(a, b * x, Policy());
  case Family::Lognormal:
    if (x <= 0.0) return 0.0;
    return numerics::normal_cdf((std::log(x) - a) / b);
  case Family::Weibull:
    if (x <= 0.0) return 0.0;
    return -std::expm1(-std::pow(x / b, a));
  case Family::Normal: return numerics::normal_cdf((x - a) / b);
  }
  return 0.0;
}

double DelayDistribution::ccdf(double x) const {
  const auto [a, b] = params_;
  switch (family_) {
  case Family::Gamma:
    if (x <= 0.0) return 1.0;
    if (x == kInf) return 0.0;
    return bm::gamma_q(a, b * x, Policy());
  case Family::Lognormal:
    if (x <= 0.0) return 1.0;
    return numerics::normal_ccdf((std::log(x) - a) / b);
  case Family::Weibull:
    if (x <= 0.0) return 1.0;
    return std::exp(-std::pow(x / b, a));
  case Family::Normal: return numerics::normal_ccdf((x - a) / b);
  }
  return 1.0;
}

double DelayDistribution::interval_probability(double lo, double hi) const {
  if (!(hi > lo)) return 0.0;
  const double below = cdf(lo);
  const double p = below < 0.5 ? cdf(hi) - below : ccdf(lo) - ccdf(hi);
  return std::max(p, 0.0);
}

double DelayDistribution::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("quantile: probability must lie in (0, 1)");
  const auto [a, b] = params_;
  switch (family_) {
  case Family::Gamma:
    if (p > 0.5) return bm::gamma_q_inv(a, 1.0 - p, Policy()) / b;
    return bm::gamma_p_inv(a, p, Policy()) / b;
  case Family::Lognormal: return std::exp(a + b * numerics::inverse_normal_cdf(p));
  case Family::Weibull: return b * std::pow(-std::log1p(-p), 1.0 / a);
  case Family::Normal: return a + b * numerics::inverse_normal_cdf(p);
  }
  return 0.0;
}

double DelayDistribution::mean() const {
  const auto [a, b] = params_;
  switch (family_) {
  case Family::Gamma: return a / b;
  case Family::Lognormal: return std::exp(a + 0.5 * b * b);
  case Family::Weibull: return weibull_mean(a, b);
  case Family::Normal: return a;
  }
  return 0.0;
}

double DelayDistribution::sd() const {
  const auto [a, b] = params_;
  switch (family_) {
  case Family::Gamma: return std::sqrt(a) / b;
  case Family::Lognormal: return std::exp(a + 0.5 * b * b) * std::sqrt(std::expm1(b * b));
  case Family::Weibull: return weibull_mean(a, b) * std::sqrt(weibull_cv2(a));
  case Family::Normal: return b;
  }
  return 0.0;
}

Evaluation eval(const DelayDistribution& dist, double x) {
  const double lp = dist.log_pdf(x);
  return {std::exp(lp), lp, dist.cdf(x)};
}

DelayDistribution params_from_summary(Family family, double mean, double sd) {
  require(std::isfinite(mean) && std::isfinite(sd), "params_from_summary: non-finite input");
  require(sd > 0.0, "params_from_summary: sd must be positive");
  if (family != Family::Normal) {
    require(mean > 0.0, "params_from_summary: mean must be positive for this family");
  }
  switch (family) {
  case Family::Gamma: {
    const double cv = sd / mean;
    return DelayDistribution::gamma(1.0 / (cv * cv), mean / (sd * sd));
  }
  case Family::Lognormal: {
    const double cv = sd / mean;
    const double s2 = std::log1p(cv * cv);
    return DelayDistribution::lognormal(std::log(mean) - 0.5 * s2, std::sqrt(s2));
  }
  case Family::Weibull: {
    // cv^2 decreases monotonically in the shape; bisect on log(shape).
    const double target = (sd / mean) * (sd / mean);
    double lo = std::log(0.02);
    double hi = std::log(1000.0);
    if (!(weibull_cv2(std::exp(lo)) >= target && weibull_cv2(std::exp(hi)) <= target)) {
      throw ConvergenceError("params_from_summary: Weibull shape outside solvable range");
    }
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      if (weibull_cv2(std::exp(mid)) > target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double shape = std::exp(0.5 * (lo + hi));
    if (!std::isfinite(shape)) throw ConvergenceError("params_from_summary: Weibull root failed");
    return DelayDistribution::weibull(shape, mean / std::exp(std::lgamma(1.0 + 1.0 / shape)));
  }
  case Family::Normal: return DelayDistribution::normal(mean, sd);
  }
  throw ValidationError("params_from_summary: unknown family");
}

SummaryStats summary_from_params(const DelayDistribution& dist, std::span<const double> probs) {
  SummaryStats s;
  s.mean = dist.mean();
  s.sd = dist.sd();
  for (double p : probs) s.quantiles[p] = dist.quantile(p);
  return s;
}

std::vector<double> sample(const DelayDistribution& dist, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(dist.quantile(numerics::open_uniform(rng)));
  return out;
}

// --- tilting -----------------------------------------------------------------

namespace {

std::vector<double> quadrature_breaks(const DelayDistribution& base) {
  std::vector<double> breaks;
  breaks.push_back(base.positive_support() ? 0.0 : -kInf);
  for (double p : {1e-3, 0.5, 0.999}) breaks.push_back(base.quantile(p));
  breaks.push_back(kInf);
  return breaks;
}

double integrate_pieces(const std::function<double(double)>& g, const std::vector<double>& breaks,
                        double lo, double hi) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = std::max(lo, breaks[i]);
    const double b = std::min(hi, breaks[i + 1]);
    if (b > a) total += numerics::integrate(g, a, b, 1e-11);
  }
  return total;
}

} // namespace

TiltedDensity::TiltedDensity(const DelayDistribution& base, double rate, Method method)
    : base_(base), rate_(rate) {
  if (!std::isfinite(rate)) throw ValidationError("tilt: rate must be finite");
  const auto [a, b] = base.params();

  // Divergence is decided analytically before any quadrature.
  switch (base.family()) {
  case Family::Gamma:
    if (b + rate <= 0.0) throw DivergenceError("tilt: gamma normalizer diverges (rate <= -beta)");
    break;
  case Family::Lognormal:
    if (rate < 0.0) throw DivergenceError("tilt: lognormal normalizer diverges for rate < 0");
    break;
  case Family::Weibull:
    if (rate < 0.0 && (a < 1.0 || (a == 1.0 && -rate >= 1.0 / b))) {
      throw DivergenceError("tilt: weibull normalizer diverges for this negative rate");
    }
    break;
  case Family::Normal: break;
  }

  if (method == Method::Auto) {
    if (rate == 0.0) {
      closed_form_ = base;
    } else if (base.family() == Family::Gamma) {
      closed_form_ = DelayDistribution::gamma(a, b + rate);
      log_normalizer_ = a * (std::log(b) - std::log(b + rate));
    } else if (base.family() == Family::Normal) {
      closed_form_ = DelayDistribution::normal(a - rate * b * b, b);
      log_normalizer_ = -rate * a + 0.5 * rate * rate * b * b;
    }
    if (closed_form_) {
      mean_ = closed_form_->mean();
      sd_ = closed_form_->sd();
      return;
    }
  }

  const auto breaks = quadrature_breaks(base);
  // Work relative to the tilted log-density at the base median so that large
  // |rate| does not overflow the integrand.
  const double shift = -rate * base.quantile(0.5);
  auto g = [&](double x) {
    const double lp = base.log_pdf(x);
    return lp == -kInf ? 0.0 : std::exp(lp - rate * x - shift);
  };
  const double z = integrate_pieces(g, breaks, -kInf, kInf);
  if (!(z > 0.0) || !std::isfinite(z)) throw DivergenceError("tilt: normalizer is not finite");
  log_normalizer_ = std::log(z) + shift;

  const double m = integrate_pieces([&](double x) { return x * pdf(x); }, breaks, -kInf, kInf);
  const double v =
      integrate_pieces([&](double x) { return (x - m) * (x - m) * pdf(x); }, breaks, -kInf, kInf);
  mean_ = m;
  sd_ = std::sqrt(std::max(v, 0.0));
}

double TiltedDensity::log_pdf(double x) const {
  if (closed_form_) return closed_form_->log_pdf(x);
  const double lp = base_.log_pdf(x);
  if (lp == -kInf) return -kInf;
  return lp - rate_ * x - log_normalizer_;
}

double TiltedDensity::pdf(double x) const { return std::exp(log_pdf(x)); }

double TiltedDensity::integrate_density(double a, double b) const {
  if (!(b > a)) return 0.0;
  const auto breaks = quadrature_breaks(base_);
  return integrate_pieces([this](double x) { return pdf(x); }, breaks, a, b);
}

double TiltedDensity::cdf(double x) const {
  if (closed_form_) return closed_form_->cdf(x);
  if (base_.positive_support() && x <= 0.0) return 0.0;
  if (x == kInf) return 1.0;
  if (x <= mean_) {
    return std::clamp(integrate_density(-kInf, x), 0.0, 1.0);
  }
  return std::clamp(1.0 - integrate_density(x, kInf), 0.0, 1.0);
}

double TiltedDensity::ccdf(double x) const {
  if (closed_form_) return closed_form_->ccdf(x);
  if (base_.positive_support() && x <= 0.0) return 1.0;
  if (x == kInf) return 0.0;
  if (x > mean_) {
    return std::clamp(integrate_density(x, kInf), 0.0, 1.0);
  }
  return std::clamp(1.0 - integrate_density(-kInf, x), 0.0, 1.0);
}

void TiltedDensity::tabulate(std::span<const double> sorted_x, std::vector<double>& cdf_out,
                             std::vector<double>& ccdf_out) const {
  const std::size_t n = sorted_x.size();
  cdf_out.assign(n, 0.0);
  ccdf_out.assign(n, 0.0);
  if (n == 0) return;
  if (closed_form_) {
    for (std::size_t i = 0; i < n; ++i) {
      cdf_out[i] = closed_form_->cdf(sorted_x[i]);
      ccdf_out[i] = closed_form_->ccdf(sorted_x[i]);
    }
    return;
  }
  const double floor = base_.positive_support() ? 0.0 : -kInf;
  double acc = 0.0;
  double prev = floor;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::max(sorted_x[i], floor);
    if (x > prev) acc += integrate_density(prev, x);
    prev = std::max(prev, x);
    cdf_out[i] = std::clamp(acc, 0.0, 1.0);
  }
  acc = 0.0;
  prev = kInf;
  for (std::size_t i = n; i-- > 0;) {
    const double x = std::max(sorted_x[i], floor);
    if (x < prev) acc += integrate_density(x, prev);
    prev = std::min(prev, x);
    ccdf_out[i] = std::clamp(acc, 0.0, 1.0);
  }
}

double TiltedDensity::interval_probability(double a, double b) const {
  if (closed_form_) return closed_form_->interval_probability(a, b);
  if (!(b > a)) return 0.0;
  return std::max(integrate_density(a, b), 0.0);
}

double TiltedDensity::quantile(double p) const {
  if (closed_form_) return closed_form_->quantile(p);
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("quantile: probability must lie in (0, 1)");
  double lo = base_.positive_support() ? 0.0 : mean_ - 10.0 * sd_;
  while (cdf(lo) > p) lo -= 10.0 * sd_;
  double hi = mean_ + 10.0 * sd_;
  while (cdf(hi) < p) hi += 10.0 * sd_;
  for (int iter = 0; iter < 200 && hi - lo > 1e-11; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

SummaryStats TiltedDensity::summary(std::span<const double> probs) const {
  SummaryStats s;
  s.mean = mean_;
  s.sd = sd_;
  for (double p : probs) s.quantiles[p] = quantile(p);
  return s;
}

TiltedDensity tilt(const DelayDistribution& dist, double rate) { return TiltedDensity(dist, rate); }

} // namespace epidelay
