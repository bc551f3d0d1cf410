#include "epidelay/diagnostics.hpp"

#include "epidelay/error.hpp"
#include "epidelay/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace epidelay::diagnostics {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_shape(const Chains& chains) {
  if (chains.empty() || chains.front().size() < 4) {
    throw ValidationError("diagnostics: need at least one chain of four draws");
  }
  for (const auto& c : chains) {
    if (c.size() != chains.front().size()) {
      throw ValidationError("diagnostics: chains must have equal length");
    }
  }
}

Chains split(const Chains& chains) {
  Chains out;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return out;
}

// Normal scores of pooled fractional ranks (ties averaged).
Chains rank_normalize(const Chains& chains) {
  std::vector<std::pair<double, std::size_t>> pooled;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (std::size_t i = 0; i < chains[c].size(); ++i) {
      pooled.emplace_back(chains[c][i], c * chains[c].size() + i);
    }
  }
  std::sort(pooled.begin(), pooled.end());
  const double s = static_cast<double>(pooled.size());
  std::vector<double> z(pooled.size());
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    const double score = numerics::inverse_normal_cdf((rank - 0.375) / (s + 0.25));
    for (std::size_t k = i; k < j; ++k) z[pooled[k].second] = score;
    i = j;
  }
  Chains out(chains.size());
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const std::size_t n = chains[c].size();
    out[c].assign(z.begin() + static_cast<std::ptrdiff_t>(c * n),
                  z.begin() + static_cast<std::ptrdiff_t>((c + 1) * n));
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

double rhat_basic(const Chains& chains) {
  const double n = static_cast<double>(chains.front().size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& c : chains) {
    means.push_back(mean_of(c));
    w += variance_of(c);
  }
  w /= static_cast<double>(chains.size());
  const double b = n * variance_of(means);
  if (w <= 0.0) return b > 0.0 ? std::numeric_limits<double>::infinity() : kNaN;
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

// Biased autocovariance estimate at one lag.
double autocovariance(const std::vector<double>& x, double mean, std::size_t lag) {
  double acc = 0.0;
  for (std::size_t i = 0; i + lag < x.size(); ++i) acc += (x[i] - mean) * (x[i + lag] - mean);
  return acc / static_cast<double>(x.size());
}

// Multi-chain ESS with Geyer's initial monotone sequence estimator.
double ess_basic(const Chains& chains) {
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  std::vector<double> means(m);
  std::vector<double> vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean_of(chains[c]);
    vars[c] = variance_of(chains[c]);
  }
  const double w = mean_of(vars);
  const double nn = static_cast<double>(n);
  const double b_over_n = m > 1 ? variance_of(means) : 0.0;
  const double var_plus = (nn - 1.0) / nn * w + b_over_n;
  if (!(var_plus > 0.0)) return kNaN;

  auto rho = [&](std::size_t lag) {
    double acov = 0.0;
    for (std::size_t c = 0; c < m; ++c) acov += autocovariance(chains[c], means[c], lag);
    acov /= static_cast<double>(m);
    return 1.0 - (w - acov) / var_plus;
  };

  // Paired sums P_k = rho_{2k} + rho_{2k+1}, kept while positive and made monotone.
  double tau = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
    double pair = rho(lag) + rho(lag + 1);
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);
    tau += pair;
    prev_pair = pair;
  }
  tau = -1.0 + 2.0 * tau;
  const double total = static_cast<double>(m * n);
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

Chains fold(const Chains& chains) {
  std::vector<double> all;
  for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
  const double med = quantile(all, 0.5);
  Chains out = chains;
  for (auto& c : out) {
    for (double& x : c) x = std::abs(x - med);
  }
  return out;
}

} // namespace

double split_rhat(const Chains& chains) {
  check_shape(chains);
  const auto halves = split(chains);
  const double bulk = rhat_basic(rank_normalize(halves));
  const double tail = rhat_basic(rank_normalize(fold(halves)));
  // Constant draws give ties only; fall back to the raw statistic.
  if (std::isnan(bulk)) return rhat_basic(halves);
  if (std::isnan(tail)) return bulk;
  return std::max(bulk, tail);
}

double ess_bulk(const Chains& chains) {
  check_shape(chains);
  return ess_basic(rank_normalize(split(chains)));
}

double ess_mean(const Chains& chains) {
  check_shape(chains);
  return ess_basic(split(chains));
}

double mcse_mean(const Chains& chains) {
  std::vector<double> all;
  for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
  return std::sqrt(variance_of(all) / ess_mean(chains));
}

Waic waic_weighted(const Eigen::MatrixXd& pointwise, const std::vector<double>& counts) {
  if (pointwise.rows() < 2) throw ValidationError("waic: need at least two draws");
  if (static_cast<std::size_t>(pointwise.cols()) != counts.size()) {
    throw ValidationError("waic: counts do not match columns");
  }
  const double s = static_cast<double>(pointwise.rows());
  long double lppd_sum = 0.0L;
  long double p_sum = 0.0L;
  for (Eigen::Index j = 0; j < pointwise.cols(); ++j) {
    const auto col = pointwise.col(j);
    const double mx = col.maxCoeff();
    double lppd = mx;
    if (std::isfinite(mx)) lppd += std::log((col.array() - mx).exp().sum() / s);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / (s - 1.0);
    lppd_sum += static_cast<long double>(counts[static_cast<std::size_t>(j)]) * lppd;
    p_sum += static_cast<long double>(counts[static_cast<std::size_t>(j)]) * var;
  }
  Waic out;
  out.lppd = static_cast<double>(lppd_sum);
  out.p_waic = static_cast<double>(p_sum);
  out.waic = -2.0 * (out.lppd - out.p_waic);
  return out;
}

Waic waic(const Eigen::MatrixXd& pointwise) {
  return waic_weighted(pointwise, std::vector<double>(static_cast<std::size_t>(pointwise.cols()), 1.0));
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ValidationError("quantile: no values");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

} // namespace epidelay::diagnostics
