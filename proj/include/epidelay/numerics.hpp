#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace epidelay::numerics {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_cdf(double z);
/// Upper tail 1 - Phi(z).
double normal_ccdf(double z);
/// Inverse standard normal CDF: rational approximation followed by one
/// Halley refinement step, accurate to ~1e-15 relative.
double inverse_normal_cdf(double p);

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussLegendre gauss_legendre(int n);

/// Adaptive Gauss-Kronrod integration on [a, b]; b may be +inf.
/// Throws ConvergenceError when the error estimate exceeds tolerance
/// by a wide margin.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10);

/// Counter-based seed derivation for independent streams.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Uniform draw in the open interval (0, 1) from 53 random bits.
double open_uniform(std::mt19937_64& rng);
double standard_normal(std::mt19937_64& rng);

} // namespace epidelay::numerics
