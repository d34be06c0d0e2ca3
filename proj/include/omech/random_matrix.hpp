#pragma once

// Seeded Gaussian unitary ensemble, used to realize a bounded-support spectrum
// for the continuum profile.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "omech/errors.hpp"
#include "omech/operator.hpp"
#include "omech/spectral.hpp"

namespace omech {

/// Hermitian H with E|H_jk|^2 = 1/N: diagonal N(0, 1/N), off-diagonal real and
/// imaginary parts N(0, 1/(2N)). Its spectrum fills [-2, 2] as N grows.
inline OperatorElement sample_gue(std::size_t N, std::mt19937_64& rng) {
  detail::require(N >= 1, "ensemble dimension must be positive");
  const double n = double(N);
  std::normal_distribution<double> diag(0.0, std::sqrt(1.0 / n));
  std::normal_distribution<double> off(0.0, std::sqrt(0.5 / n));
  const auto d = Eigen::Index(N);
  ComplexMatrix<double> h(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    h(r, r) = diag(rng);
    for (Eigen::Index c = r + 1; c < d; ++c) {
      const double re = off(rng);
      const double im = off(rng);
      h(r, c) = {re, im};
      h(c, r) = {re, -im};
    }
  }
  return OperatorElement(std::move(h), true);
}

/// Semicircle CDF on [-2, 2].
inline double semicircle_cdf(double x) {
  if (x <= -2) return 0;
  if (x >= 2) return 1;
  const double pi = std::numbers::pi;
  return 0.5 + x * std::sqrt(4 - x * x) / (4 * pi) + std::asin(x / 2) / pi;
}

/// Two-sided Kolmogorov-Smirnov distance of a sample against a CDF.
template <class Cdf>
double kolmogorov_distance(std::vector<double> sample, Cdf cdf) {
  detail::require(!sample.empty(), "empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = double(sample.size());
  double d = 0;
  for (std::size_t k = 0; k < sample.size(); ++k) {
    const double f = cdf(sample[k]);
    d = std::max({d, std::abs(f - double(k) / n), std::abs(double(k + 1) / n - f)});
  }
  return d;
}

struct EnsembleProfile {
  std::size_t N = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<double> pooled;  // lambda / N of X = N H, pooled over samples, ascending
  PhaseProfile mean_profile;   // sample-averaged sorted spectrum
  double ks_distance = 0;      // against the semicircle
};

/// Ensemble mode: X = N H with H from the GUE, so lambda(X)/N follows the semicircle.
inline EnsembleProfile gue_profile(std::size_t N, std::size_t samples, std::uint64_t seed, double weight = 1.0) {
  detail::require(samples >= 1, "need at least one ensemble sample");
  std::mt19937_64 rng(seed);
  EnsembleProfile out;
  out.N = N;
  out.samples = samples;
  out.seed = seed;
  std::vector<double> mean(N, 0.0);
  for (std::size_t s = 0; s < samples; ++s) {
    const auto h = sample_gue(N, rng);
    const auto lambda = eigenvalues(double(N) * h);
    for (std::size_t k = 0; k < N; ++k) {
      out.pooled.push_back(lambda[k] / double(N));
      mean[k] += lambda[k] / double(samples);
    }
  }
  std::sort(out.pooled.begin(), out.pooled.end());
  out.mean_profile = profile_from_spectrum(mean, weight);
  out.ks_distance = kolmogorov_distance(out.pooled, semicircle_cdf);
  return out;
}

}  // namespace omech
