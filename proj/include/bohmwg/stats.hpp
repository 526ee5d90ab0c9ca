#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "bohmwg/errors.hpp"

namespace bohmwg {

/**
 * Distribution on a uniform line of nodes where node i carries weight w_i
 * spread evenly over the cell [x_i - h/2, x_i + h/2). Weights need not sum to 1.
 */
class CellDistribution1D {
 public:
  CellDistribution1D(std::span<const double> weights, double origin, double spacing)
      : origin_(origin), spacing_(spacing), cdf_(weights.size() + 1, 0.0) {
    if (weights.empty()) throw InvalidArgument("distribution: no cells");
    if (!(spacing > 0.0)) throw InvalidArgument("distribution: spacing must be positive");
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!(weights[i] >= 0.0)) throw InvalidArgument("distribution: weights must be non-negative");
      cdf_[i + 1] = cdf_[i] + weights[i];
    }
    total_ = cdf_.back();
    if (!(total_ > 0.0)) throw InvalidArgument("distribution: total weight is zero");
  }

  std::size_t cells() const { return cdf_.size() - 1; }
  double lower() const { return origin_ - spacing_ / 2.0; }
  double upper() const { return lower() + spacing_ * static_cast<double>(cells()); }

  double cdf(double x) const {
    const double u = (x - lower()) / spacing_;
    if (u <= 0.0) return 0.0;
    if (u >= static_cast<double>(cells())) return 1.0;
    const auto i = static_cast<std::size_t>(u);
    const double frac = u - static_cast<double>(i);
    return (cdf_[i] + frac * (cdf_[i + 1] - cdf_[i])) / total_;
  }

  /// Inverse of cdf for p in [0, 1].
  double quantile(double p) const {
    const double target = std::clamp(p, 0.0, 1.0) * total_;
    auto it = std::upper_bound(cdf_.begin() + 1, cdf_.end(), target);
    if (it == cdf_.end()) --it;
    // skip empty cells so the result lands where the weight is
    while (it != cdf_.begin() + 1 && *(it - 1) == *it) --it;
    const auto i = static_cast<std::size_t>(it - cdf_.begin() - 1);
    const double w = cdf_[i + 1] - cdf_[i];
    const double frac = w > 0.0 ? (target - cdf_[i]) / w : 0.5;
    return lower() + spacing_ * (static_cast<double>(i) + std::clamp(frac, 0.0, 1.0));
  }

 private:
  double origin_;
  double spacing_;
  std::vector<double> cdf_;
  double total_ = 0.0;
};

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and `dist`.
template <class Dist>
double ks_distance(std::vector<double> samples, const Dist& dist) {
  if (samples.empty()) throw InvalidArgument("ks_distance: no samples");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = dist.cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Draws n points from the distribution by inverse CDF with a seeded generator.
inline std::vector<double> sample_distribution(const CellDistribution1D& dist, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(n);
  for (double& v : out) v = dist.quantile(u(rng));
  return out;
}

/// n points at the stratified quantiles (i + 1/2)/n; deterministic and evenly spread in probability.
inline std::vector<double> quantile_points(const CellDistribution1D& dist, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = dist.quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
  return out;
}

/// Asymptotic 95% critical value of the one-sample KS statistic.
inline double ks_critical_95(std::size_t n) { return 1.36 / std::sqrt(static_cast<double>(n)); }

}  // namespace bohmwg
