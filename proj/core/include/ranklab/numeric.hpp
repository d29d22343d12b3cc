#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ranklab {

/// The one random engine used across the library. Every stochastic
/// operation takes it by reference so that a run is a pure function of
/// its seed.
using Rng = std::mt19937_64;

/// Scores are clamped to this magnitude before entering a sigmoid.
inline constexpr double kScoreClamp = 30.0;

inline double clamp_score(double f) { return std::clamp(f, -kScoreClamp, kScoreClamp); }

/// Logistic function on a clamped score. Never returns exactly 0 or 1.
inline double sigmoid(double f)
{
  const double z = clamp_score(f);
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(sigmoid(f)) with the same clamp as sigmoid().
inline double log_sigmoid(double f)
{
  const double z = clamp_score(f);
  return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

/// log(1 + exp(f)), overflow-safe on both tails. Not clamped.
inline double softplus(double f)
{
  if (f > kScoreClamp) return f + std::log1p(std::exp(-f));
  if (f < -kScoreClamp) return std::exp(f);
  return std::log1p(std::exp(f));
}

inline double dot(std::span<const double> a, std::span<const double> b)
{
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y)
{
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

inline bool all_finite(std::span<const double> a)
{
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

/// Softmax of scores / temperature with max-subtraction.
std::vector<double> softmax(std::span<const double> scores, double temperature = 1.0);

/// Draws one index from an (unnormalized, non-negative) weight vector.
std::size_t sample_index(std::span<const double> weights, Rng& rng);

/// Derives an independent seed for a named sub-stream from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace ranklab
