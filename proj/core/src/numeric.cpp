#include "ranklab/numeric.hpp"

#include <numeric>
#include <stdexcept>

namespace ranklab {

std::vector<double> softmax(std::span<const double> scores, double temperature)
{
  if (scores.empty()) throw std::invalid_argument("softmax of an empty score vector");
  if (!(temperature > 0.0)) throw std::invalid_argument("softmax temperature must be positive");
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp((scores[i] - top) / temperature);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

std::size_t sample_index(std::span<const double> weights, Rng& rng)
{
  std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());
  return dist(rng);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream)
{
  // splitmix64 finalizer over the pair
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace ranklab
