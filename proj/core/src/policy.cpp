#include "ranklab/policy.hpp"

#include <algorithm>
#include <stdexcept>

namespace ranklab {

namespace {

void require_pool(std::span<const std::size_t> pool)
{
  if (pool.empty()) throw std::invalid_argument("candidate pool is empty");
}

}  // namespace

std::vector<std::size_t> draw_positions(std::span<const double> probs, std::span<const std::size_t> pool,
                                        std::size_t k, Rng& rng, bool with_replacement)
{
  if (k < 1) throw std::invalid_argument("number of samples must be at least 1");
  std::vector<std::size_t> out;
  out.reserve(k);
  if (with_replacement) {
    std::discrete_distribution<std::size_t> dist(probs.begin(), probs.end());
    for (std::size_t i = 0; i < k; ++i) out.push_back(pool[dist(rng)]);
    return out;
  }
  if (k > pool.size()) throw std::invalid_argument("cannot draw more documents than the pool holds without replacement");
  std::vector<double> w(probs.begin(), probs.end());
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = sample_index(w, rng);
    out.push_back(pool[j]);
    w[j] = 0.0;
  }
  return out;
}

std::vector<double> policy_probs(const SoftmaxPolicy& policy, const Dataset& ds, std::size_t qi,
                                 std::span<const std::size_t> pool)
{
  require_pool(pool);
  return softmax(score_all(policy.scorer, ds, qi, pool), policy.temperature);
}

std::vector<std::size_t> sample_docs(const SoftmaxPolicy& policy, const Dataset& ds, std::size_t qi,
                                     std::span<const std::size_t> pool, std::size_t K, Rng& rng,
                                     bool with_replacement)
{
  if (K < 1) throw std::invalid_argument("K must be at least 1");
  const auto p = policy_probs(policy, ds, qi, pool);
  return draw_positions(p, pool, K, rng, with_replacement);
}

PoolScoreFunction pool_score_function(const SoftmaxPolicy& policy, const Dataset& ds, std::size_t qi,
                                      std::span<const std::size_t> pool)
{
  PoolScoreFunction t;
  t.probs = policy_probs(policy, ds, qi, pool);
  t.expected_score_grad.assign(policy.scorer.num_params(), 0.0);
  for (std::size_t i = 0; i < pool.size(); ++i)
    policy.scorer.accumulate_gradient(ds.example(qi, pool[i]), t.probs[i], t.expected_score_grad);
  return t;
}

void accumulate_log_prob_gradient(const SoftmaxPolicy& policy, const PoolScoreFunction& terms, const Dataset& ds,
                                  std::size_t qi, std::size_t doc, double scale, std::span<double> out)
{
  const double s = scale / policy.temperature;
  policy.scorer.accumulate_gradient(ds.example(qi, doc), s, out);
  axpy(-s, terms.expected_score_grad, out);
}

std::vector<double> log_prob_gradient(const SoftmaxPolicy& policy, const Dataset& ds, std::size_t qi,
                                      std::span<const std::size_t> pool, std::size_t doc)
{
  require_pool(pool);
  if (std::find(pool.begin(), pool.end(), doc) == pool.end())
    throw std::invalid_argument("document is not in the candidate pool");
  std::vector<double> g(policy.scorer.num_params(), 0.0);
  if (pool.size() == 1) return g;
  const auto terms = pool_score_function(policy, ds, qi, pool);
  accumulate_log_prob_gradient(policy, terms, ds, qi, doc, 1.0, g);
  return g;
}

std::vector<double> normalized_discriminator_probs(const Scorer& model, const Dataset& ds, std::size_t qi,
                                                   std::span<const std::size_t> pool)
{
  require_pool(pool);
  std::vector<double> w = score_all(model, ds, qi, pool);
  double z = 0.0;
  for (auto& v : w) {
    v = sigmoid(v);
    z += v;
  }
  for (auto& v : w) v /= z;
  return w;
}

std::vector<std::size_t> normalized_discriminator_sampling(const Scorer& model, const Dataset& ds, std::size_t qi,
                                                           std::span<const std::size_t> pool, std::size_t k,
                                                           Rng& rng)
{
  const auto p = normalized_discriminator_probs(model, ds, qi, pool);
  return draw_positions(p, pool, k, rng, true);
}

}  // namespace ranklab
