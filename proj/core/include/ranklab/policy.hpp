#pragma once

#include <span>
#include <vector>

#include "ranklab/dataset.hpp"
#include "ranklab/numeric.hpp"
#include "ranklab/scorers.hpp"

namespace ranklab {

/// Generator distribution p(d|q) = softmax(f(d, q) / T) over a candidate pool.
struct SoftmaxPolicy {
  Scorer scorer;
  double temperature = 1.0;
};

/// `pool` holds pool positions of query `qi`; the result is parallel to it.
std::vector<double> policy_probs(const SoftmaxPolicy& policy, const Dataset& ds, std::size_t qi,
                                 std::span<const std::size_t> pool);

/// k draws from a probability vector parallel to `pool`, returned as pool
/// positions.
std::vector<std::size_t> draw_positions(std::span<const double> probs, std::span<const std::size_t> pool,
                                        std::size_t k, Rng& rng, bool with_replacement = true);

/// K draws from policy_probs, returned as pool positions. Without
/// replacement, K may not exceed the pool size.
std::vector<std::size_t> sample_docs(const SoftmaxPolicy& policy, const Dataset& ds, std::size_t qi,
                                     std::span<const std::size_t> pool, std::size_t K, Rng& rng,
                                     bool with_replacement = true);

/// Quantities shared by every log-probability gradient over one pool:
/// the distribution and the expected score gradient sum_i p_i grad f_i.
struct PoolScoreFunction {
  std::vector<double> probs;
  std::vector<double> expected_score_grad;
};

PoolScoreFunction pool_score_function(const SoftmaxPolicy& policy, const Dataset& ds, std::size_t qi,
                                      std::span<const std::size_t> pool);

/// out += scale * grad log p(doc|q), reusing precomputed pool terms.
void accumulate_log_prob_gradient(const SoftmaxPolicy& policy, const PoolScoreFunction& terms, const Dataset& ds,
                                  std::size_t qi, std::size_t doc, double scale, std::span<double> out);

/// grad_theta log p(doc|q) = (grad f_doc - sum_i p_i grad f_i) / T.
std::vector<double> log_prob_gradient(const SoftmaxPolicy& policy, const Dataset& ds, std::size_t qi,
                                      std::span<const std::size_t> pool, std::size_t doc);

/// sigmoid(f) weights normalized over the pool.
std::vector<double> normalized_discriminator_probs(const Scorer& model, const Dataset& ds, std::size_t qi,
                                                   std::span<const std::size_t> pool);

/// k i.i.d. draws with probability proportional to sigmoid(f(d, q)).
std::vector<std::size_t> normalized_discriminator_sampling(const Scorer& model, const Dataset& ds, std::size_t qi,
                                                           std::span<const std::size_t> pool, std::size_t k,
                                                           Rng& rng);

}  // namespace ranklab
