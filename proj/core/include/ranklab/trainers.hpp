#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ranklab/dataset.hpp"
#include "ranklab/errors.hpp"
#include "ranklab/numeric.hpp"
#include "ranklab/policy.hpp"
#include "ranklab/run_record.hpp"
#include "ranklab/scorers.hpp"

namespace ranklab {

// ---------------------------------------------------------------------------
// Rewards and baselines

enum class RewardKind {
  Raw,               ///< softplus(f) = log(1 + exp(f))
  Sigmoid,           ///< sigmoid(f)
  SigmoidBaselined,  ///< 2 (sigmoid(f) - b)
};

struct RewardSpec {
  RewardKind kind = RewardKind::SigmoidBaselined;
  double b = 0.5;  ///< only used by SigmoidBaselined

  double operator()(double f) const;
};

/// "raw", "sigmoid" or "sigmoid-baselined[:b]".
RewardSpec parse_reward(std::string_view text);
std::string to_string(const RewardSpec& reward);

double reinforce_reward_raw(const Scorer& D, const Dataset& ds, std::size_t qi, std::size_t pos);
double reinforce_reward_baselined(const Scorer& D, const Dataset& ds, std::size_t qi, std::size_t pos, double b);

struct BaselineSpec {
  enum class Kind { Constant, ValueExact, ValueMc };

  Kind kind = Kind::Constant;
  double value = 0.0;           ///< Constant only
  std::size_t mc_samples = 100;  ///< ValueMc only

  static BaselineSpec constant(double b) { return {Kind::Constant, b, 0}; }
  static BaselineSpec value_exact() { return {Kind::ValueExact, 0.0, 0}; }
  static BaselineSpec value_mc(std::size_t n) { return {Kind::ValueMc, 0.0, n}; }
};

/// "constant:<b>", "value-exact" or "value-mc:<n>".
BaselineSpec parse_baseline(std::string_view text);
std::string to_string(const BaselineSpec& baseline);

struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;
};

/// Reward of a pool position for the current query.
using RewardFn = std::function<double(std::size_t pos)>;

RewardFn discriminator_reward(const Scorer& D, const Dataset& ds, std::size_t qi, RewardSpec reward);

/// b(q) = sum_d p(d|q) reward(d), by enumeration of the pool.
double value_function_baseline(const SoftmaxPolicy& policy, const Dataset& ds, std::size_t qi,
                               std::span<const std::size_t> pool, const RewardFn& reward);
double value_function_baseline(const SoftmaxPolicy& policy, const Scorer& D, const Dataset& ds, std::size_t qi,
                               std::span<const std::size_t> pool, RewardSpec reward);

/// Monte-Carlo estimate of the same expectation from n policy draws.
Estimate value_function_baseline_mc(const SoftmaxPolicy& policy, const Dataset& ds, std::size_t qi,
                                    std::span<const std::size_t> pool, const RewardFn& reward, std::size_t n,
                                    Rng& rng);

struct GeneratorGradient {
  std::vector<double> gradient;
  std::vector<std::size_t> samples;
  double mean_reward = 0.0;
  double baseline = 0.0;
};

/// (1/K) sum_k grad log p(d_k|q) (reward(d_k) - b(q)) with d_k ~ p.
GeneratorGradient generator_gradient(const SoftmaxPolicy& policy, const Dataset& ds, std::size_t qi,
                                     std::span<const std::size_t> pool, std::size_t K, const RewardFn& reward,
                                     const BaselineSpec& baseline, Rng& rng, bool with_replacement = true);

// ---------------------------------------------------------------------------
// Discriminator updates

struct ExampleRef {
  std::size_t query = 0;
  std::size_t pos = 0;
};

/// (query, better, worse) with `better` ranked above `worse` in the data.
struct Triple {
  std::size_t query = 0;
  std::size_t better = 0;
  std::size_t worse = 0;
};

/// sum log sigmoid(f) over positives + sum log(1 - sigmoid(f)) over negatives.
double discriminator_objective(const Scorer& D, const Dataset& ds, std::span<const ExampleRef> positives,
                               std::span<const ExampleRef> negatives);
std::vector<double> discriminator_objective_gradient(const Scorer& D, const Dataset& ds,
                                                     std::span<const ExampleRef> positives,
                                                     std::span<const ExampleRef> negatives);

/// One ascent step; returns the objective before the step.
double discriminator_step(Scorer& D, const Dataset& ds, std::span<const ExampleRef> positives,
                          std::span<const ExampleRef> negatives, double lr);

/// sum log sigmoid(f_better - f_worse)
double pairwise_objective(const Scorer& D, const Dataset& ds, std::span<const Triple> triples);
double pairwise_discriminator_step(Scorer& D, const Dataset& ds, std::span<const Triple> triples, double lr);

// ---------------------------------------------------------------------------
// Configuration and epochs

struct TrainConfig {
  double learning_rate = 0.004;
  std::size_t batch_size = 8;
  std::size_t epochs_outer = 50;
  std::size_t epochs_inner = 30;
  std::size_t K = 5;
  std::size_t dns_k = 5;
  BaselineSpec baseline = BaselineSpec::constant(0.0);
  RewardSpec reward{RewardKind::SigmoidBaselined, 0.5};
  std::uint64_t seed = 40;
  double temperature = 1.0;
  std::size_t d_steps = 1;  ///< discriminator steps per IRGAN batch
  std::size_t g_steps = 1;  ///< generator steps per IRGAN batch
  bool exclude_positives = true;
  bool with_replacement = true;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Shuffled batches of query indices.
std::vector<std::vector<std::size_t>> query_batches(std::size_t num_queries, std::size_t batch_size, Rng& rng);

/// Mean over (query, relevant doc) pairs of log p(d+|q) under the full-pool softmax.
double mean_log_likelihood(const SoftmaxPolicy& policy, const Dataset& ds);

/// Gradient ascent on sum log p(d+|q) for cfg.epochs_outer epochs, seeded
/// by cfg.seed. Records `log_likelihood` for epoch 0 (before training) and
/// every epoch after it, plus `queries_skipped` for queries without positives.
RunRecord pretrain_mle(SoftmaxPolicy& generator, const Dataset& ds, const TrainConfig& cfg,
                       const std::string& tag = "generator");

/// Exact (pools up to 1000 documents) or Monte-Carlo estimate of
/// J = sum_q E_true[log D] + E_p[log(1 - D)]. p_true is uniform over the
/// relevant documents; queries without them contribute only the second term.
enum class ObjectiveMode { Auto, Exact, MonteCarlo };
Estimate irgan_objective(const SoftmaxPolicy& G, const Scorer& D, const Dataset& ds, std::size_t n_mc, Rng& rng,
                         ObjectiveMode mode = ObjectiveMode::Auto);

void irgan_pointwise_epoch(SoftmaxPolicy& G, Scorer& D, const Dataset& ds, const TrainConfig& cfg, Rng& rng,
                           RunRecord& record, std::size_t epoch, const std::string& tag = "irgan-pointwise");

void irgan_pairwise_epoch(SoftmaxPolicy& G, Scorer& D, const Dataset& ds, const TrainConfig& cfg, Rng& rng,
                          RunRecord& record, std::size_t epoch, const std::string& tag = "irgan-pairwise");

/// One epoch of `model` on positives from the judgments and negatives drawn
/// from `sampler`'s normalized discriminator distribution over the
/// non-positive pool. `sampler` may alias `model`.
double contrastive_epoch(Scorer& model, const Scorer& sampler, const Dataset& ds, const TrainConfig& cfg, Rng& rng);

void single_d_epoch(Scorer& M, const Dataset& ds, const TrainConfig& cfg, Rng& rng, RunRecord& record,
                    std::size_t epoch, const std::string& tag = "single-d");

/// Per-model random streams for Dual-D.
struct DualStreams {
  Rng a;
  Rng b;

  static DualStreams from_seed(std::uint64_t seed);
};

/// A trains cfg.epochs_inner epochs against B's snapshot from the start of
/// the outer epoch, then B trains against A's snapshot. Throws
/// std::logic_error if a frozen snapshot changes.
void dual_d_outer_epoch(Scorer& A, Scorer& B, const Dataset& ds, const TrainConfig& cfg, DualStreams& streams,
                        RunRecord& record, std::size_t epoch, const std::string& tag = "dual-d");

/// 0 selects A, 1 selects B; fixed per run by the seed.
int dual_d_choice(std::uint64_t seed);

/// Highest-scored of min(k, |pool|) candidates drawn uniformly without
/// replacement; ties go to the earlier pool position among the draws.
std::size_t dns_pick(const Scorer& D, const Dataset& ds, std::size_t qi, std::span<const std::size_t> pool,
                     std::size_t k, Rng& rng);

/// For each positive, draws dns_k candidates without replacement from the
/// non-positive pool and trains against the highest-scored one.
void dns_epoch(Scorer& D, const Dataset& ds, const TrainConfig& cfg, Rng& rng, RunRecord& record, std::size_t epoch,
               const std::string& tag = "dns");

/// Queries with at least one positive and at least one non-positive.
std::vector<std::size_t> contrastive_queries(const Dataset& ds);

/// Throws NumericError when any parameter is not finite.
void check_finite(const Scorer& s, std::string_view what);

}  // namespace ranklab
