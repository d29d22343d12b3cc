#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ranklab/dataset.hpp"
#include "ranklab/numeric.hpp"
#include "ranklab/policy.hpp"
#include "ranklab/scorers.hpp"
#include "ranklab/trainers.hpp"

namespace ranklab {

/// One-step MDP: states are queries, actions are pool documents.
struct MDPInstance {
  std::vector<std::string> states;
  std::vector<std::vector<std::string>> actions;
  std::vector<std::vector<double>> q_table;  ///< Q(s, a), parallel to actions
  std::vector<double> visitation;            ///< rho over states

  std::size_t num_pairs() const;
  /// Throws std::invalid_argument on a broken invariant.
  void validate() const;
};

/// pi(a|s) together with grad log pi(a|s) for every pair. The gradient of
/// state s is non-zero only on params [offset, offset + width), so
/// per-state softmax tables stay sparse while a shared scorer uses one
/// dense block.
struct StatePolicy {
  std::size_t offset = 0;
  std::size_t width = 0;
  std::vector<double> probs;
  std::vector<double> grad_log;  ///< actions x width, row-major

  std::span<const double> grad(std::size_t a) const { return {grad_log.data() + a * width, width}; }
};

struct TabularPolicy {
  std::size_t num_params = 0;
  std::vector<StatePolicy> states;

  void validate(const MDPInstance& instance) const;
};

/// Independent softmax per state over its own logits, each state owning a
/// block of parameters.
TabularPolicy tabular_softmax(const std::vector<std::vector<double>>& logits, double temperature = 1.0);

/// Explicit probabilities and gradient rows sharing one parameter block of
/// size `dim`.
TabularPolicy tabular_explicit(const std::vector<std::vector<double>>& probs,
                               const std::vector<std::vector<std::vector<double>>>& grads, std::size_t dim);

/// Tabulates a scorer-backed policy over the full pool of every query.
TabularPolicy tabular_from_policy(const SoftmaxPolicy& policy, const Dataset& ds);

struct BuiltInstance {
  MDPInstance instance;
  TabularPolicy policy;
};

/// Q(s, a) = reward(f_D(a, s)) over full pools, uniform visitation.
BuiltInstance build_instance(const Dataset& ds, const Scorer& D, const SoftmaxPolicy& policy, RewardSpec reward);

struct PgBaseline {
  enum class Kind { Constant, ValueFunction };

  Kind kind = Kind::Constant;
  double value = 0.0;

  static PgBaseline constant(double b) { return {Kind::Constant, b}; }
  /// b(s) = sum_a pi(a|s) Q(s, a)
  static PgBaseline value_function() { return {Kind::ValueFunction, 0.0}; }
};

/// Per-state baseline values.
std::vector<double> baseline_values(const MDPInstance& instance, const TabularPolicy& policy,
                                    const PgBaseline& baseline);

/// Largest instance enumerated exactly.
inline constexpr std::size_t kMaxEnumeratedPairs = 1'000'000;

class EnumerationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// g(b) = grad log pi(a|s) (Q(s, a) - b(s)) with s ~ rho, a ~ pi(.|s).
std::vector<double> gradient_sample(const MDPInstance& instance, const TabularPolicy& policy,
                                    const PgBaseline& baseline, Rng& rng);

std::vector<double> exact_gradient_mean(const MDPInstance& instance, const TabularPolicy& policy,
                                        const PgBaseline& baseline);

/// E ||g(b) - E g(b)||^2
double exact_variance(const MDPInstance& instance, const TabularPolicy& policy, const PgBaseline& baseline);

/// Single-pass estimate of the same quantity from n samples. The standard
/// error comes from batch means over min(100, n / 2) batches; it is
/// infinite when fewer than two batches are available.
Estimate mc_variance(const MDPInstance& instance, const TabularPolicy& policy, const PgBaseline& baseline,
                     std::size_t n, Rng& rng);

struct Partition {
  double b = 0.0;
  std::vector<std::vector<std::size_t>> a1;  ///< Q < b
  std::vector<std::vector<std::size_t>> a2;  ///< Q >= b
  std::optional<double> q_max;               ///< empty when every A1 is empty
  bool any_a1_empty = false;
  bool any_a2_empty = false;
};

Partition partition_actions(const MDPInstance& instance, double b);

struct VarianceTerms {
  double term_a1 = 0.0;
  double term_a2 = 0.0;
};

/// Split of exact_variance under a constant baseline by action set, both
/// terms centered on the global mean.
VarianceTerms variance_decomposition(const MDPInstance& instance, const TabularPolicy& policy, double b);

struct BoundRhs {
  double value = 0.0;       ///< centered on E[grad log pi]
  double uncentered = 0.0;  ///< ||grad log pi||^2 inside the expectation
  double factored = 0.0;    ///< b^2 (q_max / b - 1)^2 form; equals value for b != 0
  double a1_mass = 0.0;     ///< E_rho[P(a in A1)]
};

/// (q_max - b)^2 E_rho[P(A1) E_{pi|A1} ||grad log pi - E grad log pi||^2].
/// `b` may differ from the partition's own threshold (frozen-partition
/// sweeps). Throws std::invalid_argument when q_max is undefined.
BoundRhs bound_rhs(const MDPInstance& instance, const TabularPolicy& policy, double b, const Partition& partition);

struct BoundChainReport {
  double b = 0.0;
  double exact_variance = 0.0;
  double term_a1 = 0.0;
  double term_a2 = 0.0;
  std::optional<double> q_max;
  std::optional<double> bound_rhs;
  double p_a1 = 0.0;
  bool a2_empty = false;
  bool term_a1_holds = false;  ///< term_a1 >= bound_rhs
  bool variance_holds = false; ///< exact_variance >= bound_rhs; relies on dropping the A2 term
  std::size_t pointwise_checked = 0;
  std::size_t pointwise_failures = 0;
};

/// Comparisons allow a relative slack of 1e-12 for rounding.
BoundChainReport verify_bound_chain(const MDPInstance& instance, const TabularPolicy& policy, double b);

struct SweepRow {
  double b = 0.0;
  double bound_rhs = 0.0;
  bool above_q_max = false;
};

/// bound_rhs along `bs` with the partition frozen at `b0`.
std::vector<SweepRow> bound_sweep(const MDPInstance& instance, const TabularPolicy& policy, double b0,
                                  std::span<const double> bs);

/// True when bound_rhs strictly increases over the rows above q_max.
bool sweep_monotone(std::span<const SweepRow> rows);

struct StudyConfig {
  std::size_t num_queries = 50;
  std::size_t pool_size = 500;
  std::size_t feature_dim = 46;
  double noise_sigma = 0.0;
  double b = 0.5;
  std::size_t mc_samples = 100'000;
  // Discriminator fit before the measurement.
  std::size_t d_epochs = 20;
  double d_learning_rate = 0.004;
  std::size_t batch_size = 8;
  std::size_t K = 5;
  double init_scale = 0.01;
};

struct StudyRow {
  double fraction = 0.0;
  double b = 0.0;
  std::optional<double> q_max;
  std::optional<double> bound_rhs;
  double exact_variance = 0.0;
  double mc_variance = 0.0;
  double mc_se = 0.0;
  double p_a1 = 0.0;
};

struct StudyInstance {
  double fraction = 0.0;
  BuiltInstance built;
};

/// The instance the study measures at one fraction: a linear discriminator
/// fit on K true positives against K uniform pool draws per query, a linear
/// generator at initialization, Q = sigmoid(f_D).
StudyInstance study_instance(double fraction, const StudyConfig& cfg, std::uint64_t seed);

/// Partition at cfg.b, bound, exact variance and an MC estimate with
/// cfg.mc_samples draws from `rng`.
StudyRow measure_study_instance(const StudyInstance& instance, const StudyConfig& cfg, Rng& rng);

/// One row per fraction; the MC stream of row i is derived from (seed, 100 + i).
std::vector<StudyRow> sparsity_vs_bound_study(std::span<const double> fractions, const StudyConfig& cfg,
                                              std::uint64_t seed);

/// Header `fraction,b,q_max,bound_rhs,exact_variance,mc_variance,mc_se,p_a1`;
/// undefined values are written as empty fields.
void write_study_csv(std::ostream& out, std::span<const StudyRow> rows);

}  // namespace ranklab
