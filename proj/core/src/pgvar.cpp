#include "ranklab/pgvar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "ranklab/dataio.hpp"

namespace ranklab {

std::size_t MDPInstance::num_pairs() const
{
  std::size_t n = 0;
  for (const auto& a : actions) n += a.size();
  return n;
}

void MDPInstance::validate() const
{
  if (states.empty()) throw std::invalid_argument("instance has no states");
  if (actions.size() != states.size() || q_table.size() != states.size() || visitation.size() != states.size())
    throw std::invalid_argument("instance tables disagree on the number of states");
  double mass = 0.0;
  for (std::size_t s = 0; s < states.size(); ++s) {
    if (actions[s].empty()) throw std::invalid_argument(fmt::format("state '{}' has no actions", states[s]));
    if (q_table[s].size() != actions[s].size())
      throw std::invalid_argument(fmt::format("Q row of state '{}' has the wrong length", states[s]));
    if (!all_finite(q_table[s])) throw std::invalid_argument(fmt::format("non-finite Q in state '{}'", states[s]));
    if (!(visitation[s] >= 0.0)) throw std::invalid_argument("negative visitation");
    mass += visitation[s];
  }
  if (std::abs(mass - 1.0) > 1e-9) throw std::invalid_argument(fmt::format("visitation sums to {}", mass));
}

void TabularPolicy::validate(const MDPInstance& instance) const
{
  if (states.size() != instance.states.size()) throw std::invalid_argument("policy and instance disagree on states");
  for (std::size_t s = 0; s < states.size(); ++s) {
    const auto& st = states[s];
    if (st.probs.size() != instance.actions[s].size())
      throw std::invalid_argument(fmt::format("policy row {} has the wrong number of actions", s));
    if (st.grad_log.size() != st.probs.size() * st.width)
      throw std::invalid_argument(fmt::format("gradient table of state {} has the wrong size", s));
    if (st.offset + st.width > num_params) throw std::invalid_argument("gradient block exceeds the parameter count");
    double mass = 0.0;
    for (double p : st.probs) {
      if (!(p >= 0.0)) throw std::invalid_argument("negative action probability");
      mass += p;
    }
    if (std::abs(mass - 1.0) > 1e-9) throw std::invalid_argument(fmt::format("policy row {} sums to {}", s, mass));
  }
}

TabularPolicy tabular_softmax(const std::vector<std::vector<double>>& logits, double temperature)
{
  TabularPolicy out;
  for (const auto& row : logits) {
    StatePolicy st;
    st.offset = out.num_params;
    st.width = row.size();
    st.probs = softmax(row, temperature);
    st.grad_log.assign(st.width * st.width, 0.0);
    // d log pi_a / d logit_j = (1[a == j] - pi_j) / T
    for (std::size_t a = 0; a < st.width; ++a)
      for (std::size_t j = 0; j < st.width; ++j)
        st.grad_log[a * st.width + j] = ((a == j ? 1.0 : 0.0) - st.probs[j]) / temperature;
    out.num_params += st.width;
    out.states.push_back(std::move(st));
  }
  return out;
}

TabularPolicy tabular_explicit(const std::vector<std::vector<double>>& probs,
                               const std::vector<std::vector<std::vector<double>>>& grads, std::size_t dim)
{
  if (probs.size() != grads.size()) throw std::invalid_argument("probs and gradients disagree on states");
  TabularPolicy out;
  out.num_params = dim;
  for (std::size_t s = 0; s < probs.size(); ++s) {
    StatePolicy st;
    st.width = dim;
    st.probs = probs[s];
    if (grads[s].size() != probs[s].size()) throw std::invalid_argument("one gradient row per action expected");
    for (const auto& g : grads[s]) {
      if (g.size() != dim) throw std::invalid_argument("gradient row has the wrong dimension");
      st.grad_log.insert(st.grad_log.end(), g.begin(), g.end());
    }
    out.states.push_back(std::move(st));
  }
  return out;
}

TabularPolicy tabular_from_policy(const SoftmaxPolicy& policy, const Dataset& ds)
{
  TabularPolicy out;
  out.num_params = policy.scorer.num_params();
  for (std::size_t qi = 0; qi < ds.num_queries(); ++qi) {
    const auto pool = candidate_pool(ds, qi, false);
    const auto terms = pool_score_function(policy, ds, qi, pool);
    StatePolicy st;
    st.width = out.num_params;
    st.probs = terms.probs;
    st.grad_log.assign(pool.size() * st.width, 0.0);
    for (std::size_t a = 0; a < pool.size(); ++a)
      accumulate_log_prob_gradient(policy, terms, ds, qi, pool[a], 1.0,
                                   std::span<double>(st.grad_log.data() + a * st.width, st.width));
    out.states.push_back(std::move(st));
  }
  return out;
}

BuiltInstance build_instance(const Dataset& ds, const Scorer& D, const SoftmaxPolicy& policy, RewardSpec reward)
{
  if (ds.empty()) throw std::invalid_argument("dataset has no queries");
  BuiltInstance out;
  auto& inst = out.instance;
  for (std::size_t qi = 0; qi < ds.num_queries(); ++qi) {
    inst.states.push_back(ds.query(qi).value);
    auto& names = inst.actions.emplace_back();
    auto& q = inst.q_table.emplace_back();
    for (std::size_t pos = 0; pos < ds.pool(qi).size(); ++pos) {
      names.push_back(ds.pool(qi)[pos].id);
      q.push_back(reward(score(D, ds, qi, pos)));
    }
  }
  inst.visitation.assign(ds.num_queries(), 1.0 / static_cast<double>(ds.num_queries()));
  out.policy = tabular_from_policy(policy, ds);
  return out;
}

std::vector<double> baseline_values(const MDPInstance& instance, const TabularPolicy& policy,
                                    const PgBaseline& baseline)
{
  std::vector<double> b(instance.states.size(), baseline.value);
  if (baseline.kind == PgBaseline::Kind::ValueFunction) {
    for (std::size_t s = 0; s < b.size(); ++s) {
      b[s] = 0.0;
      for (std::size_t a = 0; a < instance.q_table[s].size(); ++a) b[s] += policy.states[s].probs[a] * instance.q_table[s][a];
    }
  }
  return b;
}

namespace {

void check_enumerable(const MDPInstance& instance, const TabularPolicy& policy)
{
  instance.validate();
  policy.validate(instance);
  if (instance.num_pairs() > kMaxEnumeratedPairs)
    throw EnumerationError(fmt::format("{} state-action pairs exceed the enumeration cap of {}", instance.num_pairs(),
                                       kMaxEnumeratedPairs));
}

// sum_s rho(s) sum_{a in set} pi(a|s) w(s, a) grad log pi(a|s)
template <typename Weight, typename Include>
std::vector<double> weighted_grad_sum(const MDPInstance& instance, const TabularPolicy& policy, Weight weight,
                                      Include include)
{
  std::vector<double> m(policy.num_params, 0.0);
  for (std::size_t s = 0; s < instance.states.size(); ++s) {
    const auto& st = policy.states[s];
    std::span<double> block(m.data() + st.offset, st.width);
    for (std::size_t a = 0; a < st.probs.size(); ++a) {
      if (!include(s, a)) continue;
      axpy(instance.visitation[s] * st.probs[a] * weight(s, a), st.grad(a), block);
    }
  }
  return m;
}

// Sum over the selected pairs of rho pi ||w(s,a) grad log pi(a|s) - c||^2,
// using ||x - c||^2 = ||x_blk - c_blk||^2 + ||c||^2 - ||c_blk||^2.
template <typename Weight, typename Include>
double centered_second_moment(const MDPInstance& instance, const TabularPolicy& policy, std::span<const double> c,
                              Weight weight, Include include)
{
  const double c_norm = squared_norm(c);
  double total = 0.0;
  for (std::size_t s = 0; s < instance.states.size(); ++s) {
    const auto& st = policy.states[s];
    const std::span<const double> c_blk = c.subspan(st.offset, st.width);
    const double outside = std::max(0.0, c_norm - squared_norm(c_blk));
    double state_sum = 0.0;
    for (std::size_t a = 0; a < st.probs.size(); ++a) {
      if (!include(s, a) || st.probs[a] == 0.0) continue;
      const auto g = st.grad(a);
      const double w = weight(s, a);
      double d2 = 0.0;
      for (std::size_t j = 0; j < st.width; ++j) {
        const double d = w * g[j] - c_blk[j];
        d2 += d * d;
      }
      state_sum += st.probs[a] * (d2 + outside);
    }
    total += instance.visitation[s] * state_sum;
  }
  return total;
}

constexpr auto kAll = [](std::size_t, std::size_t) { return true; };

bool at_least(double lhs, double rhs) { return lhs >= rhs - 1e-12 * std::max(1.0, std::abs(rhs)); }

}  // namespace

std::vector<double> gradient_sample(const MDPInstance& instance, const TabularPolicy& policy,
                                    const PgBaseline& baseline, Rng& rng)
{
  instance.validate();
  policy.validate(instance);
  const std::size_t s = sample_index(instance.visitation, rng);
  const auto& st = policy.states[s];
  const std::size_t a = sample_index(st.probs, rng);
  const double b = baseline_values(instance, policy, baseline)[s];
  std::vector<double> g(policy.num_params, 0.0);
  axpy(instance.q_table[s][a] - b, st.grad(a), std::span<double>(g.data() + st.offset, st.width));
  return g;
}

std::vector<double> exact_gradient_mean(const MDPInstance& instance, const TabularPolicy& policy,
                                        const PgBaseline& baseline)
{
  check_enumerable(instance, policy);
  const auto b = baseline_values(instance, policy, baseline);
  return weighted_grad_sum(instance, policy, [&](std::size_t s, std::size_t a) { return instance.q_table[s][a] - b[s]; },
                           kAll);
}

double exact_variance(const MDPInstance& instance, const TabularPolicy& policy, const PgBaseline& baseline)
{
  const auto m = exact_gradient_mean(instance, policy, baseline);
  const auto b = baseline_values(instance, policy, baseline);
  return centered_second_moment(instance, policy, m,
                                [&](std::size_t s, std::size_t a) { return instance.q_table[s][a] - b[s]; }, kAll);
}

Estimate mc_variance(const MDPInstance& instance, const TabularPolicy& policy, const PgBaseline& baseline,
                     std::size_t n, Rng& rng)
{
  if (n < 2) throw std::invalid_argument("mc_variance needs at least 2 samples");
  instance.validate();
  policy.validate(instance);
  const auto b = baseline_values(instance, policy, baseline);
  std::discrete_distribution<std::size_t> pick_state(instance.visitation.begin(), instance.visitation.end());
  std::vector<std::discrete_distribution<std::size_t>> pick_action;
  for (const auto& st : policy.states) pick_action.emplace_back(st.probs.begin(), st.probs.end());

  const std::size_t P = policy.num_params;
  const std::size_t groups = std::min<std::size_t>(100, n / 2);
  const std::size_t per_group = n / groups;

  // Multivariate Welford: M2 accumulates sum ||x - mean||^2.
  struct Moments {
    std::vector<double> mean;
    double m2 = 0.0;
    std::size_t count = 0;

    void push(std::span<const double> x, std::span<double> delta)
    {
      ++count;
      const double inv = 1.0 / static_cast<double>(count);
      double acc = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        delta[j] = x[j] - mean[j];
        mean[j] += delta[j] * inv;
        acc += delta[j] * (x[j] - mean[j]);
      }
      m2 += acc;
    }
    double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
  };

  Moments all{std::vector<double>(P, 0.0)};
  Moments group{std::vector<double>(P, 0.0)};
  std::vector<double> x(P, 0.0), delta(P, 0.0);
  std::vector<double> group_vars;
  group_vars.reserve(groups);

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t s = pick_state(rng);
    const auto& st = policy.states[s];
    const std::size_t a = pick_action[s](rng);
    const double w = instance.q_table[s][a] - b[s];
    const auto g = st.grad(a);
    for (std::size_t j = 0; j < st.width; ++j) x[st.offset + j] = w * g[j];
    all.push(x, delta);
    group.push(x, delta);
    for (std::size_t j = 0; j < st.width; ++j) x[st.offset + j] = 0.0;

    // The last group absorbs the remainder.
    if (group.count == per_group && group_vars.size() + 1 < groups) {
      group_vars.push_back(group.variance());
      group = Moments{std::vector<double>(P, 0.0)};
    }
  }
  group_vars.push_back(group.variance());

  Estimate out{all.variance(), std::numeric_limits<double>::infinity()};
  if (group_vars.size() >= 2) {
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < group_vars.size(); ++i) {
      const double d = group_vars[i] - mean;
      mean += d / static_cast<double>(i + 1);
      m2 += d * (group_vars[i] - mean);
    }
    const double g = static_cast<double>(group_vars.size());
    out.standard_error = std::sqrt(m2 / (g - 1.0)) / std::sqrt(g);
  }
  return out;
}

Partition partition_actions(const MDPInstance& instance, double b)
{
  instance.validate();
  Partition p;
  p.b = b;
  for (std::size_t s = 0; s < instance.states.size(); ++s) {
    auto& a1 = p.a1.emplace_back();
    auto& a2 = p.a2.emplace_back();
    for (std::size_t a = 0; a < instance.q_table[s].size(); ++a) {
      const double q = instance.q_table[s][a];
      if (q < b) {
        a1.push_back(a);
        p.q_max = p.q_max ? std::max(*p.q_max, q) : q;
      } else {
        a2.push_back(a);
      }
    }
    p.any_a1_empty = p.any_a1_empty || a1.empty();
    p.any_a2_empty = p.any_a2_empty || a2.empty();
  }
  return p;
}

VarianceTerms variance_decomposition(const MDPInstance& instance, const TabularPolicy& policy, double b)
{
  const auto m = exact_gradient_mean(instance, policy, PgBaseline::constant(b));
  const auto weight = [&](std::size_t s, std::size_t a) { return instance.q_table[s][a] - b; };
  const auto below = [&](std::size_t s, std::size_t a) { return instance.q_table[s][a] < b; };
  const auto above = [&](std::size_t s, std::size_t a) { return !(instance.q_table[s][a] < b); };
  return {centered_second_moment(instance, policy, m, weight, below),
          centered_second_moment(instance, policy, m, weight, above)};
}

BoundRhs bound_rhs(const MDPInstance& instance, const TabularPolicy& policy, double b, const Partition& partition)
{
  check_enumerable(instance, policy);
  if (!partition.q_max) throw std::invalid_argument("Q_max is undefined: every A1 set is empty");
  if (partition.a1.size() != instance.states.size()) throw std::invalid_argument("partition does not fit the instance");

  std::vector<std::vector<char>> in_a1(instance.states.size());
  for (std::size_t s = 0; s < instance.states.size(); ++s) {
    in_a1[s].assign(instance.actions[s].size(), 0);
    for (auto a : partition.a1[s]) in_a1[s].at(a) = 1;
  }
  const auto include = [&](std::size_t s, std::size_t a) { return in_a1[s][a] != 0; };
  const auto unit = [](std::size_t, std::size_t) { return 1.0; };

  // E_{rho,pi}[grad log pi]; zero up to rounding by the score-function identity.
  const auto c = weighted_grad_sum(instance, policy, unit, kAll);
  const std::vector<double> zero(policy.num_params, 0.0);
  const double centered = centered_second_moment(instance, policy, c, unit, include);
  const double uncentered = centered_second_moment(instance, policy, zero, unit, include);

  const double q = *partition.q_max;
  BoundRhs out;
  out.value = (q - b) * (q - b) * centered;
  out.uncentered = (q - b) * (q - b) * uncentered;
  out.factored = b != 0.0 ? b * b * (q / b - 1.0) * (q / b - 1.0) * centered : out.value;
  for (std::size_t s = 0; s < instance.states.size(); ++s)
    for (auto a : partition.a1[s]) out.a1_mass += instance.visitation[s] * policy.states[s].probs[a];
  return out;
}

BoundChainReport verify_bound_chain(const MDPInstance& instance, const TabularPolicy& policy, double b)
{
  BoundChainReport r;
  r.b = b;
  r.exact_variance = exact_variance(instance, policy, PgBaseline::constant(b));
  const auto terms = variance_decomposition(instance, policy, b);
  r.term_a1 = terms.term_a1;
  r.term_a2 = terms.term_a2;

  const auto partition = partition_actions(instance, b);
  r.q_max = partition.q_max;
  r.a2_empty = true;
  for (std::size_t s = 0; s < instance.states.size(); ++s) {
    r.a2_empty = r.a2_empty && partition.a2[s].empty();
    for (auto a : partition.a1[s]) r.p_a1 += instance.visitation[s] * policy.states[s].probs[a];
  }
  if (!partition.q_max) return r;

  const double floor = (*partition.q_max - b) * (*partition.q_max - b);
  for (std::size_t s = 0; s < instance.states.size(); ++s) {
    for (auto a : partition.a1[s]) {
      const double d = instance.q_table[s][a] - b;
      ++r.pointwise_checked;
      if (!(d * d >= floor)) ++r.pointwise_failures;
    }
  }
  r.bound_rhs = bound_rhs(instance, policy, b, partition).value;
  r.term_a1_holds = at_least(r.term_a1, *r.bound_rhs);
  r.variance_holds = at_least(r.exact_variance, *r.bound_rhs);
  return r;
}

std::vector<SweepRow> bound_sweep(const MDPInstance& instance, const TabularPolicy& policy, double b0,
                                  std::span<const double> bs)
{
  const auto partition = partition_actions(instance, b0);
  std::vector<SweepRow> rows;
  for (double b : bs) {
    SweepRow row;
    row.b = b;
    row.above_q_max = partition.q_max && b > *partition.q_max;
    if (partition.q_max) row.bound_rhs = bound_rhs(instance, policy, b, partition).value;
    rows.push_back(row);
  }
  return rows;
}

bool sweep_monotone(std::span<const SweepRow> rows)
{
  const SweepRow* prev = nullptr;
  for (const auto& row : rows) {
    if (!row.above_q_max) continue;
    if (prev && row.b > prev->b && !(row.bound_rhs > prev->bound_rhs)) return false;
    prev = &row;
  }
  return true;
}

StudyInstance study_instance(double fraction, const StudyConfig& cfg, std::uint64_t seed)
{
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument(fmt::format("fraction {} outside (0, 1]", fraction));
  SyntheticSpec spec;
  spec.num_queries = cfg.num_queries;
  spec.pool_size = cfg.pool_size;
  spec.relevant_fraction = fraction;
  spec.feature_dim = cfg.feature_dim;
  spec.noise_sigma = cfg.noise_sigma;
  spec.seed = seed;
  const auto data = synth_retrieval(spec);
  const auto& ds = data.dataset;

  const ScorerSpec linear{ScorerKind::Linear, 0};
  const auto dims = dims_of(ds);
  Scorer D(linear, dims, init_params(linear, dims, cfg.init_scale, derive_seed(seed, 2)));
  Rng rng(derive_seed(seed, 3));
  for (std::size_t epoch = 0; epoch < cfg.d_epochs; ++epoch) {
    for (const auto& batch : query_batches(ds.num_queries(), cfg.batch_size, rng)) {
      std::vector<ExampleRef> pos, neg;
      for (auto qi : batch) {
        const auto positives = ds.positives(qi);
        if (positives.empty()) continue;
        std::uniform_int_distribution<std::size_t> pick_pos(0, positives.size() - 1);
        std::uniform_int_distribution<std::size_t> pick_any(0, ds.pool(qi).size() - 1);
        for (std::size_t k = 0; k < cfg.K; ++k) {
          pos.push_back({qi, positives[pick_pos(rng)]});
          neg.push_back({qi, pick_any(rng)});
        }
      }
      if (!pos.empty()) discriminator_step(D, ds, pos, neg, cfg.d_learning_rate);
    }
  }

  SoftmaxPolicy G{Scorer(linear, dims, init_params(linear, dims, cfg.init_scale, derive_seed(seed, 4))), 1.0};
  return {fraction, build_instance(ds, D, G, RewardSpec{RewardKind::Sigmoid, 0.0})};
}

StudyRow measure_study_instance(const StudyInstance& instance, const StudyConfig& cfg, Rng& rng)
{
  const auto& inst = instance.built.instance;
  const auto& pol = instance.built.policy;
  StudyRow row;
  row.fraction = instance.fraction;
  row.b = cfg.b;
  const auto partition = partition_actions(inst, cfg.b);
  row.q_max = partition.q_max;
  if (partition.q_max) {
    const auto rhs = bound_rhs(inst, pol, cfg.b, partition);
    row.bound_rhs = rhs.value;
    row.p_a1 = rhs.a1_mass;
  }
  row.exact_variance = exact_variance(inst, pol, PgBaseline::constant(cfg.b));
  const auto mc = mc_variance(inst, pol, PgBaseline::constant(cfg.b), cfg.mc_samples, rng);
  row.mc_variance = mc.value;
  row.mc_se = mc.standard_error;
  return row;
}

std::vector<StudyRow> sparsity_vs_bound_study(std::span<const double> fractions, const StudyConfig& cfg,
                                              std::uint64_t seed)
{
  std::vector<StudyRow> rows;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    Rng rng(derive_seed(seed, 100 + i));
    rows.push_back(measure_study_instance(study_instance(fractions[i], cfg, seed), cfg, rng));
  }
  return rows;
}

void write_study_csv(std::ostream& out, std::span<const StudyRow> rows)
{
  const auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); };
  out << "fraction,b,q_max,bound_rhs,exact_variance,mc_variance,mc_se,p_a1\n";
  for (const auto& r : rows)
    out << fmt::format("{},{},{},{},{},{},{},{}\n", r.fraction, r.b, opt(r.q_max), opt(r.bound_rhs), r.exact_variance,
                       r.mc_variance, r.mc_se, r.p_a1);
}

}  // namespace ranklab
