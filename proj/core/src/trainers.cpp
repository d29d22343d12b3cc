#include "ranklab/trainers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace ranklab {

// ---------------------------------------------------------------------------
// Rewards and baselines

double RewardSpec::operator()(double f) const
{
  switch (kind) {
    case RewardKind::Raw: return softplus(f);
    case RewardKind::Sigmoid: return sigmoid(f);
    case RewardKind::SigmoidBaselined: return 2.0 * (sigmoid(f) - b);
  }
  return 0.0;
}

namespace {

double parse_double(std::string_view text, const char* what)
{
  try {
    std::size_t used = 0;
    const std::string s(text);
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument(fmt::format("bad {} '{}'", what, text));
}

}  // namespace

RewardSpec parse_reward(std::string_view text)
{
  if (text == "raw") return {RewardKind::Raw, 0.0};
  if (text == "sigmoid") return {RewardKind::Sigmoid, 0.0};
  if (text == "sigmoid-baselined") return {RewardKind::SigmoidBaselined, 0.5};
  if (text.rfind("sigmoid-baselined:", 0) == 0)
    return {RewardKind::SigmoidBaselined, parse_double(text.substr(18), "reward baseline")};
  throw std::invalid_argument(fmt::format("unknown reward '{}'", text));
}

std::string to_string(const RewardSpec& reward)
{
  switch (reward.kind) {
    case RewardKind::Raw: return "raw";
    case RewardKind::Sigmoid: return "sigmoid";
    case RewardKind::SigmoidBaselined: return fmt::format("sigmoid-baselined:{}", reward.b);
  }
  return "raw";
}

BaselineSpec parse_baseline(std::string_view text)
{
  if (text == "value-exact") return BaselineSpec::value_exact();
  if (text.rfind("constant:", 0) == 0) return BaselineSpec::constant(parse_double(text.substr(9), "baseline"));
  if (text.rfind("value-mc:", 0) == 0) {
    const double n = parse_double(text.substr(9), "sample count");
    if (n < 1 || n != std::floor(n)) throw std::invalid_argument(fmt::format("bad sample count in '{}'", text));
    return BaselineSpec::value_mc(static_cast<std::size_t>(n));
  }
  throw std::invalid_argument(fmt::format("unknown baseline '{}'", text));
}

std::string to_string(const BaselineSpec& baseline)
{
  switch (baseline.kind) {
    case BaselineSpec::Kind::Constant: return fmt::format("constant:{}", baseline.value);
    case BaselineSpec::Kind::ValueExact: return "value-exact";
    case BaselineSpec::Kind::ValueMc: return fmt::format("value-mc:{}", baseline.mc_samples);
  }
  return "constant:0";
}

double reinforce_reward_raw(const Scorer& D, const Dataset& ds, std::size_t qi, std::size_t pos)
{
  return softplus(score(D, ds, qi, pos));
}

double reinforce_reward_baselined(const Scorer& D, const Dataset& ds, std::size_t qi, std::size_t pos, double b)
{
  return 2.0 * (sigmoid(score(D, ds, qi, pos)) - b);
}

RewardFn discriminator_reward(const Scorer& D, const Dataset& ds, std::size_t qi, RewardSpec reward)
{
  return [&D, &ds, qi, reward](std::size_t pos) { return reward(score(D, ds, qi, pos)); };
}

double value_function_baseline(const SoftmaxPolicy& policy, const Dataset& ds, std::size_t qi,
                               std::span<const std::size_t> pool, const RewardFn& reward)
{
  const auto p = policy_probs(policy, ds, qi, pool);
  double b = 0.0;
  for (std::size_t i = 0; i < pool.size(); ++i) b += p[i] * reward(pool[i]);
  return b;
}

double value_function_baseline(const SoftmaxPolicy& policy, const Scorer& D, const Dataset& ds, std::size_t qi,
                               std::span<const std::size_t> pool, RewardSpec reward)
{
  return value_function_baseline(policy, ds, qi, pool, discriminator_reward(D, ds, qi, reward));
}

namespace {

Estimate mc_mean(std::span<const double> probs, std::span<const std::size_t> pool, const RewardFn& reward,
                 std::size_t n, Rng& rng)
{
  if (n < 1) throw std::invalid_argument("Monte-Carlo sample count must be at least 1");
  std::discrete_distribution<std::size_t> dist(probs.begin(), probs.end());
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double r = reward(pool[dist(rng)]);
    const double delta = r - mean;
    mean += delta / static_cast<double>(i);
    m2 += delta * (r - mean);
  }
  const double var = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

}  // namespace

Estimate value_function_baseline_mc(const SoftmaxPolicy& policy, const Dataset& ds, std::size_t qi,
                                    std::span<const std::size_t> pool, const RewardFn& reward, std::size_t n,
                                    Rng& rng)
{
  const auto p = policy_probs(policy, ds, qi, pool);
  return mc_mean(p, pool, reward, n, rng);
}

GeneratorGradient generator_gradient(const SoftmaxPolicy& policy, const Dataset& ds, std::size_t qi,
                                     std::span<const std::size_t> pool, std::size_t K, const RewardFn& reward,
                                     const BaselineSpec& baseline, Rng& rng, bool with_replacement)
{
  if (pool.empty()) throw std::invalid_argument("candidate pool is empty");
  if (K < 1) throw std::invalid_argument("K must be at least 1");
  const auto terms = pool_score_function(policy, ds, qi, pool);

  GeneratorGradient out;
  out.samples = draw_positions(terms.probs, pool, K, rng, with_replacement);
  switch (baseline.kind) {
    case BaselineSpec::Kind::Constant: out.baseline = baseline.value; break;
    case BaselineSpec::Kind::ValueExact:
      for (std::size_t i = 0; i < pool.size(); ++i) out.baseline += terms.probs[i] * reward(pool[i]);
      break;
    case BaselineSpec::Kind::ValueMc:
      out.baseline = mc_mean(terms.probs, pool, reward, baseline.mc_samples, rng).value;
      break;
  }

  out.gradient.assign(policy.scorer.num_params(), 0.0);
  const double inv_k = 1.0 / static_cast<double>(K);
  for (auto d : out.samples) {
    const double r = reward(d);
    out.mean_reward += r * inv_k;
    accumulate_log_prob_gradient(policy, terms, ds, qi, d, (r - out.baseline) * inv_k, out.gradient);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Discriminator updates

double discriminator_objective(const Scorer& D, const Dataset& ds, std::span<const ExampleRef> positives,
                               std::span<const ExampleRef> negatives)
{
  double obj = 0.0;
  for (const auto& e : positives) obj += log_sigmoid(score(D, ds, e.query, e.pos));
  for (const auto& e : negatives) obj += log_sigmoid(-score(D, ds, e.query, e.pos));
  return obj;
}

namespace {

double objective_and_gradient(const Scorer& D, const Dataset& ds, std::span<const ExampleRef> positives,
                              std::span<const ExampleRef> negatives, std::vector<double>& grad)
{
  grad.assign(D.num_params(), 0.0);
  double obj = 0.0;
  for (const auto& e : positives) {
    const auto ex = ds.example(e.query, e.pos);
    const double f = D.score(ex);
    obj += log_sigmoid(f);
    D.accumulate_gradient(ex, 1.0 - sigmoid(f), grad);
  }
  for (const auto& e : negatives) {
    const auto ex = ds.example(e.query, e.pos);
    const double f = D.score(ex);
    obj += log_sigmoid(-f);
    D.accumulate_gradient(ex, -sigmoid(f), grad);
  }
  return obj;
}

void ascend(Scorer& s, std::span<const double> grad, double lr) { axpy(lr, grad, s.params().values); }

}  // namespace

std::vector<double> discriminator_objective_gradient(const Scorer& D, const Dataset& ds,
                                                     std::span<const ExampleRef> positives,
                                                     std::span<const ExampleRef> negatives)
{
  std::vector<double> grad;
  objective_and_gradient(D, ds, positives, negatives, grad);
  return grad;
}

double discriminator_step(Scorer& D, const Dataset& ds, std::span<const ExampleRef> positives,
                          std::span<const ExampleRef> negatives, double lr)
{
  if (positives.empty() && negatives.empty()) throw std::invalid_argument("discriminator step needs at least one sample");
  std::vector<double> grad;
  const double obj = objective_and_gradient(D, ds, positives, negatives, grad);
  ascend(D, grad, lr);
  return obj;
}

double pairwise_objective(const Scorer& D, const Dataset& ds, std::span<const Triple> triples)
{
  double obj = 0.0;
  for (const auto& t : triples) obj += log_sigmoid(score(D, ds, t.query, t.better) - score(D, ds, t.query, t.worse));
  return obj;
}

double pairwise_discriminator_step(Scorer& D, const Dataset& ds, std::span<const Triple> triples, double lr)
{
  if (triples.empty()) throw std::invalid_argument("pairwise step needs at least one triple");
  std::vector<double> grad(D.num_params(), 0.0);
  double obj = 0.0;
  for (const auto& t : triples) {
    const auto hi = ds.example(t.query, t.better);
    const auto lo = ds.example(t.query, t.worse);
    const double delta = D.score(hi) - D.score(lo);
    obj += log_sigmoid(delta);
    const double w = 1.0 - sigmoid(delta);
    D.accumulate_gradient(hi, w, grad);
    D.accumulate_gradient(lo, -w, grad);
  }
  ascend(D, grad, lr);
  return obj;
}

// ---------------------------------------------------------------------------
// Configuration

void TrainConfig::validate() const
{
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate", "must be a finite non-negative number");
  if (batch_size < 1) throw ConfigError("batch_size", "must be at least 1");
  if (epochs_outer < 1) throw ConfigError("epochs_outer", "must be at least 1");
  if (epochs_inner < 1) throw ConfigError("epochs_inner", "must be at least 1");
  if (K < 1) throw ConfigError("K", "must be at least 1");
  if (dns_k < 1) throw ConfigError("dns_k", "must be at least 1");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature", "must be positive");
  if (d_steps < 1) throw ConfigError("d_steps", "must be at least 1");
  if (g_steps < 1) throw ConfigError("g_steps", "must be at least 1");
  if (baseline.kind == BaselineSpec::Kind::ValueMc && baseline.mc_samples < 1)
    throw ConfigError("baseline", "value-mc needs at least one sample");
  if (!std::isfinite(baseline.value)) throw ConfigError("baseline", "constant must be finite");
}

std::vector<std::vector<std::size_t>> query_batches(std::size_t num_queries, std::size_t batch_size, Rng& rng)
{
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  std::vector<std::size_t> order(num_queries);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size)
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch_size)));
  return batches;
}

void check_finite(const Scorer& s, std::string_view what)
{
  if (!all_finite(s.params().values)) throw NumericError(fmt::format("non-finite parameter in {}", what));
}

std::vector<std::size_t> contrastive_queries(const Dataset& ds)
{
  std::vector<std::size_t> out;
  for (std::size_t qi = 0; qi < ds.num_queries(); ++qi)
    if (!ds.positives(qi).empty() && ds.positives(qi).size() < ds.pool(qi).size()) out.push_back(qi);
  return out;
}

// ---------------------------------------------------------------------------
// MLE pretraining

double mean_log_likelihood(const SoftmaxPolicy& policy, const Dataset& ds)
{
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t qi = 0; qi < ds.num_queries(); ++qi) {
    if (ds.positives(qi).empty()) continue;
    const auto pool = candidate_pool(ds, qi, false);
    auto s = score_all(policy.scorer, ds, qi, pool);
    const double top = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double v : s) z += std::exp((v - top) / policy.temperature);
    const double log_z = std::log(z);
    for (auto pos : ds.positives(qi)) {
      total += (s[pos] - top) / policy.temperature - log_z;
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

RunRecord pretrain_mle(SoftmaxPolicy& generator, const Dataset& ds, const TrainConfig& cfg, const std::string& tag)
{
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, 1));
  RunRecord record;
  std::size_t skipped = 0;
  for (std::size_t qi = 0; qi < ds.num_queries(); ++qi)
    if (ds.positives(qi).empty()) ++skipped;

  record.add(0, tag, "log_likelihood", mean_log_likelihood(generator, ds));
  std::vector<double> grad(generator.scorer.num_params());
  for (std::size_t epoch = 1; epoch <= cfg.epochs_outer; ++epoch) {
    for (const auto& batch : query_batches(ds.num_queries(), cfg.batch_size, rng)) {
      std::fill(grad.begin(), grad.end(), 0.0);
      bool any = false;
      for (auto qi : batch) {
        if (ds.positives(qi).empty()) continue;
        const auto pool = candidate_pool(ds, qi, false);
        const auto terms = pool_score_function(generator, ds, qi, pool);
        for (auto pos : ds.positives(qi)) accumulate_log_prob_gradient(generator, terms, ds, qi, pos, 1.0, grad);
        any = true;
      }
      if (any) ascend(generator.scorer, grad, cfg.learning_rate);
    }
    check_finite(generator.scorer, tag);
    record.add(epoch, tag, "log_likelihood", mean_log_likelihood(generator, ds));
    record.add(epoch, tag, "queries_skipped", static_cast<double>(skipped));
  }
  return record;
}

// ---------------------------------------------------------------------------
// IRGAN objective

Estimate irgan_objective(const SoftmaxPolicy& G, const Scorer& D, const Dataset& ds, std::size_t n_mc, Rng& rng,
                         ObjectiveMode mode)
{
  if (n_mc < 1) throw std::invalid_argument("n_mc must be at least 1");
  bool exact = mode == ObjectiveMode::Exact;
  if (mode == ObjectiveMode::Auto) {
    exact = true;
    for (std::size_t qi = 0; qi < ds.num_queries(); ++qi)
      if (ds.pool(qi).size() > 1000) exact = false;
  }

  Estimate J;
  double var = 0.0;
  for (std::size_t qi = 0; qi < ds.num_queries(); ++qi) {
    const auto pool = candidate_pool(ds, qi, false);
    const auto positives = ds.positives(qi);
    const auto p = policy_probs(G, ds, qi, pool);
    const auto f = score_all(D, ds, qi, pool);
    if (exact) {
      if (!positives.empty()) {
        double t = 0.0;
        for (auto pos : positives) t += log_sigmoid(f[pos]);
        J.value += t / static_cast<double>(positives.size());
      }
      for (std::size_t i = 0; i < pool.size(); ++i) J.value += p[i] * log_sigmoid(-f[i]);
      continue;
    }
    if (!positives.empty()) {
      std::vector<double> uniform(positives.size(), 1.0);
      std::vector<std::size_t> pos_list(positives.begin(), positives.end());
      auto e = mc_mean(uniform, pos_list, [&](std::size_t pos) { return log_sigmoid(f[pos]); }, n_mc, rng);
      J.value += e.value;
      var += e.standard_error * e.standard_error;
    }
    auto e = mc_mean(p, pool, [&](std::size_t pos) { return log_sigmoid(-f[pos]); }, n_mc, rng);
    J.value += e.value;
    var += e.standard_error * e.standard_error;
  }
  J.standard_error = std::sqrt(var);
  return J;
}

// ---------------------------------------------------------------------------
// IRGAN epochs

void irgan_pointwise_epoch(SoftmaxPolicy& G, Scorer& D, const Dataset& ds, const TrainConfig& cfg, Rng& rng,
                           RunRecord& record, std::size_t epoch, const std::string& tag)
{
  cfg.validate();
  double d_obj = 0.0, reward_sum = 0.0;
  std::size_t reward_count = 0, skipped = 0;
  std::vector<double> grad(G.scorer.num_params());

  for (const auto& batch : query_batches(ds.num_queries(), cfg.batch_size, rng)) {
    std::vector<std::size_t> active;
    for (auto qi : batch) {
      if (ds.positives(qi).empty()) ++skipped;
      else active.push_back(qi);
    }
    if (active.empty()) continue;

    for (std::size_t step = 0; step < cfg.d_steps; ++step) {
      std::vector<ExampleRef> pos, neg;
      for (auto qi : active) {
        for (auto p : ds.positives(qi)) pos.push_back({qi, p});
        const auto pool = candidate_pool(ds, qi, false);
        for (auto d : sample_docs(G, ds, qi, pool, cfg.K, rng, cfg.with_replacement)) neg.push_back({qi, d});
      }
      d_obj += discriminator_step(D, ds, pos, neg, cfg.learning_rate);
    }

    for (std::size_t step = 0; step < cfg.g_steps; ++step) {
      std::fill(grad.begin(), grad.end(), 0.0);
      for (auto qi : active) {
        const auto pool = candidate_pool(ds, qi, false);
        const auto g = generator_gradient(G, ds, qi, pool, cfg.K, discriminator_reward(D, ds, qi, cfg.reward),
                                          cfg.baseline, rng, cfg.with_replacement);
        axpy(1.0, g.gradient, grad);
        reward_sum += g.mean_reward;
        ++reward_count;
      }
      ascend(G.scorer, grad, cfg.learning_rate);
    }
  }
  check_finite(D, tag + ".D");
  check_finite(G.scorer, tag + ".G");

  Rng objective_rng(derive_seed(cfg.seed, 1000 + epoch));
  record.add(epoch, tag, "J", irgan_objective(G, D, ds, 1000, objective_rng).value);
  record.add(epoch, tag + ".D", "d_objective", d_obj);
  record.add(epoch, tag + ".G", "reward_mean", reward_count ? reward_sum / static_cast<double>(reward_count) : 0.0);
  record.add(epoch, tag, "queries_skipped", static_cast<double>(skipped));
}

void irgan_pairwise_epoch(SoftmaxPolicy& G, Scorer& D, const Dataset& ds, const TrainConfig& cfg, Rng& rng,
                          RunRecord& record, std::size_t epoch, const std::string& tag)
{
  cfg.validate();
  double d_obj = 0.0, reward_sum = 0.0;
  std::size_t reward_count = 0, skipped = 0;
  std::vector<double> grad(G.scorer.num_params());

  for (const auto& batch : query_batches(ds.num_queries(), cfg.batch_size, rng)) {
    std::vector<std::size_t> active;
    for (auto qi : batch) {
      if (ds.positives(qi).empty() || candidate_pool(ds, qi, cfg.exclude_positives).empty()) ++skipped;
      else active.push_back(qi);
    }
    if (active.empty()) continue;

    for (std::size_t step = 0; step < cfg.d_steps; ++step) {
      std::vector<Triple> triples;
      for (auto qi : active) {
        const auto positives = ds.positives(qi);
        const auto pool = candidate_pool(ds, qi, cfg.exclude_positives);
        const auto drawn = sample_docs(G, ds, qi, pool, cfg.K, rng, cfg.with_replacement);
        for (std::size_t k = 0; k < drawn.size(); ++k)
          triples.push_back({qi, positives[k % positives.size()], drawn[k]});
      }
      d_obj += pairwise_discriminator_step(D, ds, triples, cfg.learning_rate);
    }

    for (std::size_t step = 0; step < cfg.g_steps; ++step) {
      std::fill(grad.begin(), grad.end(), 0.0);
      for (auto qi : active) {
        const auto positives = ds.positives(qi);
        const auto pool = candidate_pool(ds, qi, cfg.exclude_positives);
        std::vector<double> pos_scores;
        for (auto p : positives) pos_scores.push_back(score(D, ds, qi, p));
        // Reward of d_j: mean over paired positives d_i of reward(f_j - f_i).
        const RewardFn reward = [&](std::size_t pos) {
          const double fj = score(D, ds, qi, pos);
          double r = 0.0;
          for (double fi : pos_scores) r += cfg.reward(fj - fi);
          return r / static_cast<double>(pos_scores.size());
        };
        const auto g = generator_gradient(G, ds, qi, pool, cfg.K, reward, cfg.baseline, rng, cfg.with_replacement);
        axpy(1.0, g.gradient, grad);
        reward_sum += g.mean_reward;
        ++reward_count;
      }
      ascend(G.scorer, grad, cfg.learning_rate);
    }
  }
  check_finite(D, tag + ".D");
  check_finite(G.scorer, tag + ".G");

  record.add(epoch, tag + ".D", "d_objective", d_obj);
  record.add(epoch, tag + ".G", "reward_mean", reward_count ? reward_sum / static_cast<double>(reward_count) : 0.0);
  record.add(epoch, tag, "queries_skipped", static_cast<double>(skipped));
}

// ---------------------------------------------------------------------------
// Discriminator-only trainers

double contrastive_epoch(Scorer& model, const Scorer& sampler, const Dataset& ds, const TrainConfig& cfg, Rng& rng)
{
  double obj = 0.0;
  for (const auto& batch : query_batches(ds.num_queries(), cfg.batch_size, rng)) {
    std::vector<ExampleRef> pos, neg;
    for (auto qi : batch) {
      if (ds.positives(qi).empty()) continue;
      const auto pool = candidate_pool(ds, qi, cfg.exclude_positives);
      if (pool.empty()) continue;
      for (auto p : ds.positives(qi)) pos.push_back({qi, p});
      for (auto d : normalized_discriminator_sampling(sampler, ds, qi, pool, cfg.K, rng)) neg.push_back({qi, d});
    }
    if (!pos.empty()) obj += discriminator_step(model, ds, pos, neg, cfg.learning_rate);
  }
  return obj;
}

void single_d_epoch(Scorer& M, const Dataset& ds, const TrainConfig& cfg, Rng& rng, RunRecord& record,
                    std::size_t epoch, const std::string& tag)
{
  cfg.validate();
  const double obj = contrastive_epoch(M, M, ds, cfg, rng);
  check_finite(M, tag);
  record.add(epoch, tag, "d_objective", obj);
  record.add(epoch, tag, "queries_skipped",
             static_cast<double>(ds.num_queries() - contrastive_queries(ds).size()));
}

DualStreams DualStreams::from_seed(std::uint64_t seed)
{
  return DualStreams{Rng(derive_seed(seed, 11)), Rng(derive_seed(seed, 12))};
}

void dual_d_outer_epoch(Scorer& A, Scorer& B, const Dataset& ds, const TrainConfig& cfg, DualStreams& streams,
                        RunRecord& record, std::size_t epoch, const std::string& tag)
{
  cfg.validate();
  const Scorer a_snapshot = A;
  const Scorer b_snapshot = B;
  const auto b_sum = B.params().checksum();

  double obj_a = 0.0;
  for (std::size_t i = 0; i < cfg.epochs_inner; ++i) obj_a += contrastive_epoch(A, b_snapshot, ds, cfg, streams.a);
  if (B.params().checksum() != b_sum) throw std::logic_error("Dual-D: B changed while frozen");
  check_finite(A, tag + ".A");

  const auto a_sum = A.params().checksum();
  double obj_b = 0.0;
  for (std::size_t i = 0; i < cfg.epochs_inner; ++i) obj_b += contrastive_epoch(B, a_snapshot, ds, cfg, streams.b);
  if (A.params().checksum() != a_sum) throw std::logic_error("Dual-D: A changed while frozen");
  check_finite(B, tag + ".B");

  const auto inner = static_cast<double>(cfg.epochs_inner);
  record.add(epoch, tag + ".A", "d_objective", obj_a / inner);
  record.add(epoch, tag + ".B", "d_objective", obj_b / inner);
  record.add(epoch, tag, "queries_skipped", static_cast<double>(ds.num_queries() - contrastive_queries(ds).size()));
}

int dual_d_choice(std::uint64_t seed) { return static_cast<int>(derive_seed(seed, 99) & 1U); }

std::size_t dns_pick(const Scorer& D, const Dataset& ds, std::size_t qi, std::span<const std::size_t> pool,
                     std::size_t k, Rng& rng)
{
  if (pool.empty()) throw std::invalid_argument("candidate pool is empty");
  if (k < 1) throw std::invalid_argument("dns_k must be at least 1");
  std::vector<std::size_t> cands;
  std::sample(pool.begin(), pool.end(), std::back_inserter(cands), std::min(k, pool.size()), rng);
  std::size_t best = cands.front();
  double best_score = score(D, ds, qi, best);
  for (std::size_t i = 1; i < cands.size(); ++i) {
    const double s = score(D, ds, qi, cands[i]);
    if (s > best_score) {
      best = cands[i];
      best_score = s;
    }
  }
  return best;
}

void dns_epoch(Scorer& D, const Dataset& ds, const TrainConfig& cfg, Rng& rng, RunRecord& record, std::size_t epoch,
               const std::string& tag)
{
  cfg.validate();
  double obj = 0.0;
  for (const auto& batch : query_batches(ds.num_queries(), cfg.batch_size, rng)) {
    std::vector<ExampleRef> pos, neg;
    for (auto qi : batch) {
      if (ds.positives(qi).empty()) continue;
      const auto pool = candidate_pool(ds, qi, true);
      if (pool.empty()) continue;
      for (auto p : ds.positives(qi)) {
        pos.push_back({qi, p});
        neg.push_back({qi, dns_pick(D, ds, qi, pool, cfg.dns_k, rng)});
      }
    }
    if (!pos.empty()) obj += discriminator_step(D, ds, pos, neg, cfg.learning_rate);
  }
  check_finite(D, tag);
  record.add(epoch, tag, "d_objective", obj);
  record.add(epoch, tag, "queries_skipped", static_cast<double>(ds.num_queries() - contrastive_queries(ds).size()));
}

}  // namespace ranklab
