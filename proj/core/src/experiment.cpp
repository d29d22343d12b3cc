#include "ranklab/experiment.hpp"

#include <algorithm>
#include <future>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace ranklab {

std::string_view to_string(Regime regime)
{
  switch (regime) {
    case Regime::IrganPointwise: return "irgan-pointwise";
    case Regime::IrganPairwise: return "irgan-pairwise";
    case Regime::SingleD: return "single-d";
    case Regime::DualD: return "dual-d";
    case Regime::Dns: return "dns";
  }
  return "single-d";
}

Regime parse_regime(std::string_view name)
{
  for (auto r : {Regime::IrganPointwise, Regime::IrganPairwise, Regime::SingleD, Regime::DualD, Regime::Dns})
    if (to_string(r) == name) return r;
  throw std::invalid_argument(fmt::format("unknown trainer '{}'", name));
}

ExperimentConfig default_experiment(DatasetKind kind, Regime regime)
{
  ExperimentConfig cfg;
  cfg.regime = regime;
  auto& t = cfg.train;
  switch (kind) {
    case DatasetKind::WebSearch:
    case DatasetKind::Synthetic:
      cfg.scorer = {ScorerKind::Mlp1, 46};
      t.learning_rate = regime == Regime::DualD ? 0.006 : 0.004;
      t.batch_size = 8;
      t.seed = 40;
      t.epochs_outer = 50;
      t.epochs_inner = 30;
      break;
    case DatasetKind::Recommendation:
      cfg.scorer = {ScorerKind::MatFac, 20};
      t.learning_rate = 0.02;
      t.batch_size = 10;
      t.seed = 70;
      t.dns_k = 5;
      break;
    case DatasetKind::Qa:
      cfg.scorer = {ScorerKind::TextAvgEmbed, 100};
      t.learning_rate = 0.05;
      t.batch_size = 100;
      t.epochs_outer = 20;
      t.epochs_inner = 1;
      break;
  }
  return cfg;
}

std::size_t discriminator_epochs(const ExperimentConfig& cfg)
{
  switch (cfg.regime) {
    case Regime::DualD: return cfg.train.epochs_outer * 2 * cfg.train.epochs_inner;
    case Regime::IrganPointwise:
    case Regime::IrganPairwise: return cfg.train.epochs_outer * cfg.train.d_steps;
    default: return cfg.train.epochs_outer;
  }
}

namespace {

std::vector<MetricResult> evaluate_into(RunRecord& record, std::size_t epoch, const std::string& tag,
                                        const Scorer& model, const Dataset& eval, std::span<const MetricSpec> metrics)
{
  auto results = evaluate_model(model, eval, metrics);
  for (const auto& r : results) record.add(epoch, tag, r.metric, r.value);
  return results;
}

Scorer fresh(const ExperimentConfig& cfg, const ScorerDims& dims, std::uint64_t stream)
{
  return Scorer(cfg.scorer, dims, init_params(cfg.scorer, dims, cfg.init_scale, derive_seed(cfg.train.seed, stream)));
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& train, const Dataset& eval)
{
  cfg.train.validate();
  if (cfg.metrics.empty()) throw ConfigError("metrics", "at least one metric is required");

  auto dims = dims_of(train);
  dims.vocab = std::max(dims.vocab, eval.token_bound());
  const auto& t = cfg.train;
  const std::string tag(to_string(cfg.regime));
  const std::string init_tag = tag + ".init";
  ExperimentResult out;
  auto& rec = out.record;
  Rng rng(derive_seed(t.seed, 7));

  switch (cfg.regime) {
    case Regime::IrganPointwise:
    case Regime::IrganPairwise: {
      SoftmaxPolicy G{fresh(cfg, dims, 21), t.temperature};
      Scorer D = fresh(cfg, dims, 22);
      if (cfg.pretrain_epochs > 0) {
        TrainConfig pre = t;
        pre.epochs_outer = cfg.pretrain_epochs;
        pre.learning_rate = cfg.pretrain_learning_rate;
        rec.append(pretrain_mle(G, train, pre, tag + ".pretrain"));
      }
      out.initial_eval = evaluate_into(rec, 0, init_tag, G.scorer, eval, cfg.metrics);
      std::vector<MetricResult> g_eval, d_eval;
      for (std::size_t epoch = 1; epoch <= t.epochs_outer; ++epoch) {
        if (cfg.regime == Regime::IrganPointwise) irgan_pointwise_epoch(G, D, train, t, rng, rec, epoch, tag);
        else irgan_pairwise_epoch(G, D, train, t, rng, rec, epoch, tag);
        g_eval = evaluate_into(rec, epoch, tag, G.scorer, eval, cfg.metrics);
        d_eval = evaluate_into(rec, epoch, tag + ".D", D, eval, cfg.metrics);
      }
      out.final_eval = {{tag, g_eval}, {tag + ".D", d_eval}};
      out.models = {{"G", G.scorer}, {"D", D}};
      break;
    }
    case Regime::SingleD:
    case Regime::Dns: {
      Scorer M = fresh(cfg, dims, 23);
      out.initial_eval = evaluate_into(rec, 0, init_tag, M, eval, cfg.metrics);
      std::vector<MetricResult> last;
      for (std::size_t epoch = 1; epoch <= t.epochs_outer; ++epoch) {
        if (cfg.regime == Regime::SingleD) single_d_epoch(M, train, t, rng, rec, epoch, tag);
        else dns_epoch(M, train, t, rng, rec, epoch, tag);
        last = evaluate_into(rec, epoch, tag, M, eval, cfg.metrics);
      }
      out.final_eval = {{tag, last}};
      out.models = {{tag, M}};
      break;
    }
    case Regime::DualD: {
      Scorer A = fresh(cfg, dims, 31);
      Scorer B = fresh(cfg, dims, 32);
      auto streams = DualStreams::from_seed(t.seed);
      const int choice = dual_d_choice(t.seed);
      out.chosen = choice == 0 ? "A" : "B";
      out.initial_eval = evaluate_into(rec, 0, init_tag, choice == 0 ? A : B, eval, cfg.metrics);
      std::vector<MetricResult> a_eval, b_eval;
      for (std::size_t epoch = 1; epoch <= t.epochs_outer; ++epoch) {
        dual_d_outer_epoch(A, B, train, t, streams, rec, epoch, tag);
        a_eval = evaluate_into(rec, epoch, tag + ".A", A, eval, cfg.metrics);
        b_eval = evaluate_into(rec, epoch, tag + ".B", B, eval, cfg.metrics);
        for (const auto& r : choice == 0 ? a_eval : b_eval) rec.add(epoch, tag, r.metric, r.value);
      }
      out.final_eval = {{tag, choice == 0 ? a_eval : b_eval}, {tag + ".A", a_eval}, {tag + ".B", b_eval}};
      out.models = {{"A", A}, {"B", B}};
      break;
    }
  }
  return out;
}

ExperimentConfig matched_budget(ExperimentConfig cfg, std::size_t budget)
{
  if (budget < 1) throw ConfigError("budget", "must be at least 1");
  switch (cfg.regime) {
    case Regime::DualD: {
      const std::size_t per_outer = 2 * cfg.train.epochs_inner;
      if (budget % per_outer != 0)
        throw ConfigError("budget", fmt::format("{} is not a multiple of 2 * epochs_inner = {}", budget, per_outer));
      cfg.train.epochs_outer = budget / per_outer;
      break;
    }
    case Regime::IrganPointwise:
    case Regime::IrganPairwise:
      if (budget % cfg.train.d_steps != 0)
        throw ConfigError("budget", fmt::format("{} is not a multiple of d_steps = {}", budget, cfg.train.d_steps));
      cfg.train.epochs_outer = budget / cfg.train.d_steps;
      break;
    default: cfg.train.epochs_outer = budget; break;
  }
  return cfg;
}

namespace {

SeedOutcome run_seed(const ComparisonConfig& cfg, const std::vector<ExperimentConfig>& entries, std::uint64_t seed)
{
  SyntheticSpec spec = cfg.data;
  spec.seed = seed;
  const auto data = synth_retrieval(spec);
  SeedOutcome outcome;
  outcome.seed = seed;
  for (auto entry : entries) {
    entry.train.seed = seed;
    const auto result = run_experiment(entry, data.dataset, data.holdout);
    const std::string tag(to_string(entry.regime));
    for (const auto& r : result.initial_eval) outcome.values[tag + ".init"][r.metric] = r.value;
    for (const auto& [model, results] : result.final_eval)
      for (const auto& r : results) outcome.values[model][r.metric] = r.value;
  }
  return outcome;
}

}  // namespace

ComparisonResult run_comparison(const ComparisonConfig& cfg)
{
  if (cfg.entries.size() < 2) throw ConfigError("trainers", "a comparison needs at least two trainers");
  if (cfg.seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
  if (cfg.data.holdout_queries == 0) throw ConfigError("holdout_queries", "comparisons evaluate on held-out queries");

  ComparisonResult result;
  std::vector<ExperimentConfig> entries;
  for (const auto& e : cfg.entries) {
    const bool keep = std::find(cfg.parity_overrides.begin(), cfg.parity_overrides.end(), e.regime) !=
                      cfg.parity_overrides.end();
    entries.push_back(keep ? e : matched_budget(e, cfg.budget));
    const std::size_t spent = discriminator_epochs(entries.back());
    if (spent != cfg.budget)
      result.warnings.push_back({std::string(to_string(e.regime)), spent});
  }

  if (cfg.parallel) {
    std::vector<std::future<SeedOutcome>> jobs;
    for (auto seed : cfg.seeds) jobs.push_back(std::async(std::launch::async, run_seed, std::cref(cfg), std::cref(entries), seed));
    for (auto& j : jobs) result.per_seed.push_back(j.get());
  } else {
    for (auto seed : cfg.seeds) result.per_seed.push_back(run_seed(cfg, entries, seed));
  }

  std::map<std::pair<std::string, std::string>, double> sums;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& s : result.per_seed)
    for (const auto& [model, metrics] : s.values)
      for (const auto& [metric, value] : metrics) {
        auto [it, inserted] = sums.try_emplace({model, metric}, 0.0);
        if (inserted) order.emplace_back(model, metric);
        it->second += value;
      }
  for (const auto& key : order)
    result.table.emplace_back(key.first, key.second, sums[key] / static_cast<double>(result.per_seed.size()));
  return result;
}

void write_comparison_csv(std::ostream& out, const ComparisonResult& result)
{
  out << "model,metric,value\n";
  for (const auto& [model, metric, value] : result.table) out << fmt::format("{},{},{}\n", model, metric, value);
  for (const auto& w : result.warnings) out << fmt::format("warning,budget-parity:{},{}\n", w.model, w.epochs);
}

void write_per_seed_csv(std::ostream& out, const ComparisonResult& result)
{
  out << "seed,model,metric,value\n";
  for (const auto& s : result.per_seed)
    for (const auto& [model, metrics] : s.values)
      for (const auto& [metric, value] : metrics) out << fmt::format("{},{},{},{}\n", s.seed, model, metric, value);
}

}  // namespace ranklab
