#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "ranklab/dataio.hpp"
#include "ranklab/pgvar.hpp"
#include "ranklab/policy.hpp"
#include "ranklab/scorers.hpp"

using namespace ranklab;

namespace {

SyntheticData web_like(std::size_t pool)
{
  SyntheticSpec spec;
  spec.num_queries = 4;
  spec.pool_size = pool;
  return synth_retrieval(spec);
}

Scorer mlp(const Dataset& ds)
{
  const ScorerSpec spec{ScorerKind::Mlp1, 46};
  return Scorer(spec, dims_of(ds), init_params(spec, dims_of(ds), 0.1, 40));
}

void BM_MlpScore(benchmark::State& state)
{
  const auto data = web_like(200);
  const auto s = mlp(data.dataset);
  std::size_t pos = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(score(s, data.dataset, 0, pos));
    pos = (pos + 1) % 200;
  }
}
BENCHMARK(BM_MlpScore);

void BM_MlpGradient(benchmark::State& state)
{
  const auto data = web_like(200);
  const auto s = mlp(data.dataset);
  std::size_t pos = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_gradient(s, data.dataset, 0, pos));
    pos = (pos + 1) % 200;
  }
}
BENCHMARK(BM_MlpGradient);

void BM_PolicyProbs(benchmark::State& state)
{
  const auto pool_size = static_cast<std::size_t>(state.range(0));
  const auto data = web_like(pool_size);
  const SoftmaxPolicy G{mlp(data.dataset), 1.0};
  std::vector<std::size_t> pool(pool_size);
  std::iota(pool.begin(), pool.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(policy_probs(G, data.dataset, 0, pool));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PolicyProbs)->Arg(50)->Arg(200)->Arg(500);

void BM_ExactVariance(benchmark::State& state)
{
  const auto states = static_cast<std::size_t>(state.range(0));
  Rng rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MDPInstance inst;
  std::vector<std::vector<double>> logits(states);
  for (std::size_t s = 0; s < states; ++s) {
    inst.states.push_back("s" + std::to_string(s));
    inst.actions.emplace_back();
    inst.q_table.emplace_back();
    for (std::size_t a = 0; a < 50; ++a) {
      inst.actions.back().push_back("a" + std::to_string(a));
      inst.q_table.back().push_back(u(rng));
      logits[s].push_back(u(rng));
    }
    inst.visitation.push_back(1.0 / static_cast<double>(states));
  }
  const auto pol = tabular_softmax(logits);
  for (auto _ : state) benchmark::DoNotOptimize(exact_variance(inst, pol, PgBaseline::constant(0.5)));
}
BENCHMARK(BM_ExactVariance)->Arg(10)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
