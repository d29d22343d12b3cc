#include <doctest.h>

#include <cmath>

#include "oracles/oracles.hpp"
#include "ranklab/dataio.hpp"
#include "ranklab/metrics.hpp"
#include "ranklab/trainers.hpp"
#include "support/fixtures.hpp"

using namespace ranklab;

namespace {

const ScorerSpec kLinear{ScorerKind::Linear, 0};

// One query; a linear scorer on a single feature reproduces `scores`.
Dataset scored_rows(const std::vector<double>& xs, std::size_t relevant = 0)
{
  DatasetRecords r{DatasetKind::WebSearch, {{QueryId{"q"}, {}, {}}}, {}};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    r.pools[0].docs.push_back({fmt::format("d{}", i), {xs[i]}, {}});
    if (i < relevant) r.judgments.push_back({QueryId{"q"}, fmt::format("d{}", i), 1});
  }
  return build_dataset(r);
}

Scorer unit_linear(const Dataset& ds, double w = 1.0, double b = 0.0)
{
  auto p = zero_params(kLinear, dims_of(ds));
  p.values[0] = w;
  p.values[1] = b;
  return Scorer(kLinear, dims_of(ds), p);
}

Scorer zero_scorer(const Dataset& ds, ScorerSpec spec = kLinear)
{
  return Scorer(spec, dims_of(ds), init_params(spec, dims_of(ds), 0.0, 0, true));
}

std::vector<std::size_t> full_pool(const Dataset& ds, std::size_t qi) { return candidate_pool(ds, qi, false); }

SyntheticData planted(std::size_t queries = 50, std::size_t pool = 200, double fraction = 0.005)
{
  SyntheticSpec spec;
  spec.num_queries = queries;
  spec.pool_size = pool;
  spec.relevant_fraction = fraction;
  return synth_retrieval(spec);
}

}  // namespace

TEST_CASE("raw reward")
{
  const auto ds = scored_rows({0.0, -1000.0, 1000.0});
  const auto D = unit_linear(ds);
  CHECK(reinforce_reward_raw(D, ds, 0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const double lo = reinforce_reward_raw(D, ds, 0, 1);
  CHECK(std::isfinite(lo));
  CHECK(lo >= 0.0);
  CHECK(lo < 1e-300);
  CHECK(reinforce_reward_raw(D, ds, 0, 2) == doctest::Approx(1000.0).epsilon(1e-15));
}

TEST_CASE("baselined reward")
{
  const auto ds = scored_rows({0.0, std::log(3.0), 1000.0});
  const auto D = unit_linear(ds);
  CHECK(reinforce_reward_baselined(D, ds, 0, 0, 0.5) == 0.0);
  CHECK(reinforce_reward_baselined(D, ds, 0, 1, 0.5) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(reinforce_reward_baselined(D, ds, 0, 2, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(reinforce_reward_baselined(D, ds, 0, 2, 0.5) < 1.0);
}

TEST_CASE("reward and baseline parsing")
{
  CHECK(parse_reward("raw").kind == RewardKind::Raw);
  CHECK(parse_reward("sigmoid").kind == RewardKind::Sigmoid);
  CHECK(parse_reward("sigmoid-baselined").b == 0.5);
  CHECK(parse_reward("sigmoid-baselined:0.3").b == 0.3);
  CHECK(parse_reward(to_string(parse_reward("sigmoid-baselined:0.25"))).b == 0.25);
  CHECK_THROWS_AS(parse_reward("hinge"), std::invalid_argument);

  CHECK(parse_baseline("constant:0.5").value == 0.5);
  CHECK(parse_baseline("value-exact").kind == BaselineSpec::Kind::ValueExact);
  CHECK(parse_baseline("value-mc:200").mc_samples == 200);
  CHECK(parse_baseline(to_string(BaselineSpec::value_mc(7))).mc_samples == 7);
  CHECK_THROWS_AS(parse_baseline("value-mc:0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_baseline("constant:x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_baseline("median"), std::invalid_argument);
}

TEST_CASE("value_function_baseline")
{
  const auto one = scored_rows({0.7});
  const SoftmaxPolicy p1{unit_linear(one), 1.0};
  const RewardSpec sig{RewardKind::Sigmoid, 0.0};
  CHECK(value_function_baseline(p1, unit_linear(one), one, 0, full_pool(one, 0), sig) == sigmoid(0.7));

  const auto two = scored_rows({0.0, 0.0});
  const SoftmaxPolicy uniform{unit_linear(two), 1.0};
  const RewardFn r = [](std::size_t pos) { return static_cast<double>(pos); };
  CHECK(value_function_baseline(uniform, two, 0, full_pool(two, 0), r) == 0.5);

  const auto five = scored_rows({0.3, -1.0, 2.0, 0.5, 1.1});
  const SoftmaxPolicy pol{unit_linear(five, 0.8), 1.0};
  const RewardFn sq = [](std::size_t pos) { return static_cast<double>(pos * pos); };
  const double exact = value_function_baseline(pol, five, 0, full_pool(five, 0), sq);
  Rng rng(40);
  const auto mc = value_function_baseline_mc(pol, five, 0, full_pool(five, 0), sq, 100'000, rng);
  CHECK(std::abs(mc.value - exact) < 3.0 * mc.standard_error);
  CHECK(mc.standard_error > 0.0);

  CHECK_THROWS_AS(value_function_baseline(pol, five, 0, std::vector<std::size_t>{}, sq), std::invalid_argument);
}

TEST_CASE("generator_gradient degenerate cases")
{
  const auto ds = scored_rows({0.3, -1.0, 2.0});
  const SoftmaxPolicy pol{unit_linear(ds, 0.5), 1.0};
  Rng rng(1);
  const RewardFn constant = [](std::size_t) { return 0.25; };
  for (double g : generator_gradient(pol, ds, 0, full_pool(ds, 0), 5, constant, BaselineSpec::constant(0.25), rng).gradient)
    CHECK(g == 0.0);

  const auto one = scored_rows({0.3});
  const SoftmaxPolicy p1{unit_linear(one), 1.0};
  const RewardFn varied = [](std::size_t) { return 7.0; };
  for (double g : generator_gradient(p1, one, 0, full_pool(one, 0), 3, varied, BaselineSpec::constant(0.0), rng).gradient)
    CHECK(g == 0.0);

  CHECK_THROWS_AS(generator_gradient(pol, ds, 0, std::vector<std::size_t>{}, 1, varied, {}, rng), std::invalid_argument);
  CHECK_THROWS_AS(generator_gradient(pol, ds, 0, full_pool(ds, 0), 0, varied, {}, rng), std::invalid_argument);
}

TEST_CASE("baselined reward path equals the doubled sigmoid path")
{
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto ds = fixtures::feature_dataset(2, 6, 3, seed);
    const SoftmaxPolicy G{fixtures::random_scorer(ds, {ScorerKind::Mlp1, 4}, seed), 1.0};
    const auto D = fixtures::random_scorer(ds, kLinear, seed + 100, 1.0);
    const auto pool = full_pool(ds, 1);
    Rng r1(seed), r2(seed);
    const auto a = generator_gradient(G, ds, 1, pool, 5, discriminator_reward(D, ds, 1, {RewardKind::SigmoidBaselined, 0.5}),
                                      BaselineSpec::constant(0.0), r1);
    const auto b = generator_gradient(G, ds, 1, pool, 5, discriminator_reward(D, ds, 1, {RewardKind::Sigmoid, 0.0}),
                                      BaselineSpec::constant(0.5), r2);
    CHECK(a.samples == b.samples);
    for (std::size_t i = 0; i < a.gradient.size(); ++i) CHECK(std::abs(a.gradient[i] - 2.0 * b.gradient[i]) < 1e-12);
  }
}

TEST_CASE("generator_gradient is unbiased")
{
  const auto ds = scored_rows({0.3, -1.0, 2.0, 0.5, 1.1});
  const SoftmaxPolicy pol{unit_linear(ds, 0.7, 0.2), 1.0};
  const auto pool = full_pool(ds, 0);
  const RewardFn reward = [](std::size_t pos) { return std::sin(static_cast<double>(pos) + 1.0); };
  const double b = 0.1;

  // Exact expectation by enumeration of a single draw.
  const auto p = policy_probs(pol, ds, 0, pool);
  std::vector<double> exact(pol.scorer.num_params(), 0.0);
  for (std::size_t i = 0; i < pool.size(); ++i)
    axpy(p[i] * (reward(pool[i]) - b), log_prob_gradient(pol, ds, 0, pool, pool[i]), exact);

  Rng rng(40);
  const std::size_t n = 100'000;
  std::vector<double> mean(exact.size(), 0.0), m2(exact.size(), 0.0);
  for (std::size_t t = 1; t <= n; ++t) {
    const auto g = generator_gradient(pol, ds, 0, pool, 1, reward, BaselineSpec::constant(b), rng).gradient;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double d = g[j] - mean[j];
      mean[j] += d / static_cast<double>(t);
      m2[j] += d * (g[j] - mean[j]);
    }
  }
  for (std::size_t j = 0; j < exact.size(); ++j) {
    const double se = std::sqrt(m2[j] / static_cast<double>(n - 1) / static_cast<double>(n));
    CHECK(std::abs(mean[j] - exact[j]) <= 3.0 * se + 1e-15);
  }
}

TEST_CASE("value-function baseline lowers generator_gradient variance")
{
  // Rewards sigma(f) all lie in [0, 0.2], far below 0.5.
  const auto ds = scored_rows({-1.5, -2.0, -3.0, -4.0, -6.0, -2.5});
  const auto D = unit_linear(ds);
  const SoftmaxPolicy G{unit_linear(ds, 0.6), 1.0};
  const auto pool = full_pool(ds, 0);
  const auto reward = discriminator_reward(D, ds, 0, {RewardKind::Sigmoid, 0.0});
  auto variance = [&](const BaselineSpec& b) {
    Rng rng(40);
    const std::size_t n = 20'000;
    std::vector<std::vector<double>> gs;
    std::vector<double> mean(G.scorer.num_params(), 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      gs.push_back(generator_gradient(G, ds, 0, pool, 1, reward, b, rng).gradient);
      axpy(1.0 / static_cast<double>(n), gs.back(), mean);
    }
    double v = 0.0;
    for (const auto& g : gs)
      for (std::size_t j = 0; j < g.size(); ++j) v += (g[j] - mean[j]) * (g[j] - mean[j]) / static_cast<double>(n);
    return v;
  };
  CHECK(variance(BaselineSpec::value_exact()) < variance(BaselineSpec::constant(0.5)));
}

TEST_CASE("discriminator_step")
{
  const auto ds = fixtures::feature_dataset(2, 4, 3, 7);
  auto D = zero_scorer(ds);
  const std::vector<ExampleRef> pos{{0, 0}, {1, 0}, {1, 1}};
  const std::vector<ExampleRef> neg{{0, 2}, {0, 3}, {1, 2}};
  CHECK(discriminator_step(D, ds, pos, neg, 0.0) == doctest::Approx(-6.0 * std::log(2.0)).epsilon(1e-14));

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto M = fixtures::random_scorer(ds, {ScorerKind::Mlp1, 3}, seed, 1.0);
    auto f = [&](const std::vector<double>& x) {
      Scorer t = M;
      t.params().values = x;
      return discriminator_objective(t, ds, pos, neg);
    };
    CHECK(oracle::relative_error(discriminator_objective_gradient(M, ds, pos, neg),
                                 oracle::finite_difference(f, M.params().values)) < 1e-4);
  }

  auto S = fixtures::random_scorer(ds, {ScorerKind::Mlp1, 3}, 5, 0.5);
  const double before = discriminator_prob(S, ds, 0, 1);
  const std::vector<ExampleRef> single{{0, 1}};
  discriminator_step(S, ds, single, {}, 0.1);
  CHECK(discriminator_prob(S, ds, 0, 1) > before);

  CHECK_THROWS_AS(discriminator_step(S, ds, {}, {}, 0.1), std::invalid_argument);
}

TEST_CASE("pairwise step")
{
  const auto ds = fixtures::feature_dataset(1, 4, 3, 2);
  std::vector<Triple> t{{0, 0, 1}, {0, 0, 2}};
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto D = fixtures::random_scorer(ds, {ScorerKind::Mlp1, 3}, seed, 1.0);
    const double before = pairwise_objective(D, ds, t);
    CHECK(pairwise_discriminator_step(D, ds, t, 0.0) == before);
    pairwise_discriminator_step(D, ds, t, 0.05);
    CHECK(pairwise_objective(D, ds, t) > before);
  }
  auto D = zero_scorer(ds);
  CHECK_THROWS_AS(pairwise_discriminator_step(D, ds, {}, 0.1), std::invalid_argument);
}

TEST_CASE("TrainConfig validation names the field")
{
  auto field_of = [](TrainConfig c) {
    try {
      c.validate();
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string();
  };
  TrainConfig c;
  CHECK(field_of(c).empty());
  c.epochs_inner = 0;
  CHECK(field_of(c) == "epochs_inner");
  c = {};
  c.learning_rate = -1.0;
  CHECK(field_of(c) == "learning_rate");
  c = {};
  c.batch_size = 0;
  CHECK(field_of(c) == "batch_size");
  c = {};
  c.K = 0;
  CHECK(field_of(c) == "K");
  c = {};
  c.dns_k = 0;
  CHECK(field_of(c) == "dns_k");
  c = {};
  c.temperature = 0.0;
  CHECK(field_of(c) == "temperature");
  c = {};
  c.epochs_outer = 0;
  CHECK(field_of(c) == "epochs_outer");
  CHECK(TrainConfig{}.dns_k == 5);
}

TEST_CASE("pretrain_mle")
{
  SUBCASE("single relevant document leaves the generator unchanged")
  {
    const auto ds = scored_rows({0.4}, 1);
    SoftmaxPolicy G{unit_linear(ds, 0.3, 0.1), 1.0};
    const auto before = G.scorer;
    TrainConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.epochs_outer = 3;
    pretrain_mle(G, ds, cfg);
    CHECK(G.scorer == before);
  }

  SUBCASE("log-likelihood rises monotonically on a planted task")
  {
    const auto data = planted();
    const auto dims = dims_of(data.dataset);
    SoftmaxPolicy G{Scorer(kLinear, dims, init_params(kLinear, dims, 0.01, 40)), 1.0};
    TrainConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.epochs_outer = 50;
    cfg.batch_size = data.dataset.num_queries();
    cfg.seed = 40;
    auto G2 = G;
    const auto rec = pretrain_mle(G, data.dataset, cfg);
    const auto ll = rec.series("generator", "log_likelihood");
    REQUIRE(ll.size() == 51);
    for (std::size_t i = 1; i < ll.size(); ++i) CHECK(ll[i].second >= ll[i - 1].second - 1e-9);
    CHECK(ll.back().second > ll.front().second);

    pretrain_mle(G2, data.dataset, cfg);
    CHECK(G2.scorer.params().values == G.scorer.params().values);
  }

  SUBCASE("queries without positives are counted")
  {
    auto r = fixtures::feature_dataset(3, 4, 2, 1).records();
    for (auto& j : r.judgments)
      if (j.query.value == "q2") j.relevance = 0;
    const auto ds = build_dataset(r);
    SoftmaxPolicy G{fixtures::random_scorer(ds, kLinear, 1), 1.0};
    TrainConfig cfg;
    cfg.epochs_outer = 2;
    const auto rec = pretrain_mle(G, ds, cfg);
    CHECK(*rec.last("generator", "queries_skipped") == 1.0);
  }
}

TEST_CASE("irgan_objective")
{
  const auto ds = fixtures::feature_dataset(4, 6, 3, 3);
  const SoftmaxPolicy G{fixtures::random_scorer(ds, kLinear, 2), 1.0};
  Rng rng(1);
  const auto half = irgan_objective(G, zero_scorer(ds), ds, 10, rng);
  CHECK(half.value == doctest::Approx(-2.0 * std::log(2.0) * 4).epsilon(1e-14));
  CHECK(half.standard_error == 0.0);

  const auto D = fixtures::random_scorer(ds, {ScorerKind::Mlp1, 3}, 9, 1.0);
  const auto exact = irgan_objective(G, D, ds, 1, rng, ObjectiveMode::Exact);
  const auto mc = irgan_objective(G, D, ds, 100'000, rng, ObjectiveMode::MonteCarlo);
  CHECK(std::abs(exact.value - mc.value) < 3.0 * mc.standard_error);
  CHECK_THROWS_AS(irgan_objective(G, D, ds, 0, rng), std::invalid_argument);
}

TEST_CASE("irgan_pointwise_epoch")
{
  const auto data = planted(10, 30, 0.1);
  const auto& ds = data.dataset;
  const auto dims = dims_of(ds);
  const ScorerSpec mlp{ScorerKind::Mlp1, 8};
  SoftmaxPolicy G0{Scorer(mlp, dims, init_params(mlp, dims, 0.1, 1)), 1.0};
  const Scorer D0(mlp, dims, init_params(mlp, dims, 0.1, 2));

  SUBCASE("zero learning rate freezes both models and still records")
  {
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    auto G = G0;
    auto D = D0;
    Rng rng(3);
    RunRecord rec;
    for (std::size_t e = 1; e <= 3; ++e) irgan_pointwise_epoch(G, D, ds, cfg, rng, rec, e);
    CHECK(G.scorer == G0.scorer);
    CHECK(D == D0);
    const auto J = rec.series("irgan-pointwise", "J");
    REQUIRE(J.size() == 3);
    // The objective is exact here, so it stays constant.
    CHECK(J[0].second == J[1].second);
    CHECK(J[1].second == J[2].second);
    CHECK(rec.last("irgan-pointwise.D", "d_objective").has_value());
    CHECK(rec.last("irgan-pointwise.G", "reward_mean").has_value());
  }

  SUBCASE("seeded determinism")
  {
    TrainConfig cfg;
    auto run = [&] {
      auto G = G0;
      auto D = D0;
      Rng rng(3);
      RunRecord rec;
      for (std::size_t e = 1; e <= 3; ++e) irgan_pointwise_epoch(G, D, ds, cfg, rng, rec, e);
      return std::make_tuple(rec, G.scorer, D);
    };
    const auto a = run();
    const auto b = run();
    CHECK(std::get<0>(a) == std::get<0>(b));
    CHECK(std::get<1>(a) == std::get<1>(b));
    CHECK(std::get<2>(a) == std::get<2>(b));
    CHECK_FALSE(std::get<1>(a) == G0.scorer);
  }
}

TEST_CASE("irgan_pairwise_epoch")
{
  SUBCASE("all-relevant pool is skipped and counted")
  {
    auto r = fixtures::feature_dataset(3, 3, 2, 1).records();
    for (auto& j : r.judgments)
      if (j.query.value == "q1") j.relevance = 1;
    const auto ds = build_dataset(r);
    SoftmaxPolicy G{fixtures::random_scorer(ds, kLinear, 1), 1.0};
    auto D = fixtures::random_scorer(ds, kLinear, 2);
    TrainConfig cfg;
    Rng rng(1);
    RunRecord rec;
    irgan_pairwise_epoch(G, D, ds, cfg, rng, rec, 1);
    CHECK(*rec.last("irgan-pairwise", "queries_skipped") == 1.0);
  }

  const auto data = planted(50, 200, 0.005);
  const auto& ds = data.dataset;
  const auto dims = dims_of(ds);

  SUBCASE("seeded determinism")
  {
    const auto small = planted(6, 20, 0.1).dataset;
    const auto sd = dims_of(small);
    auto run = [&] {
      SoftmaxPolicy G{Scorer(kLinear, sd, init_params(kLinear, sd, 0.1, 1)), 1.0};
      Scorer D(kLinear, sd, init_params(kLinear, sd, 0.1, 2));
      Rng rng(5);
      RunRecord rec;
      for (std::size_t e = 1; e <= 3; ++e) irgan_pairwise_epoch(G, D, small, {}, rng, rec, e);
      return std::make_pair(rec, D);
    };
    CHECK(run() == run());
  }

  SUBCASE("pairwise discriminator learns the planted order")
  {
    TrainConfig cfg;
    cfg.seed = 40;
    const ScorerSpec mlp{ScorerKind::Mlp1, 46};
    SoftmaxPolicy G{Scorer(mlp, dims, init_params(mlp, dims, 0.1, derive_seed(40, 21))), 1.0};
    Scorer D(mlp, dims, init_params(mlp, dims, 0.1, derive_seed(40, 22)));
    Rng rng(derive_seed(40, 7));
    RunRecord rec;
    for (std::size_t e = 1; e <= 30; ++e) irgan_pairwise_epoch(G, D, ds, cfg, rng, rec, e);
    const double acc = pairwise_accuracy(D, ds);
    MESSAGE("pairwise accuracy after 30 epochs: " << acc);
    CHECK(acc > 0.9);
  }
}

TEST_CASE("single_d negatives")
{
  const auto ds = fixtures::feature_dataset(1, 6, 3, 4, 2);
  const auto M = zero_scorer(ds);
  const auto pool = candidate_pool(ds, 0, true);
  for (double p : normalized_discriminator_probs(M, ds, 0, pool)) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));
  Rng rng(8);
  std::vector<double> freq(6, 0.0);
  const std::size_t n = 100'000;
  for (auto d : normalized_discriminator_sampling(M, ds, 0, pool, n, rng)) freq[d] += 1.0 / n;
  CHECK(freq[0] == 0.0);
  CHECK(freq[1] == 0.0);
  for (std::size_t d = 2; d < 6; ++d) CHECK(std::abs(freq[d] - 0.25) < 0.01);
}

TEST_CASE("single_d_epoch determinism")
{
  const auto data = planted(8, 20, 0.1);
  const auto dims = dims_of(data.dataset);
  auto run = [&] {
    Scorer M(kLinear, dims, init_params(kLinear, dims, 0.1, 3));
    Rng rng(2);
    RunRecord rec;
    for (std::size_t e = 1; e <= 3; ++e) single_d_epoch(M, data.dataset, {}, rng, rec, e);
    return std::make_pair(rec, M);
  };
  CHECK(run() == run());
}

TEST_CASE("dual_d_outer_epoch")
{
  const auto data = planted(8, 20, 0.1);
  const auto& ds = data.dataset;
  const auto dims = dims_of(ds);
  TrainConfig cfg;
  cfg.epochs_inner = 3;

  SUBCASE("identical models with identical streams stay identical")
  {
    Scorer A(kLinear, dims, init_params(kLinear, dims, 0.1, 3));
    Scorer B = A;
    DualStreams s{Rng(9), Rng(9)};
    RunRecord rec;
    dual_d_outer_epoch(A, B, ds, cfg, s, rec, 1);
    CHECK(A == B);
    CHECK(rec.last("dual-d.A", "d_objective") == rec.last("dual-d.B", "d_objective"));
  }

  SUBCASE("each model trains against the other's frozen snapshot")
  {
    const Scorer A0(kLinear, dims, init_params(kLinear, dims, 0.1, 3));
    const Scorer B0(kLinear, dims, init_params(kLinear, dims, 0.1, 4));
    auto A = A0, B = B0;
    auto streams = DualStreams::from_seed(5);
    RunRecord rec;
    dual_d_outer_epoch(A, B, ds, cfg, streams, rec, 1);

    auto ref = DualStreams::from_seed(5);
    auto a = A0, b = B0;
    for (int i = 0; i < 3; ++i) contrastive_epoch(a, B0, ds, cfg, ref.a);
    for (int i = 0; i < 3; ++i) contrastive_epoch(b, A0, ds, cfg, ref.b);
    CHECK(a == A);
    CHECK(b == B);
  }

  SUBCASE("inner epochs must be positive")
  {
    Scorer A(kLinear, dims, init_params(kLinear, dims, 0.1, 3));
    Scorer B = A;
    auto streams = DualStreams::from_seed(5);
    RunRecord rec;
    cfg.epochs_inner = 0;
    CHECK_THROWS_AS(dual_d_outer_epoch(A, B, ds, cfg, streams, rec, 1), ConfigError);
  }

  int ones = 0;
  for (std::uint64_t s = 1; s <= 100; ++s) {
    CHECK(dual_d_choice(s) == dual_d_choice(s));
    ones += dual_d_choice(s);
  }
  CHECK(ones > 20);
  CHECK(ones < 80);
}

TEST_CASE("dns_pick")
{
  const auto ds = scored_rows({0.1, 0.5, -0.3, 0.9, 0.2});
  const auto D = unit_linear(ds);
  const auto pool = full_pool(ds, 0);

  Rng rng(1);
  for (int t = 0; t < 20; ++t) CHECK(dns_pick(D, ds, 0, pool, 5, rng) == 3);
  CHECK(dns_pick(D, ds, 0, pool, 50, rng) == 3);

  std::vector<double> freq(5, 0.0);
  const std::size_t n = 100'000;
  for (std::size_t t = 0; t < n; ++t) freq[dns_pick(D, ds, 0, pool, 1, rng)] += 1.0 / n;
  for (double f : freq) CHECK(std::abs(f - 0.2) < 0.01);

  const auto tie = scored_rows({1.0, 1.0});
  CHECK(dns_pick(unit_linear(tie), tie, 0, full_pool(tie, 0), 2, rng) == 0);
  CHECK_THROWS_AS(dns_pick(D, ds, 0, pool, 0, rng), std::invalid_argument);
}

TEST_CASE("dns_epoch determinism and training signal")
{
  const auto data = planted(8, 20, 0.1);
  const auto dims = dims_of(data.dataset);
  auto run = [&](double lr) {
    Scorer D(kLinear, dims, init_params(kLinear, dims, 0.1, 3));
    TrainConfig cfg;
    cfg.learning_rate = lr;
    Rng rng(2);
    RunRecord rec;
    for (std::size_t e = 1; e <= 5; ++e) dns_epoch(D, data.dataset, cfg, rng, rec, e);
    return std::make_pair(rec, D);
  };
  CHECK(run(0.01) == run(0.01));
  const auto frozen = run(0.0);
  CHECK(frozen.second == Scorer(kLinear, dims, init_params(kLinear, dims, 0.1, 3)));
}

TEST_CASE("non-finite parameters raise NumericError")
{
  const auto ds = scored_rows({1.0});
  auto s = unit_linear(ds);
  s.params().values[0] = std::nan("");
  CHECK_THROWS_AS(check_finite(s, "x"), NumericError);
}
