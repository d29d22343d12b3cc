#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles/oracles.hpp"
#include "ranklab/pgvar.hpp"
#include "support/fixtures.hpp"

using namespace ranklab;

namespace {

MDPInstance instance(std::vector<std::vector<double>> q, std::vector<double> rho = {})
{
  MDPInstance m;
  for (std::size_t s = 0; s < q.size(); ++s) {
    m.states.push_back(fmt::format("s{}", s));
    m.actions.emplace_back();
    for (std::size_t a = 0; a < q[s].size(); ++a) m.actions.back().push_back(fmt::format("a{}", a));
  }
  if (rho.empty()) rho.assign(q.size(), 1.0 / static_cast<double>(q.size()));
  m.q_table = std::move(q);
  m.visitation = std::move(rho);
  return m;
}

// 1 state, 2 actions, scalar parameter, grad log pi = (+0.5, -0.5).
std::pair<MDPInstance, TabularPolicy> two_action(double q0 = 1.0, double q1 = 1.0)
{
  return {instance({{q0, q1}}), tabular_explicit({{0.5, 0.5}}, {{{0.5}, {-0.5}}}, 1)};
}

struct Random {
  MDPInstance inst;
  TabularPolicy pol;
};

Random random_instance(std::uint64_t seed, std::size_t max_states = 4, std::size_t max_actions = 6)
{
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.5);
  const std::size_t S = 1 + rng() % max_states;
  std::vector<std::vector<double>> q(S), logits(S);
  std::vector<double> rho(S);
  double mass = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    const std::size_t A = 1 + rng() % max_actions;
    for (std::size_t a = 0; a < A; ++a) {
      q[s].push_back(u(rng));
      logits[s].push_back(n(rng));
    }
    rho[s] = 0.1 + u(rng);
    mass += rho[s];
  }
  for (auto& r : rho) r /= mass;
  return {instance(q, rho), tabular_softmax(logits, 0.5 + u(rng))};
}

std::vector<double> zeros(std::size_t n) { return std::vector<double>(n, 0.0); }

}  // namespace

TEST_CASE("build_instance")
{
  DatasetRecords r{DatasetKind::WebSearch, {{QueryId{"q"}, {}, {{"a", {0.0}, {}}, {"b", {std::log(3.0)}, {}}}}}, {}};
  const auto ds = build_dataset(r);
  auto p = zero_params({ScorerKind::Linear, 0}, dims_of(ds));
  p.values[0] = 1.0;
  const Scorer D({ScorerKind::Linear, 0}, dims_of(ds), p);
  const SoftmaxPolicy G{D, 1.0};
  const auto built = build_instance(ds, D, G, {RewardKind::Sigmoid, 0.0});
  CHECK(built.instance.q_table[0][0] == 0.5);
  CHECK(built.instance.q_table[0][1] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(built.instance.actions[0] == std::vector<std::string>{"a", "b"});
  CHECK(built.policy.states[0].probs[1] == doctest::Approx(0.75).epsilon(1e-14));

  const auto four = fixtures::feature_dataset(4, 3, 2, 1, 0);
  const auto S = fixtures::random_scorer(four, {ScorerKind::Linear, 0}, 3);
  const auto b4 = build_instance(four, S, {S, 1.0}, {});
  for (double v : b4.instance.visitation) CHECK(v == 0.25);
  CHECK_NOTHROW(b4.instance.validate());
  CHECK_NOTHROW(b4.policy.validate(b4.instance));
}

TEST_CASE("scorer-backed policy rows match log_prob_gradient")
{
  const auto ds = fixtures::feature_dataset(2, 4, 3, 5);
  const SoftmaxPolicy G{fixtures::random_scorer(ds, {ScorerKind::Mlp1, 3}, 2), 0.8};
  const auto pol = tabular_from_policy(G, ds);
  for (std::size_t s = 0; s < 2; ++s) {
    const auto pool = candidate_pool(ds, s, false);
    for (std::size_t a = 0; a < 4; ++a) {
      const auto g = log_prob_gradient(G, ds, s, pool, a);
      const auto row = pol.states[s].grad(a);
      for (std::size_t j = 0; j < g.size(); ++j) CHECK(row[j] == doctest::Approx(g[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("gradient_sample")
{
  // Q constant per state, so the value-function baseline equals every Q.
  const auto inst = instance({{0.3, 0.3, 0.3}, {0.9, 0.9}});
  const auto pol = tabular_softmax({{0.1, 0.5, -1.0}, {2.0, 0.0}});
  Rng rng(1);
  for (int t = 0; t < 50; ++t)
    for (double g : gradient_sample(inst, pol, PgBaseline::value_function(), rng)) CHECK(std::abs(g) < 1e-15);

  const auto single = instance({{0.3}, {0.8}});
  const auto pol1 = tabular_softmax({{0.0}, {1.0}});
  for (int t = 0; t < 20; ++t)
    for (double g : gradient_sample(single, pol1, PgBaseline::constant(0.5), rng)) CHECK(g == 0.0);

  const auto r = random_instance(7, 3, 4);
  const auto exact = exact_gradient_mean(r.inst, r.pol, PgBaseline::constant(0.4));
  const std::size_t n = 100'000;
  std::vector<double> mean = zeros(exact.size()), m2 = zeros(exact.size());
  Rng rng2(40);
  for (std::size_t t = 1; t <= n; ++t) {
    const auto g = gradient_sample(r.inst, r.pol, PgBaseline::constant(0.4), rng2);
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

TEST_CASE("exact_gradient_mean")
{
  const auto constant = instance({{0.7, 0.7, 0.7}, {0.7, 0.7}});
  const auto pol = tabular_softmax({{0.1, 0.5, -1.0}, {2.0, 0.0}});
  for (double g : exact_gradient_mean(constant, pol, PgBaseline::constant(0.2))) CHECK(std::abs(g) < 1e-15);

  const auto [inst, sym] = two_action(0.8, 0.8);
  CHECK(exact_gradient_mean(inst, sym, PgBaseline::constant(0.3))[0] == 0.0);

  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto r = random_instance(seed);
    const double b = 0.5;
    const auto got = exact_gradient_mean(r.inst, r.pol, PgBaseline::constant(b));
    const auto want = oracle::mean_gradient(oracle::enumerate(r.inst, r.pol, std::vector<double>(r.inst.states.size(), b), b),
                                            r.pol.num_params);
    for (std::size_t j = 0; j < got.size(); ++j) CHECK(std::abs(got[j] - want[j]) < 1e-12);
  }
}

TEST_CASE("exact_variance")
{
  const auto single = instance({{0.4}});
  CHECK(exact_variance(single, tabular_softmax({{0.0}}), PgBaseline::constant(0.1)) == 0.0);

  const auto equal = instance({{0.3, 0.3}, {0.6, 0.6, 0.6}});
  CHECK(exact_variance(equal, tabular_softmax({{0.0, 1.0}, {0.2, 0.3, 0.4}}), PgBaseline::value_function()) == 0.0);

  const auto [hand, hand_pol] = two_action();
  CHECK(std::abs(exact_variance(hand, hand_pol, PgBaseline::constant(0.0)) - 0.25) < 1e-12);

  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto r = random_instance(seed);
    for (const auto& pb : {PgBaseline::constant(0.5), PgBaseline::value_function()}) {
      const auto b = baseline_values(r.inst, r.pol, pb);
      const auto v = oracle::variance(oracle::enumerate(r.inst, r.pol, b, 0.5), r.pol.num_params);
      CHECK(std::abs(exact_variance(r.inst, r.pol, pb) - v.total) < 1e-12 * std::max(1.0, v.total));
    }
  }
}

TEST_CASE("mc_variance")
{
  const auto [zero_inst, zero_pol] = two_action(0.5, 0.5);
  Rng rng(1);
  const auto z = mc_variance(zero_inst, zero_pol, PgBaseline::constant(0.5), 1000, rng);
  CHECK(z.value == 0.0);
  CHECK(z.standard_error == 0.0);

  const auto [hand, hand_pol] = two_action();
  Rng r1(40), r2(40);
  const auto a = mc_variance(hand, hand_pol, PgBaseline::constant(0.0), 100'000, r1);
  const auto b = mc_variance(hand, hand_pol, PgBaseline::constant(0.0), 100'000, r2);
  CHECK(a.value == b.value);
  CHECK(a.standard_error == b.standard_error);
  CHECK(std::abs(a.value - 0.25) <= 3.0 * a.standard_error);

  const auto r = random_instance(3);
  CHECK(std::isinf(mc_variance(r.inst, r.pol, PgBaseline::constant(0.5), 3, rng).standard_error));
  CHECK_THROWS_AS(mc_variance(r.inst, r.pol, PgBaseline::constant(0.5), 1, rng), std::invalid_argument);
}

TEST_CASE("mc_variance agrees with exact_variance in at least 99% of trials")
{
  const auto r = random_instance(11, 3, 5);
  const auto pb = PgBaseline::constant(0.5);
  const double exact = exact_variance(r.inst, r.pol, pb);
  int within = 0;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    Rng rng(derive_seed(77, t));
    const auto e = mc_variance(r.inst, r.pol, pb, 5000, rng);
    within += std::abs(e.value - exact) <= 3.0 * e.standard_error;
  }
  MESSAGE("trials within 3 SE: " << within << "/1000");
  CHECK(within >= 990);
}

TEST_CASE("partition_actions")
{
  const auto inst = instance({{0.2, 0.7}});
  const auto p = partition_actions(inst, 0.5);
  CHECK(p.a1[0] == std::vector<std::size_t>{0});
  CHECK(p.a2[0] == std::vector<std::size_t>{1});
  CHECK(*p.q_max == 0.2);

  const auto hi = partition_actions(inst, 0.9);
  CHECK(hi.a1[0].size() == 2);
  CHECK(*hi.q_max == 0.7);
  CHECK(hi.any_a2_empty);

  const auto lo = partition_actions(inst, 0.1);
  CHECK(lo.a1[0].empty());
  CHECK_FALSE(lo.q_max.has_value());
  CHECK(lo.any_a1_empty);

  // Q_max is one maximum over every state.
  const auto multi = partition_actions(instance({{0.1, 0.3}, {0.45, 0.9}}), 0.5);
  CHECK(*multi.q_max == 0.45);

  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto r = random_instance(seed);
    const auto part = partition_actions(r.inst, 0.5);
    for (std::size_t s = 0; s < r.inst.states.size(); ++s) {
      std::vector<std::size_t> all = part.a1[s];
      all.insert(all.end(), part.a2[s].begin(), part.a2[s].end());
      std::sort(all.begin(), all.end());
      CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
      CHECK(all.size() == r.inst.actions[s].size());
      for (auto a : part.a1[s]) {
        CHECK(r.inst.q_table[s][a] < 0.5);
        CHECK((r.inst.q_table[s][a] - 0.5) * (r.inst.q_table[s][a] - 0.5) >= (*part.q_max - 0.5) * (*part.q_max - 0.5));
      }
    }
    if (part.q_max) CHECK(*part.q_max < 0.5);
  }
}

TEST_CASE("variance_decomposition")
{
  const auto inst = instance({{0.1, 0.2, 0.3}, {0.05, 0.4}});
  const auto pol = tabular_softmax({{0.1, 0.5, -1.0}, {2.0, 0.0}});
  const auto all_a1 = variance_decomposition(inst, pol, 0.5);
  CHECK(all_a1.term_a2 == 0.0);
  CHECK(std::abs(all_a1.term_a1 - exact_variance(inst, pol, PgBaseline::constant(0.5))) < 1e-12);

  const auto all_a2 = variance_decomposition(inst, pol, 0.0);
  CHECK(all_a2.term_a1 == 0.0);
  CHECK(std::abs(all_a2.term_a2 - exact_variance(inst, pol, PgBaseline::constant(0.0))) < 1e-12);

  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto r = random_instance(seed, 3);
    for (double b : {0.2, 0.5, 0.8}) {
      const auto t = variance_decomposition(r.inst, r.pol, b);
      const double v = exact_variance(r.inst, r.pol, PgBaseline::constant(b));
      CHECK(std::abs(t.term_a1 + t.term_a2 - v) < 1e-10);
      const auto o = oracle::variance(oracle::enumerate(r.inst, r.pol, std::vector<double>(r.inst.states.size(), b), b),
                                      r.pol.num_params);
      CHECK(std::abs(t.term_a1 - o.a1) < 1e-12);
      CHECK(std::abs(t.term_a2 - o.a2) < 1e-12);
    }
  }
}

TEST_CASE("bound_rhs")
{
  const auto inst = instance({{0.2, 0.7}, {0.1, 0.35, 0.9}});
  const auto pol = tabular_softmax({{0.3, -0.2}, {1.0, 0.0, -1.0}});
  const auto part = partition_actions(inst, 0.5);
  CHECK(bound_rhs(inst, pol, *part.q_max, part).value == 0.0);

  const auto undefined = partition_actions(inst, 0.05);
  CHECK_THROWS_AS(bound_rhs(inst, pol, 0.05, undefined), std::invalid_argument);

  // Shrinking A1's probability drives the bound to zero.
  double prev = INFINITY;
  for (double L : {0.0, 2.0, 5.0, 10.0, 20.0}) {
    const auto i2 = instance({{0.1, 0.9}});
    const auto p2 = tabular_softmax({{-L, 0.0}});
    const double v = bound_rhs(i2, p2, 0.5, partition_actions(i2, 0.5)).value;
    CHECK(v < prev);
    prev = v;
  }
  CHECK(prev < 1e-7);

  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto r = random_instance(seed);
    const auto p = partition_actions(r.inst, 0.6);
    if (!p.q_max) continue;
    const auto rhs = bound_rhs(r.inst, r.pol, 0.6, p);
    CHECK(std::abs(rhs.value - rhs.factored) <= 1e-12 * std::max(1.0, rhs.value));
    CHECK(std::abs(rhs.value - rhs.uncentered) <= 1e-12 * std::max(1.0, rhs.value));
    CHECK(std::abs(rhs.uncentered - oracle::bound(r.inst, r.pol, 0.6)) <= 1e-12 * std::max(1.0, rhs.value));
    const double q = *p.q_max;
    CHECK(std::abs((q - 0.6) * (q - 0.6) - 0.36 * (q / 0.6 - 1.0) * (q / 0.6 - 1.0)) < 1e-12);
  }
}

TEST_CASE("verify_bound_chain")
{
  const auto inst = instance({{0.1, 0.2, 0.3}, {0.05, 0.4}});
  const auto pol = tabular_softmax({{0.1, 0.5, -1.0}, {2.0, 0.0}});
  const auto r = verify_bound_chain(inst, pol, 0.5);
  CHECK(r.a2_empty);
  CHECK(r.p_a1 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.term_a1_holds == r.variance_holds);
  CHECK(r.term_a1_holds);
  CHECK(r.pointwise_checked == 5);
  CHECK(r.pointwise_failures == 0);
  CHECK(*r.q_max == 0.4);

  const auto none = verify_bound_chain(inst, pol, 0.01);
  CHECK_FALSE(none.q_max.has_value());
  CHECK_FALSE(none.bound_rhs.has_value());

  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto x = random_instance(seed);
    const auto rep = verify_bound_chain(x.inst, x.pol, 0.5);
    CHECK(rep.pointwise_failures == 0);
    CHECK(std::abs(rep.term_a1 + rep.term_a2 - rep.exact_variance) < 1e-10);
    if (rep.a2_empty && rep.bound_rhs) CHECK(rep.term_a1_holds == rep.variance_holds);
  }
}

TEST_CASE("bound_sweep")
{
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto x = random_instance(seed);
    const std::vector<double> bs{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    const auto rows = bound_sweep(x.inst, x.pol, 0.5, bs);
    REQUIRE(rows.size() == bs.size());
    const auto p = partition_actions(x.inst, 0.5);
    for (const auto& row : rows) CHECK(row.above_q_max == (p.q_max && row.b > *p.q_max));
    // Strict growth needs a non-zero A1 spread.
    bool positive = false;
    for (const auto& row : rows) positive = positive || row.bound_rhs > 0.0;
    if (positive) CHECK(sweep_monotone(rows));
  }
  std::vector<SweepRow> flat{{0.5, 1.0, true}, {0.6, 1.0, true}};
  CHECK_FALSE(sweep_monotone(flat));
}

TEST_CASE("enumeration cap")
{
  MDPInstance big;
  big.states = {"s"};
  big.actions = {std::vector<std::string>(kMaxEnumeratedPairs + 1, "a")};
  big.q_table = {std::vector<double>(kMaxEnumeratedPairs + 1, 0.0)};
  big.visitation = {1.0};
  TabularPolicy pol;
  pol.num_params = 0;
  pol.states.push_back({0, 0, std::vector<double>(kMaxEnumeratedPairs + 1, 1.0 / (kMaxEnumeratedPairs + 1)), {}});
  CHECK_THROWS_AS(exact_variance(big, pol, PgBaseline::constant(0.5)), EnumerationError);
}

TEST_CASE("instance validation")
{
  auto bad = instance({{0.1}, {0.2}}, {0.3, 0.3});
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  auto nan = instance({{std::nan("")}});
  CHECK_THROWS_AS(nan.validate(), std::invalid_argument);
  auto empty = instance({{}});
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
}

TEST_CASE("sparsity study")
{
  StudyConfig cfg;
  cfg.mc_samples = 2000;
  const std::vector<double> one{0.005};
  const auto single = sparsity_vs_bound_study(one, cfg, 40);
  REQUIRE(single.size() == 1);
  CHECK(single[0].b == 0.5);
  CHECK(single[0].fraction == 0.005);

  const std::vector<double> pair{0.002, 1.0};
  const auto rows = sparsity_vs_bound_study(pair, cfg, 40);
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[0].q_max.has_value());
  REQUIRE(rows[1].q_max.has_value());
  MESSAGE("q_max at 0.002: " << *rows[0].q_max << ", at 1.0: " << *rows[1].q_max);
  CHECK(*rows[1].q_max > *rows[0].q_max);

  std::ostringstream os;
  write_study_csv(os, rows);
  CHECK(os.str().rfind("fraction,b,q_max,bound_rhs,exact_variance,mc_variance,mc_se,p_a1\n", 0) == 0);

  StudyRow undefined;
  undefined.fraction = 0.5;
  std::ostringstream os2;
  write_study_csv(os2, std::vector<StudyRow>{undefined});
  CHECK(os2.str().find("\n0.5,0,,,") != std::string::npos);

  CHECK_THROWS_AS(study_instance(0.0, cfg, 1), std::invalid_argument);
}
