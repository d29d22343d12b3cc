#pragma once

#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ranklab/dataset.hpp"
#include "ranklab/numeric.hpp"
#include "ranklab/scorers.hpp"

namespace fixtures {

using namespace ranklab;

// Random dense features; the first `rel` docs of every pool are relevant.
inline Dataset feature_dataset(std::size_t queries, std::size_t pool, std::size_t dim, std::uint64_t seed,
                               std::size_t rel = 1)
{
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  DatasetRecords r{DatasetKind::WebSearch, {}, {}};
  for (std::size_t q = 0; q < queries; ++q) {
    PoolRecord p{QueryId{fmt::format("q{}", q)}, {}, {}};
    for (std::size_t d = 0; d < pool; ++d) {
      Document doc{fmt::format("q{}_d{}", q, d), std::vector<double>(dim), {}};
      for (auto& x : doc.features) x = n(rng);
      p.docs.push_back(doc);
      r.judgments.push_back({p.query, doc.id, d < rel ? 1 : 0});
    }
    r.pools.push_back(p);
  }
  return build_dataset(r);
}

// Id-only recommendation data over a shared catalog.
inline Dataset id_dataset(std::size_t users, std::size_t items)
{
  DatasetRecords r{DatasetKind::Recommendation, {}, {}};
  for (std::size_t u = 0; u < users; ++u) {
    PoolRecord p{QueryId{fmt::format("u{}", u)}, {}, {}};
    for (std::size_t i = 0; i < items; ++i) p.docs.push_back({fmt::format("i{}", i), {}, {}});
    r.judgments.push_back({p.query, fmt::format("i{}", u % items), 1});
    r.pools.push_back(p);
  }
  return build_dataset(r);
}

// Token sequences drawn from [1, vocab).
inline Dataset text_dataset(std::size_t queries, std::size_t pool, int vocab, std::uint64_t seed)
{
  Rng rng(seed);
  std::uniform_int_distribution<int> tok(1, vocab - 1);
  std::uniform_int_distribution<int> len(1, 4);
  auto seq = [&] {
    std::vector<int> s(static_cast<std::size_t>(len(rng)));
    for (auto& t : s) t = tok(rng);
    return s;
  };
  DatasetRecords r{DatasetKind::Qa, {}, {}};
  for (std::size_t q = 0; q < queries; ++q) {
    PoolRecord p{QueryId{fmt::format("q{}", q)}, seq(), {}};
    for (std::size_t d = 0; d < pool; ++d) p.docs.push_back({fmt::format("q{}_a{}", q, d), {}, seq()});
    r.judgments.push_back({p.query, p.docs[0].id, 1});
    r.pools.push_back(p);
  }
  return build_dataset(r);
}

inline Dataset for_kind(ScorerKind kind, std::uint64_t seed)
{
  switch (kind) {
    case ScorerKind::MatFac: return id_dataset(3, 5);
    case ScorerKind::TextAvgEmbed: return text_dataset(3, 4, 9, seed);
    default: return feature_dataset(3, 4, 5, seed);
  }
}

inline Scorer random_scorer(const Dataset& ds, ScorerSpec spec, std::uint64_t seed, double scale = 0.5)
{
  const auto dims = dims_of(ds);
  return Scorer(spec, dims, init_params(spec, dims, scale, seed));
}

inline std::vector<ScorerSpec> all_specs()
{
  return {{ScorerKind::Linear, 0}, {ScorerKind::Mlp1, 4}, {ScorerKind::MatFac, 3}, {ScorerKind::TextAvgEmbed, 3}};
}

}  // namespace fixtures
