#include "ranklab/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "ranklab/numeric.hpp"

namespace ranklab {

std::string_view to_string(DatasetKind kind)
{
  switch (kind) {
    case DatasetKind::WebSearch: return "web-search";
    case DatasetKind::Recommendation: return "recommendation";
    case DatasetKind::Qa: return "qa";
    case DatasetKind::Synthetic: return "synthetic";
  }
  return "synthetic";
}

DatasetKind parse_dataset_kind(std::string_view name)
{
  if (name == "web-search") return DatasetKind::WebSearch;
  if (name == "recommendation") return DatasetKind::Recommendation;
  if (name == "qa") return DatasetKind::Qa;
  if (name == "synthetic") return DatasetKind::Synthetic;
  throw std::invalid_argument("unknown dataset kind '" + std::string(name) + "'");
}

std::optional<std::size_t> Dataset::find_query(const QueryId& id) const
{
  auto it = std::lower_bound(queries_.begin(), queries_.end(), id,
                             [](const QueryEntry& e, const QueryId& q) { return e.id < q; });
  if (it == queries_.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - queries_.begin());
}

std::size_t Dataset::query_index(const QueryId& id) const
{
  if (auto qi = find_query(id)) return *qi;
  throw ValidationError(ValidationError::Code::UnknownQuery, id.value, "unknown query '" + id.value + "'");
}

std::optional<std::size_t> Dataset::find_doc(std::size_t qi, std::string_view doc_id) const
{
  const auto& docs = queries_.at(qi).docs;
  auto it = std::lower_bound(docs.begin(), docs.end(), doc_id,
                             [](const Document& d, std::string_view id) { return d.id < id; });
  if (it == docs.end() || it->id != doc_id) return std::nullopt;
  return static_cast<std::size_t>(it - docs.begin());
}

Example Dataset::example(std::size_t qi, std::size_t pos) const
{
  const auto& q = queries_.at(qi);
  const auto& d = q.docs.at(pos);
  return Example{q.index_row, q.item_rows[pos], d.features, q.tokens, d.tokens};
}

DatasetRecords Dataset::records() const
{
  DatasetRecords r;
  r.kind = kind_;
  r.pools.reserve(queries_.size());
  for (const auto& q : queries_) r.pools.push_back(PoolRecord{q.id, q.tokens, q.docs});
  r.judgments = judgments_;
  return r;
}

Dataset build_dataset(DatasetRecords records, std::shared_ptr<const IndexSpace> index)
{
  using Code = ValidationError::Code;
  if (records.pools.empty()) throw ValidationError(Code::NoRecords, "", "dataset has no query pools");

  std::sort(records.pools.begin(), records.pools.end(),
            [](const PoolRecord& a, const PoolRecord& b) { return a.query < b.query; });

  Dataset ds;
  ds.kind_ = records.kind;
  std::optional<std::size_t> dim;
  std::size_t token_bound = 0;
  auto note_tokens = [&](const std::vector<int>& tokens, const std::string& owner) {
    for (int t : tokens) {
      if (t < 0) throw ValidationError(Code::EmptyDocument, owner, "negative token id in '" + owner + "'");
      token_bound = std::max(token_bound, static_cast<std::size_t>(t) + 1);
    }
  };

  for (std::size_t i = 0; i < records.pools.size(); ++i) {
    auto& p = records.pools[i];
    if (p.query.value.empty()) throw ValidationError(Code::EmptyQueryId, "", "empty query id");
    if (i > 0 && records.pools[i - 1].query == p.query)
      throw ValidationError(Code::DuplicateQuery, p.query.value, "duplicate query '" + p.query.value + "'");
    if (p.docs.empty())
      throw ValidationError(Code::EmptyPool, p.query.value, "query '" + p.query.value + "' has an empty pool");
    std::sort(p.docs.begin(), p.docs.end(), [](const Document& a, const Document& b) { return a.id < b.id; });
    for (std::size_t j = 0; j < p.docs.size(); ++j) {
      const auto& d = p.docs[j];
      if (j > 0 && p.docs[j - 1].id == d.id)
        throw ValidationError(Code::DuplicateDocument, d.id,
                              "document '" + d.id + "' appears twice in pool of '" + p.query.value + "'");
      // Recommendation items are identified by id alone.
      const bool id_only_ok = records.kind == DatasetKind::Recommendation;
      if (d.id.empty() || (!id_only_ok && d.features.empty() && d.tokens.empty()))
        throw ValidationError(Code::EmptyDocument, d.id,
                              "document '" + d.id + "' has neither features nor tokens");
      if (!d.features.empty()) {
        if (!dim) dim = d.features.size();
        if (*dim != d.features.size())
          throw ValidationError(Code::InconsistentFeatureDims, d.id,
                                "document '" + d.id + "' has " + std::to_string(d.features.size()) +
                                    " features, expected " + std::to_string(*dim));
      }
      note_tokens(d.tokens, d.id);
    }
    note_tokens(p.query_tokens, p.query.value);
  }

  if (!index) {
    auto fresh = std::make_shared<IndexSpace>();
    std::set<std::string> items;
    for (const auto& p : records.pools) {
      fresh->queries.emplace(p.query, fresh->queries.size());
      for (const auto& d : p.docs) items.insert(d.id);
    }
    std::size_t row = 0;
    for (const auto& id : items) fresh->items.emplace(id, row++);
    index = std::move(fresh);
  }

  ds.queries_.reserve(records.pools.size());
  for (auto& p : records.pools) {
    Dataset::QueryEntry e;
    e.id = p.query;
    e.tokens = std::move(p.query_tokens);
    e.docs = std::move(p.docs);
    e.relevance.assign(e.docs.size(), 0);
    auto qrow = index->queries.find(e.id);
    if (qrow == index->queries.end())
      throw ValidationError(Code::UnknownQuery, e.id.value, "query '" + e.id.value + "' missing from index space");
    e.index_row = qrow->second;
    e.item_rows.reserve(e.docs.size());
    for (const auto& d : e.docs) {
      auto irow = index->items.find(d.id);
      if (irow == index->items.end())
        throw ValidationError(Code::JudgedDocMissing, d.id, "document '" + d.id + "' missing from index space");
      e.item_rows.push_back(irow->second);
    }
    ds.queries_.push_back(std::move(e));
  }
  ds.index_ = std::move(index);
  ds.feature_dim_ = dim.value_or(0);
  ds.token_bound_ = token_bound;

  std::sort(records.judgments.begin(), records.judgments.end());
  for (std::size_t i = 0; i < records.judgments.size(); ++i) {
    const auto& j = records.judgments[i];
    const std::string key = j.query.value + "/" + j.doc;
    if (i > 0 && records.judgments[i - 1].query == j.query && records.judgments[i - 1].doc == j.doc)
      throw ValidationError(Code::DuplicateJudgment, key, "duplicate judgment for '" + key + "'");
    if (j.relevance < 0)
      throw ValidationError(Code::NegativeRelevance, key, "negative relevance for '" + key + "'");
    auto qi = ds.find_query(j.query);
    if (!qi) throw ValidationError(Code::JudgedDocMissing, key, "judgment references unknown query '" + j.query.value + "'");
    auto pos = ds.find_doc(*qi, j.doc);
    if (!pos)
      throw ValidationError(Code::JudgedDocMissing, j.doc,
                            "judged document '" + j.doc + "' is not in the pool of '" + j.query.value + "'");
    ds.queries_[*qi].relevance[*pos] = j.relevance;
  }
  ds.judgments_ = std::move(records.judgments);

  for (auto& e : ds.queries_)
    for (std::size_t pos = 0; pos < e.relevance.size(); ++pos)
      if (e.relevance[pos] > 0) e.positives.push_back(pos);
  return ds;
}

std::vector<std::size_t> candidate_pool(const Dataset& dataset, std::size_t qi, bool exclude_positives)
{
  const auto rel = dataset.relevance(qi);
  std::vector<std::size_t> out;
  out.reserve(rel.size());
  for (std::size_t pos = 0; pos < rel.size(); ++pos)
    if (!exclude_positives || rel[pos] <= 0) out.push_back(pos);
  return out;
}

std::vector<std::size_t> candidate_pool(const Dataset& dataset, const QueryId& query, bool exclude_positives)
{
  return candidate_pool(dataset, dataset.query_index(query), exclude_positives);
}

double relevant_fraction(const Dataset& dataset)
{
  if (dataset.empty()) throw std::invalid_argument("relevant_fraction of an empty dataset");
  double total = 0.0;
  for (std::size_t qi = 0; qi < dataset.num_queries(); ++qi)
    total += static_cast<double>(dataset.positives(qi).size()) / static_cast<double>(dataset.pool(qi).size());
  return total / static_cast<double>(dataset.num_queries());
}

namespace {

void check_fraction(double f)
{
  if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("test fraction must lie in (0, 1)");
}

}  // namespace

DatasetSplit split_queries(const Dataset& dataset, double test_fraction, std::uint64_t seed)
{
  check_fraction(test_fraction);
  const auto all = dataset.records();
  std::vector<std::size_t> order(all.pools.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  if (order.size() < 2) throw std::invalid_argument("need at least two queries to split");
  auto n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(order.size())));
  n_test = std::clamp<std::size_t>(n_test, 1, order.size() - 1);

  std::set<QueryId> test_ids;
  for (std::size_t i = 0; i < n_test; ++i) test_ids.insert(all.pools[order[i]].query);

  DatasetRecords train{all.kind, {}, {}}, test{all.kind, {}, {}};
  for (const auto& p : all.pools) (test_ids.count(p.query) ? test : train).pools.push_back(p);
  for (const auto& j : all.judgments) (test_ids.count(j.query) ? test : train).judgments.push_back(j);
  return {build_dataset(std::move(train), dataset.index_space()),
          build_dataset(std::move(test), dataset.index_space())};
}

DatasetSplit split_judgments(const Dataset& dataset, double test_fraction, std::uint64_t seed)
{
  check_fraction(test_fraction);
  Rng rng(seed);
  DatasetRecords train{dataset.kind(), {}, {}}, test{dataset.kind(), {}, {}};
  const auto all = dataset.records();
  std::vector<std::vector<std::string>> held_by_query(dataset.num_queries());
  for (std::size_t qi = 0; qi < dataset.num_queries(); ++qi) {
    std::vector<std::size_t> pos(dataset.positives(qi).begin(), dataset.positives(qi).end());
    std::shuffle(pos.begin(), pos.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(pos.size())));
    std::set<std::string> held, kept;
    for (std::size_t i = 0; i < pos.size(); ++i)
      (i < n_test ? held : kept).insert(dataset.pool(qi)[pos[i]].id);

    const auto& pool = all.pools[qi];
    train.pools.push_back(pool);
    PoolRecord test_pool{pool.query, pool.query_tokens, {}};
    for (const auto& d : pool.docs)
      if (!kept.count(d.id)) test_pool.docs.push_back(d);
    test.pools.push_back(std::move(test_pool));
    held_by_query[qi].assign(held.begin(), held.end());
  }
  for (const auto& j : all.judgments) {
    const auto qi = dataset.query_index(j.query);
    const bool is_held = std::binary_search(held_by_query[qi].begin(), held_by_query[qi].end(), j.doc);
    (is_held ? test : train).judgments.push_back(j);
  }
  return {build_dataset(std::move(train), dataset.index_space()),
          build_dataset(std::move(test), dataset.index_space())};
}

}  // namespace ranklab
