#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ranklab {

enum class DatasetKind { WebSearch, Recommendation, Qa, Synthetic };

std::string_view to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(std::string_view name);

/// Opaque query identifier.
struct QueryId {
  std::string value;

  auto operator<=>(const QueryId&) const = default;
};

struct Document {
  std::string id;
  std::vector<double> features;  ///< dense query-document features, may be empty
  std::vector<int> tokens;       ///< token ids for text tasks, may be empty

  bool operator==(const Document&) const = default;
};

/// Graded relevance of one document for one query. Grade > 0 means relevant.
struct Judgment {
  QueryId query;
  std::string doc;
  int relevance = 0;

  auto operator<=>(const Judgment&) const = default;
};

/// Candidate documents available to one query.
struct PoolRecord {
  QueryId query;
  std::vector<int> query_tokens;
  std::vector<Document> docs;

  bool operator==(const PoolRecord&) const = default;
};

/// Raw material a Dataset is built from; also what a Dataset hands back.
struct DatasetRecords {
  DatasetKind kind = DatasetKind::Synthetic;
  std::vector<PoolRecord> pools;
  std::vector<Judgment> judgments;

  bool operator==(const DatasetRecords&) const = default;
};

class ValidationError : public std::runtime_error {
 public:
  enum class Code {
    NoRecords,
    EmptyQueryId,
    DuplicateQuery,
    EmptyPool,
    DuplicateDocument,
    EmptyDocument,
    DuplicateJudgment,
    JudgedDocMissing,
    UnknownQuery,
    NegativeRelevance,
    InconsistentFeatureDims,
  };

  ValidationError(Code code, std::string offending_id, const std::string& what)
      : std::runtime_error(what), code_(code), offending_id_(std::move(offending_id))
  {
  }

  Code code() const noexcept { return code_; }
  const std::string& offending_id() const noexcept { return offending_id_; }

 private:
  Code code_;
  std::string offending_id_;
};

/// Read-only view of one (query, document) pair as consumed by scorers.
struct Example {
  std::size_t query_index = 0;  ///< row in the shared query index space
  std::size_t item_index = 0;   ///< row in the shared item index space
  std::span<const double> features;
  std::span<const int> query_tokens;
  std::span<const int> doc_tokens;
};

/// Stable id -> row maps. Datasets split from a parent share the parent's
/// space so embedding tables stay aligned across train and test.
struct IndexSpace {
  std::map<QueryId, std::size_t> queries;
  std::map<std::string, std::size_t> items;
};

/// Immutable validated collection of queries, pools and judgments.
/// Queries are ordered by id and each pool by document id.
class Dataset {
 public:
  DatasetKind kind() const noexcept { return kind_; }
  std::size_t num_queries() const noexcept { return queries_.size(); }
  bool empty() const noexcept { return queries_.empty(); }

  const QueryId& query(std::size_t qi) const { return queries_.at(qi).id; }
  std::optional<std::size_t> find_query(const QueryId& id) const;
  /// Throws ValidationError(UnknownQuery) when absent.
  std::size_t query_index(const QueryId& id) const;

  std::span<const Document> pool(std::size_t qi) const { return queries_.at(qi).docs; }
  /// Relevance grade per pool position; unjudged documents read as 0.
  std::span<const int> relevance(std::size_t qi) const { return queries_.at(qi).relevance; }
  /// Pool positions with relevance > 0, ascending.
  std::span<const std::size_t> positives(std::size_t qi) const { return queries_.at(qi).positives; }
  std::span<const int> query_tokens(std::size_t qi) const { return queries_.at(qi).tokens; }
  std::optional<std::size_t> find_doc(std::size_t qi, std::string_view doc_id) const;

  const std::vector<Judgment>& judgments() const noexcept { return judgments_; }

  /// 0 when documents carry no features.
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  std::size_t num_items() const noexcept { return index_ ? index_->items.size() : 0; }
  std::size_t num_index_queries() const noexcept { return index_ ? index_->queries.size() : 0; }
  /// One past the largest token id seen in queries or documents.
  std::size_t token_bound() const noexcept { return token_bound_; }
  const std::shared_ptr<const IndexSpace>& index_space() const noexcept { return index_; }

  Example example(std::size_t qi, std::size_t pos) const;

  DatasetRecords records() const;

  bool operator==(const Dataset& other) const { return records() == other.records(); }

 private:
  friend Dataset build_dataset(DatasetRecords records, std::shared_ptr<const IndexSpace> index);

  struct QueryEntry {
    QueryId id;
    std::vector<int> tokens;
    std::vector<Document> docs;
    std::vector<int> relevance;
    std::vector<std::size_t> positives;
    std::size_t index_row = 0;
    std::vector<std::size_t> item_rows;
  };

  DatasetKind kind_ = DatasetKind::Synthetic;
  std::vector<QueryEntry> queries_;
  std::vector<Judgment> judgments_;
  std::size_t feature_dim_ = 0;
  std::size_t token_bound_ = 0;
  std::shared_ptr<const IndexSpace> index_;
};

/// Validates and canonicalizes records. A fresh index space is built unless
/// one is supplied, in which case every query and item must already be in it.
Dataset build_dataset(DatasetRecords records, std::shared_ptr<const IndexSpace> index = nullptr);

/// Pool positions for a query, optionally without its relevant documents.
std::vector<std::size_t> candidate_pool(const Dataset& dataset, std::size_t qi, bool exclude_positives);
std::vector<std::size_t> candidate_pool(const Dataset& dataset, const QueryId& query, bool exclude_positives);

/// Mean over queries of the share of relevant documents in the pool.
double relevant_fraction(const Dataset& dataset);

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

/// Moves a seeded share of queries into a test set.
DatasetSplit split_queries(const Dataset& dataset, double test_fraction, std::uint64_t seed);

/// Keeps every query and holds out a seeded share of each query's positives.
/// The test pool drops the positives that remain in training.
DatasetSplit split_judgments(const Dataset& dataset, double test_fraction, std::uint64_t seed);

}  // namespace ranklab
