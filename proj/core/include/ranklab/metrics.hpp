#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ranklab/dataset.hpp"
#include "ranklab/scorers.hpp"

namespace ranklab {

/// Documents of one query in descending score order. Ties are broken by
/// ascending document id.
struct RankedList {
  QueryId query;
  std::vector<std::string> docs;
  std::vector<double> scores;
};

RankedList rank_by_scores(QueryId query, std::vector<std::string> docs, std::vector<double> scores);
RankedList rank(const Scorer& scorer, const Dataset& dataset, std::size_t qi, std::span<const std::size_t> pool);
/// Ranks the whole pool.
RankedList rank(const Scorer& scorer, const Dataset& dataset, std::size_t qi);

/// doc id -> relevance grade for one query; absent documents count as 0.
using QueryJudgments = std::map<std::string, int, std::less<>>;

QueryJudgments judgments_for(const Dataset& dataset, std::size_t qi);

double precision_at_k(const RankedList& ranked, const QueryJudgments& judgments, std::size_t k);

/// Gain 2^rel - 1, discount 1/log2(i + 1). Empty when the query has no
/// relevant document.
std::optional<double> ndcg_at_k(const RankedList& ranked, const QueryJudgments& judgments, std::size_t k);

int p_at_1(const RankedList& ranked, const QueryJudgments& judgments);

enum class MetricKind { Precision, Ndcg };

struct MetricSpec {
  MetricKind kind = MetricKind::Precision;
  std::size_t k = 5;

  std::string name() const;
};

/// Parses "P@5", "NDCG@5" or "P@1".
MetricSpec parse_metric(std::string_view name);
std::vector<MetricSpec> parse_metric_list(std::string_view comma_separated);

struct MetricResult {
  std::string metric;
  double value = 0.0;
  std::size_t queries_counted = 0;
  std::size_t queries_skipped = 0;
};

/// Means over queries with at least one relevant document.
std::vector<MetricResult> evaluate_model(const Scorer& scorer, const Dataset& dataset,
                                         std::span<const MetricSpec> metrics);

/// Share of (relevant, non-relevant) pairs the scorer orders correctly,
/// pooled over all queries.
double pairwise_accuracy(const Scorer& scorer, const Dataset& dataset);

/// Header `model,metric,value,queries_counted,queries_skipped`.
void write_eval_csv(std::ostream& out, const std::vector<std::pair<std::string, std::vector<MetricResult>>>& reports);

}  // namespace ranklab
