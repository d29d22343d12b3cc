#include "ranklab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace ranklab {

RankedList rank_by_scores(QueryId query, std::vector<std::string> docs, std::vector<double> scores)
{
  if (docs.empty()) throw std::invalid_argument("cannot rank an empty pool");
  if (docs.size() != scores.size()) throw std::invalid_argument("docs and scores differ in length");
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return docs[a] < docs[b];
  });
  RankedList r{std::move(query), {}, {}};
  r.docs.reserve(order.size());
  r.scores.reserve(order.size());
  for (auto i : order) {
    r.docs.push_back(std::move(docs[i]));
    r.scores.push_back(scores[i]);
  }
  return r;
}

RankedList rank(const Scorer& scorer, const Dataset& dataset, std::size_t qi, std::span<const std::size_t> pool)
{
  if (pool.empty()) throw std::invalid_argument("cannot rank an empty pool");
  std::vector<std::string> ids;
  ids.reserve(pool.size());
  for (auto pos : pool) ids.push_back(dataset.pool(qi)[pos].id);
  return rank_by_scores(dataset.query(qi), std::move(ids), score_all(scorer, dataset, qi, pool));
}

RankedList rank(const Scorer& scorer, const Dataset& dataset, std::size_t qi)
{
  const auto pool = candidate_pool(dataset, qi, false);
  return rank(scorer, dataset, qi, pool);
}

QueryJudgments judgments_for(const Dataset& dataset, std::size_t qi)
{
  QueryJudgments j;
  const auto pool = dataset.pool(qi);
  const auto rel = dataset.relevance(qi);
  for (std::size_t p = 0; p < pool.size(); ++p)
    if (rel[p] > 0) j.emplace(pool[p].id, rel[p]);
  return j;
}

namespace {

int grade(const QueryJudgments& j, const std::string& doc)
{
  auto it = j.find(doc);
  return it == j.end() ? 0 : it->second;
}

double gain(int rel) { return std::exp2(static_cast<double>(rel)) - 1.0; }
double discount(std::size_t rank1) { return 1.0 / std::log2(static_cast<double>(rank1) + 1.0); }

}  // namespace

double precision_at_k(const RankedList& ranked, const QueryJudgments& judgments, std::size_t k)
{
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  const std::size_t n = std::min(k, ranked.docs.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (grade(judgments, ranked.docs[i]) > 0) ++hits;
  return static_cast<double>(hits) / static_cast<double>(k);
}

std::optional<double> ndcg_at_k(const RankedList& ranked, const QueryJudgments& judgments, std::size_t k)
{
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  std::vector<int> ideal;
  for (const auto& [doc, rel] : judgments)
    if (rel > 0) ideal.push_back(rel);
  if (ideal.empty()) return std::nullopt;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());

  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ranked.docs.size()); ++i)
    dcg += gain(grade(judgments, ranked.docs[i])) * discount(i + 1);
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) idcg += gain(ideal[i]) * discount(i + 1);
  return dcg / idcg;
}

int p_at_1(const RankedList& ranked, const QueryJudgments& judgments)
{
  if (ranked.docs.empty()) throw std::invalid_argument("p_at_1 of an empty ranking");
  return grade(judgments, ranked.docs.front()) > 0 ? 1 : 0;
}

std::string MetricSpec::name() const
{
  return fmt::format("{}@{}", kind == MetricKind::Ndcg ? "NDCG" : "P", k);
}

MetricSpec parse_metric(std::string_view name)
{
  const auto at = name.find('@');
  if (at == std::string_view::npos) throw std::invalid_argument("metric '" + std::string(name) + "' lacks '@k'");
  const auto head = name.substr(0, at);
  MetricSpec m;
  if (head == "P") m.kind = MetricKind::Precision;
  else if (head == "NDCG") m.kind = MetricKind::Ndcg;
  else throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
  const std::string tail(name.substr(at + 1));
  std::size_t used = 0;
  long k = 0;
  try {
    k = std::stol(tail, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tail.size() || tail.empty() || k < 1) throw std::invalid_argument("bad cutoff in metric '" + std::string(name) + "'");
  m.k = static_cast<std::size_t>(k);
  return m;
}

std::vector<MetricSpec> parse_metric_list(std::string_view comma_separated)
{
  std::vector<MetricSpec> out;
  std::size_t start = 0;
  while (start <= comma_separated.size()) {
    auto end = comma_separated.find(',', start);
    if (end == std::string_view::npos) end = comma_separated.size();
    auto item = comma_separated.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.push_back(parse_metric(item));
    start = end + 1;
  }
  if (out.empty()) throw std::invalid_argument("empty metric list");
  return out;
}

std::vector<MetricResult> evaluate_model(const Scorer& scorer, const Dataset& dataset,
                                         std::span<const MetricSpec> metrics)
{
  std::vector<MetricResult> out;
  for (const auto& m : metrics) out.push_back(MetricResult{m.name(), 0.0, 0, 0});
  for (std::size_t qi = 0; qi < dataset.num_queries(); ++qi) {
    if (dataset.positives(qi).empty()) {
      for (auto& r : out) ++r.queries_skipped;
      continue;
    }
    const auto ranked = rank(scorer, dataset, qi);
    const auto judged = judgments_for(dataset, qi);
    for (std::size_t i = 0; i < metrics.size(); ++i) {
      const double v = metrics[i].kind == MetricKind::Ndcg ? ndcg_at_k(ranked, judged, metrics[i].k).value()
                                                           : precision_at_k(ranked, judged, metrics[i].k);
      out[i].value += v;
      ++out[i].queries_counted;
    }
  }
  for (auto& r : out)
    if (r.queries_counted > 0) r.value /= static_cast<double>(r.queries_counted);
  return out;
}

double pairwise_accuracy(const Scorer& scorer, const Dataset& dataset)
{
  std::size_t correct = 0, total = 0;
  for (std::size_t qi = 0; qi < dataset.num_queries(); ++qi) {
    const auto pool = candidate_pool(dataset, qi, false);
    const auto s = score_all(scorer, dataset, qi, pool);
    const auto rel = dataset.relevance(qi);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (rel[i] <= 0) continue;
      for (std::size_t j = 0; j < pool.size(); ++j) {
        if (rel[j] > 0) continue;
        ++total;
        if (s[i] > s[j]) ++correct;
      }
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

void write_eval_csv(std::ostream& out, const std::vector<std::pair<std::string, std::vector<MetricResult>>>& reports)
{
  out << "model,metric,value,queries_counted,queries_skipped\n";
  for (const auto& [model, results] : reports)
    for (const auto& r : results)
      out << fmt::format("{},{},{},{},{}\n", model, r.metric, r.value, r.queries_counted, r.queries_skipped);
}

}  // namespace ranklab
