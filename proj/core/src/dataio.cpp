#include "ranklab/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ranklab/numeric.hpp"

namespace ranklab {

namespace {

std::ifstream open_input(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

std::string_view trim(std::string_view s)
{
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s)
{
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const auto start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out)
{
  if constexpr (std::is_floating_point_v<T>) {
    // from_chars for double is available in libstdc++ 11
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
  } else {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
  }
}

std::string doc_id_from_comment(std::string_view comment)
{
  comment = trim(comment);
  if (comment.empty()) return {};
  const auto key = comment.find("docid");
  if (key != std::string_view::npos) {
    auto rest = comment.substr(key + 5);
    rest = trim(rest);
    if (!rest.empty() && rest.front() == '=') rest.remove_prefix(1);
    const auto toks = split_ws(rest);
    if (!toks.empty()) return std::string(toks.front());
  }
  return std::string(split_ws(comment).front());
}

}  // namespace

Dataset parse_letor(std::istream& in)
{
  std::map<std::string, PoolRecord> pools;
  std::vector<Judgment> judgments;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body = line;
    std::string_view comment;
    if (auto hash = body.find('#'); hash != std::string_view::npos) {
      comment = body.substr(hash + 1);
      body = body.substr(0, hash);
    }
    const auto toks = split_ws(body);
    if (toks.empty()) continue;
    if (toks.size() < 2) throw ParseError(line_no, "expected '<rel> qid:<q> ...'");
    int rel = 0;
    if (!parse_number(toks[0], rel) || rel < 0) throw ParseError(line_no, "bad relevance '" + std::string(toks[0]) + "'");
    if (toks[1].substr(0, 4) != "qid:" || toks[1].size() == 4) throw ParseError(line_no, "missing qid");
    const std::string qid(toks[1].substr(4));

    Document doc;
    for (std::size_t i = 2; i < toks.size(); ++i) {
      const auto colon = toks[i].find(':');
      std::size_t index = 0;
      double value = 0.0;
      if (colon == std::string_view::npos || !parse_number(toks[i].substr(0, colon), index) ||
          !parse_number(toks[i].substr(colon + 1), value))
        throw ParseError(line_no, "malformed feature '" + std::string(toks[i]) + "'");
      if (index != doc.features.size() + 1)
        throw ParseError(line_no, "feature index " + std::to_string(index) + " is not contiguous");
      doc.features.push_back(value);
    }
    doc.id = doc_id_from_comment(comment);
    if (doc.id.empty()) doc.id = fmt::format("q{}_line{}", qid, line_no);

    auto& pool = pools[qid];
    pool.query = QueryId{qid};
    judgments.push_back(Judgment{pool.query, doc.id, rel});
    pool.docs.push_back(std::move(doc));
  }
  DatasetRecords records{DatasetKind::WebSearch, {}, std::move(judgments)};
  for (auto& [id, pool] : pools) records.pools.push_back(std::move(pool));
  return build_dataset(std::move(records));
}

Dataset parse_letor(const std::string& path)
{
  auto in = open_input(path);
  return parse_letor(in);
}

void write_letor(const Dataset& dataset, std::ostream& out)
{
  for (std::size_t qi = 0; qi < dataset.num_queries(); ++qi) {
    const auto pool = dataset.pool(qi);
    const auto rel = dataset.relevance(qi);
    for (std::size_t p = 0; p < pool.size(); ++p) {
      out << rel[p] << " qid:" << dataset.query(qi).value;
      for (std::size_t f = 0; f < pool[p].features.size(); ++f) out << fmt::format(" {}:{}", f + 1, pool[p].features[f]);
      out << " # " << pool[p].id << '\n';
    }
  }
}

Dataset normalize_per_query(const Dataset& dataset)
{
  auto records = dataset.records();
  for (auto& pool : records.pools) {
    const std::size_t dim = pool.docs.front().features.size();
    for (std::size_t f = 0; f < dim; ++f) {
      double lo = pool.docs.front().features[f], hi = lo;
      for (const auto& d : pool.docs) {
        lo = std::min(lo, d.features[f]);
        hi = std::max(hi, d.features[f]);
      }
      for (auto& d : pool.docs) d.features[f] = hi > lo ? (d.features[f] - lo) / (hi - lo) : 0.0;
    }
  }
  return build_dataset(std::move(records));
}

Dataset parse_interactions(std::istream& in, double threshold)
{
  std::map<std::string, std::vector<std::pair<std::string, double>>> ratings;
  std::set<std::string> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() < 3) throw ParseError(line_no, "expected 'user item rating'");
    long long user = 0, item = 0;
    double rating = 0.0;
    if (!parse_number(toks[0], user) || !parse_number(toks[1], item) || !parse_number(toks[2], rating))
      throw ParseError(line_no, "non-numeric field");
    ratings[std::string(toks[0])].emplace_back(std::string(toks[1]), rating);
    items.insert(std::string(toks[1]));
  }
  DatasetRecords records{DatasetKind::Recommendation, {}, {}};
  std::vector<Document> catalog;
  catalog.reserve(items.size());
  for (const auto& id : items) catalog.push_back(Document{id, {}, {}});
  for (auto& [user, rated] : ratings) {
    QueryId q{user};
    records.pools.push_back(PoolRecord{q, {}, catalog});
    for (auto& [item, rating] : rated) records.judgments.push_back(Judgment{q, item, rating >= threshold ? 1 : 0});
  }
  return build_dataset(std::move(records));
}

Dataset parse_interactions(const std::string& path, double threshold)
{
  auto in = open_input(path);
  return parse_interactions(in, threshold);
}

int Vocabulary::add(std::string token)
{
  auto [it, inserted] = names_.emplace(std::move(token), static_cast<int>(size_));
  if (inserted) ++size_;
  return it->second;
}

int Vocabulary::map_id(long long id) const
{
  return id >= 1 && static_cast<std::size_t>(id) < size_ ? static_cast<int>(id) : kUnknown;
}

int Vocabulary::map_token(std::string_view token) const
{
  auto it = names_.find(token);
  return it == names_.end() ? kUnknown : it->second;
}

QaParseResult parse_qa_pairs(std::istream& in, const Vocabulary& vocab)
{
  using nlohmann::json;
  std::size_t unknown = 0;
  auto tokens_of = [&](const json& arr, std::size_t line_no) {
    if (!arr.is_array()) throw ParseError(line_no, "token list must be an array");
    std::vector<int> out;
    out.reserve(arr.size());
    for (const auto& t : arr) {
      int id = Vocabulary::kUnknown;
      if (t.is_number_integer()) id = vocab.map_id(t.get<long long>());
      else if (t.is_string()) id = vocab.map_token(t.get<std::string>());
      else throw ParseError(line_no, "token must be an integer id or a string");
      if (id == Vocabulary::kUnknown) ++unknown;
      out.push_back(id);
    }
    return out;
  };

  DatasetRecords records{DatasetKind::Qa, {}, {}};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!rec.is_object() || !rec.contains("question") || !rec.contains("candidates") || !rec.contains("correct"))
      throw ParseError(line_no, "record needs 'question', 'candidates' and 'correct'");
    QueryId q{rec.contains("id") ? rec["id"].get<std::string>() : fmt::format("q{:07}", line_no)};
    PoolRecord pool{q, tokens_of(rec["question"], line_no), {}};
    const auto& cands = rec["candidates"];
    if (!cands.is_array()) throw ParseError(line_no, "'candidates' must be an array");
    std::set<std::size_t> correct;
    for (const auto& c : rec["correct"]) {
      if (!c.is_number_integer() || c.get<long long>() < 0 || c.get<std::size_t>() >= cands.size())
        throw ParseError(line_no, "correct index out of range");
      correct.insert(c.get<std::size_t>());
    }
    for (std::size_t j = 0; j < cands.size(); ++j) {
      auto id = fmt::format("{}_a{:04}", q.value, j);
      pool.docs.push_back(Document{id, {}, tokens_of(cands[j], line_no)});
      records.judgments.push_back(Judgment{q, id, correct.count(j) ? 1 : 0});
    }
    records.pools.push_back(std::move(pool));
  }
  return QaParseResult{build_dataset(std::move(records)), unknown};
}

QaParseResult parse_qa_pairs(const std::string& path, const Vocabulary& vocab)
{
  auto in = open_input(path);
  return parse_qa_pairs(in, vocab);
}

std::size_t relevant_per_query(const SyntheticSpec& spec)
{
  return static_cast<std::size_t>(std::ceil(spec.relevant_fraction * static_cast<double>(spec.pool_size) - 1e-9));
}

SyntheticData synth_retrieval(const SyntheticSpec& spec)
{
  if (spec.num_queries < 1 || spec.pool_size < 1 || spec.feature_dim < 1)
    throw std::invalid_argument("synthetic spec needs positive query count, pool size and feature dim");
  if (!(spec.relevant_fraction > 0.0 && spec.relevant_fraction <= 1.0))
    throw std::invalid_argument("relevant_fraction must lie in (0, 1]");
  if (!(spec.noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be non-negative");
  const std::size_t n_rel = relevant_per_query(spec);
  if (n_rel < 1) throw std::invalid_argument("relevant_fraction * pool_size must round up to at least 1");

  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SyntheticData out;
  out.truth.resize(spec.feature_dim);
  for (auto& v : out.truth) v = normal(rng);
  const double norm = std::sqrt(squared_norm(out.truth));
  for (auto& v : out.truth) v /= norm;

  auto make_query = [&](const std::string& qid, DatasetRecords& records) {
    PoolRecord pool{QueryId{qid}, {}, {}};
    std::vector<double> utility;
    for (std::size_t d = 0; d < spec.pool_size; ++d) {
      Document doc{fmt::format("{}_d{:04}", qid, d), std::vector<double>(spec.feature_dim), {}};
      for (auto& x : doc.features) x = normal(rng);
      double u = dot(out.truth, doc.features);
      if (spec.noise_sigma > 0.0) u += spec.noise_sigma * normal(rng);
      utility.push_back(u);
      pool.docs.push_back(std::move(doc));
    }
    std::vector<std::size_t> order(spec.pool_size);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_rel), order.end(),
                      [&](std::size_t a, std::size_t b) { return utility[a] > utility[b]; });
    std::vector<int> rel(spec.pool_size, 0);
    for (std::size_t i = 0; i < n_rel; ++i) rel[order[i]] = 1;
    for (std::size_t d = 0; d < spec.pool_size; ++d)
      records.judgments.push_back(Judgment{pool.query, pool.docs[d].id, rel[d]});
    records.pools.push_back(std::move(pool));
  };

  DatasetRecords train{DatasetKind::Synthetic, {}, {}};
  for (std::size_t q = 0; q < spec.num_queries; ++q) make_query(fmt::format("q{:05}", q), train);
  out.dataset = build_dataset(std::move(train));
  if (spec.holdout_queries > 0) {
    DatasetRecords test{DatasetKind::Synthetic, {}, {}};
    for (std::size_t q = 0; q < spec.holdout_queries; ++q) make_query(fmt::format("h{:05}", q), test);
    out.holdout = build_dataset(std::move(test));
  }
  return out;
}

}  // namespace ranklab
