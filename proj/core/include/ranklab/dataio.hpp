#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ranklab/dataset.hpp"

namespace ranklab {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line)
  {
  }
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// LETOR: `<rel> qid:<q> 1:<v> 2:<v> ... # <comment>`, features 1-indexed
// and contiguous. The document id is the `docid = X` value or the first
// comment token; otherwise `q<q>_line<n>`.
Dataset parse_letor(std::istream& in);
Dataset parse_letor(const std::string& path);
void write_letor(const Dataset& dataset, std::ostream& out);

/// Per-query min-max scaling of every feature column to [0, 1].
/// Constant columns map to 0.
Dataset normalize_per_query(const Dataset& dataset);

/// Tab-separated `user item rating [timestamp]`. Ratings at or above the
/// threshold become relevance 1; every user's pool is the full item set.
Dataset parse_interactions(std::istream& in, double threshold = 4.0);
Dataset parse_interactions(const std::string& path, double threshold = 4.0);

/// Token vocabulary with reserved unknown id 0. Integer tokens are valid
/// when in [1, size); string tokens are looked up by name.
class Vocabulary {
 public:
  static constexpr int kUnknown = 0;

  explicit Vocabulary(std::size_t size = 1) : size_(std::max<std::size_t>(size, 1)) {}

  int add(std::string token);
  int map_id(long long id) const;
  int map_token(std::string_view token) const;
  std::size_t size() const noexcept { return size_; }

 private:
  std::size_t size_;
  std::map<std::string, int, std::less<>> names_;
};

struct QaParseResult {
  Dataset dataset;
  std::size_t unknown_tokens = 0;
};

/// JSON lines: {"question": [...], "candidates": [[...], ...], "correct": [i, ...]}
/// with an optional "id".
QaParseResult parse_qa_pairs(std::istream& in, const Vocabulary& vocab);
QaParseResult parse_qa_pairs(const std::string& path, const Vocabulary& vocab);

/// Planted linear relevance model.
struct SyntheticSpec {
  std::size_t num_queries = 50;
  std::size_t pool_size = 200;
  double relevant_fraction = 0.005;
  std::size_t feature_dim = 46;
  double noise_sigma = 0.0;
  std::uint64_t seed = 40;
  /// Extra queries drawn from the same planted model into a held-out set.
  std::size_t holdout_queries = 0;
};

struct SyntheticData {
  Dataset dataset;
  Dataset holdout;  ///< empty when spec.holdout_queries == 0
  std::vector<double> truth;  ///< hidden unit-norm weight vector
};

/// ceil(fraction * pool_size), robust to the rounding of fraction.
std::size_t relevant_per_query(const SyntheticSpec& spec);

SyntheticData synth_retrieval(const SyntheticSpec& spec);

}  // namespace ranklab
