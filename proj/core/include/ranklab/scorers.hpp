#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ranklab/dataset.hpp"
#include "ranklab/numeric.hpp"

namespace ranklab {

/// Named slice of a flat parameter vector.
struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;

  bool operator==(const Segment&) const = default;
};

/// Flat parameter storage with a named layout.
struct ParamVector {
  std::vector<double> values;
  std::vector<Segment> layout;

  std::size_t size() const noexcept { return values.size(); }
  std::span<double> segment(std::string_view name);
  std::span<const double> segment(std::string_view name) const;
  /// FNV-1a over the raw bytes; used to assert a model was left untouched.
  std::uint64_t checksum() const noexcept;

  bool operator==(const ParamVector&) const = default;
};

enum class ScorerKind { Linear, Mlp1, MatFac, TextAvgEmbed };

std::string_view to_string(ScorerKind kind);
ScorerKind parse_scorer_kind(std::string_view name);

/// Architecture choice. `width` is the hidden size for mlp1 and the
/// embedding size for matfac and text-avg-embed; unused for linear.
struct ScorerSpec {
  ScorerKind kind = ScorerKind::Linear;
  std::size_t width = 0;

  bool operator==(const ScorerSpec&) const = default;
};

/// Input-space sizes a scorer is laid out against.
struct ScorerDims {
  std::size_t features = 0;
  std::size_t queries = 0;
  std::size_t items = 0;
  std::size_t vocab = 0;

  bool operator==(const ScorerDims&) const = default;
};

ScorerDims dims_of(const Dataset& dataset);

class RepresentationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Layout for the given architecture, with all values zero.
ParamVector zero_params(const ScorerSpec& spec, const ScorerDims& dims);

/// i.i.d. uniform entries in [-scale, scale] from a stream seeded by `seed`.
/// `zero_init` returns the zero vector and skips the scale check.
ParamVector init_params(const ScorerSpec& spec, const ScorerDims& dims, double scale, std::uint64_t seed,
                        bool zero_init = false);

/// Scoring function f(d, q) with exact analytic gradients.
class Scorer {
 public:
  Scorer() = default;
  Scorer(ScorerSpec spec, ScorerDims dims, ParamVector params);

  const ScorerSpec& spec() const noexcept { return spec_; }
  const ScorerDims& dims() const noexcept { return dims_; }
  const ParamVector& params() const noexcept { return params_; }
  ParamVector& params() noexcept { return params_; }
  std::size_t num_params() const noexcept { return params_.size(); }

  double score(const Example& ex) const;

  /// out += scale * df/dparams
  void accumulate_gradient(const Example& ex, double scale, std::span<double> out) const;

  std::vector<double> gradient(const Example& ex) const;

  bool operator==(const Scorer&) const = default;

 private:
  void check(const Example& ex) const;

  ScorerSpec spec_;
  ScorerDims dims_;
  ParamVector params_;
};

inline double score(const Scorer& s, const Dataset& ds, std::size_t qi, std::size_t pos)
{
  return s.score(ds.example(qi, pos));
}

std::vector<double> score_gradient(const Scorer& s, const Dataset& ds, std::size_t qi, std::size_t pos);

/// Scores for a list of pool positions.
std::vector<double> score_all(const Scorer& s, const Dataset& ds, std::size_t qi,
                              std::span<const std::size_t> positions);

/// D(d|q) = sigmoid(f(d, q)).
inline double discriminator_prob(const Scorer& s, const Dataset& ds, std::size_t qi, std::size_t pos)
{
  return sigmoid(score(s, ds, qi, pos));
}

/// Probability that pool position `i` ranks above `j`.
inline double pairwise_prob(const Scorer& s, const Dataset& ds, std::size_t qi, std::size_t i, std::size_t j)
{
  return sigmoid(score(s, ds, qi, i) - score(s, ds, qi, j));
}

// Checkpoints: a version byte, the architecture, the layout header and the
// little-endian values.
inline constexpr std::uint8_t kCheckpointVersion = 1;

void save_checkpoint(const Scorer& scorer, std::ostream& out);
Scorer load_checkpoint(std::istream& in);
void save_checkpoint(const Scorer& scorer, const std::string& path);
Scorer load_checkpoint(const std::string& path);

}  // namespace ranklab
