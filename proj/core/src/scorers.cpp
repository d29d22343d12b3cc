#include "ranklab/scorers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "ranklab/numeric.hpp"

namespace ranklab {

namespace {

const Segment& find_segment(const std::vector<Segment>& layout, std::string_view name)
{
  for (const auto& s : layout)
    if (s.name == name) return s;
  throw std::out_of_range("no parameter segment named '" + std::string(name) + "'");
}

}  // namespace

std::span<double> ParamVector::segment(std::string_view name)
{
  const auto& s = find_segment(layout, name);
  return std::span<double>(values).subspan(s.offset, s.length);
}

std::span<const double> ParamVector::segment(std::string_view name) const
{
  const auto& s = find_segment(layout, name);
  return std::span<const double>(values).subspan(s.offset, s.length);
}

std::uint64_t ParamVector::checksum() const noexcept
{
  std::uint64_t h = 1469598103934665603ULL;
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

std::string_view to_string(ScorerKind kind)
{
  switch (kind) {
    case ScorerKind::Linear: return "linear";
    case ScorerKind::Mlp1: return "mlp1";
    case ScorerKind::MatFac: return "matfac";
    case ScorerKind::TextAvgEmbed: return "text-avg-embed";
  }
  return "linear";
}

ScorerKind parse_scorer_kind(std::string_view name)
{
  if (name == "linear") return ScorerKind::Linear;
  if (name == "mlp1") return ScorerKind::Mlp1;
  if (name == "matfac") return ScorerKind::MatFac;
  if (name == "text-avg-embed") return ScorerKind::TextAvgEmbed;
  throw std::invalid_argument("unknown scorer kind '" + std::string(name) + "'");
}

ScorerDims dims_of(const Dataset& dataset)
{
  return ScorerDims{dataset.feature_dim(), dataset.num_index_queries(), dataset.num_items(),
                    dataset.token_bound()};
}

ParamVector zero_params(const ScorerSpec& spec, const ScorerDims& dims)
{
  ParamVector p;
  auto add = [&p](std::string name, std::size_t len) {
    p.layout.push_back(Segment{std::move(name), p.values.size(), len});
    p.values.resize(p.values.size() + len, 0.0);
  };
  const std::size_t w = spec.width;
  switch (spec.kind) {
    case ScorerKind::Linear:
      if (dims.features == 0) throw std::invalid_argument("linear scorer needs a feature dimension");
      add("weight", dims.features);
      add("bias", 1);
      break;
    case ScorerKind::Mlp1:
      if (dims.features == 0 || w == 0) throw std::invalid_argument("mlp1 scorer needs features and hidden width");
      add("hidden.weight", w * dims.features);
      add("hidden.bias", w);
      add("output.weight", w);
      add("output.bias", 1);
      break;
    case ScorerKind::MatFac:
      if (dims.queries == 0 || dims.items == 0 || w == 0)
        throw std::invalid_argument("matfac scorer needs query/item counts and embedding width");
      add("query.embedding", dims.queries * w);
      add("item.embedding", dims.items * w);
      add("item.bias", dims.items);
      break;
    case ScorerKind::TextAvgEmbed:
      if (dims.vocab == 0 || w == 0) throw std::invalid_argument("text scorer needs a vocabulary and embedding width");
      add("token.embedding", dims.vocab * w);
      add("bilinear", w * w);
      break;
  }
  return p;
}

ParamVector init_params(const ScorerSpec& spec, const ScorerDims& dims, double scale, std::uint64_t seed,
                        bool zero_init)
{
  auto p = zero_params(spec, dims);
  if (zero_init) return p;
  if (!(scale > 0.0)) throw std::invalid_argument("init scale must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& v : p.values) v = u(rng);
  return p;
}

Scorer::Scorer(ScorerSpec spec, ScorerDims dims, ParamVector params)
    : spec_(spec), dims_(dims), params_(std::move(params))
{
  const auto expected = zero_params(spec_, dims_);
  if (expected.layout != params_.layout || expected.size() != params_.size())
    throw std::invalid_argument("parameter layout does not match scorer architecture");
}

void Scorer::check(const Example& ex) const
{
  switch (spec_.kind) {
    case ScorerKind::Linear:
    case ScorerKind::Mlp1:
      if (ex.features.size() != dims_.features)
        throw RepresentationError("scorer expects " + std::to_string(dims_.features) + " features, got " +
                                  std::to_string(ex.features.size()));
      break;
    case ScorerKind::MatFac:
      if (ex.query_index >= dims_.queries || ex.item_index >= dims_.items)
        throw RepresentationError("query or item index outside the factorization tables");
      break;
    case ScorerKind::TextAvgEmbed:
      if (ex.doc_tokens.empty()) throw RepresentationError("text scorer needs document tokens");
      for (auto toks : {ex.query_tokens, ex.doc_tokens})
        for (int t : toks)
          if (t < 0 || static_cast<std::size_t>(t) >= dims_.vocab)
            throw RepresentationError("token id " + std::to_string(t) + " outside vocabulary");
      break;
  }
}

namespace {

std::vector<double> mean_embedding(std::span<const double> table, std::size_t width, std::span<const int> tokens)
{
  std::vector<double> m(width, 0.0);
  if (tokens.empty()) return m;
  for (int t : tokens) axpy(1.0, table.subspan(static_cast<std::size_t>(t) * width, width), m);
  for (auto& v : m) v /= static_cast<double>(tokens.size());
  return m;
}

}  // namespace

double Scorer::score(const Example& ex) const
{
  check(ex);
  const std::size_t w = spec_.width;
  const auto& v = params_.values;
  switch (spec_.kind) {
    case ScorerKind::Linear: {
      const std::size_t d = dims_.features;
      return dot(std::span<const double>(v).first(d), ex.features) + v[d];
    }
    case ScorerKind::Mlp1: {
      const std::size_t d = dims_.features;
      const double* W1 = v.data();
      const double* b1 = W1 + w * d;
      const double* w2 = b1 + w;
      double f = w2[w];
      for (std::size_t k = 0; k < w; ++k) {
        const double a = dot(std::span<const double>(W1 + k * d, d), ex.features) + b1[k];
        f += w2[k] * std::tanh(a);
      }
      return f;
    }
    case ScorerKind::MatFac: {
      const double* U = v.data();
      const double* V = U + dims_.queries * w;
      const double* bias = V + dims_.items * w;
      return dot(std::span<const double>(U + ex.query_index * w, w), std::span<const double>(V + ex.item_index * w, w)) +
             bias[ex.item_index];
    }
    case ScorerKind::TextAvgEmbed: {
      const auto table = params_.segment("token.embedding");
      const auto M = params_.segment("bilinear");
      const auto qbar = mean_embedding(table, w, ex.query_tokens);
      const auto dbar = mean_embedding(table, w, ex.doc_tokens);
      double f = 0.0;
      for (std::size_t i = 0; i < w; ++i) f += qbar[i] * dot(M.subspan(i * w, w), dbar);
      return f;
    }
  }
  return 0.0;
}

void Scorer::accumulate_gradient(const Example& ex, double scale, std::span<double> out) const
{
  check(ex);
  if (out.size() != params_.size()) throw std::invalid_argument("gradient buffer has the wrong size");
  const std::size_t w = spec_.width;
  const auto& v = params_.values;
  switch (spec_.kind) {
    case ScorerKind::Linear: {
      const std::size_t d = dims_.features;
      axpy(scale, ex.features, out.first(d));
      out[d] += scale;
      return;
    }
    case ScorerKind::Mlp1: {
      const std::size_t d = dims_.features;
      const double* W1 = v.data();
      const double* b1 = W1 + w * d;
      const double* w2 = b1 + w;
      double* gW1 = out.data();
      double* gb1 = gW1 + w * d;
      double* gw2 = gb1 + w;
      gw2[w] += scale;
      for (std::size_t k = 0; k < w; ++k) {
        const double h = std::tanh(dot(std::span<const double>(W1 + k * d, d), ex.features) + b1[k]);
        gw2[k] += scale * h;
        const double delta = scale * w2[k] * (1.0 - h * h);
        gb1[k] += delta;
        axpy(delta, ex.features, std::span<double>(gW1 + k * d, d));
      }
      return;
    }
    case ScorerKind::MatFac: {
      const std::size_t ioff = dims_.queries * w;
      const std::size_t boff = ioff + dims_.items * w;
      const std::span<const double> u(v.data() + ex.query_index * w, w);
      const std::span<const double> item(v.data() + ioff + ex.item_index * w, w);
      axpy(scale, item, out.subspan(ex.query_index * w, w));
      axpy(scale, u, out.subspan(ioff + ex.item_index * w, w));
      out[boff + ex.item_index] += scale;
      return;
    }
    case ScorerKind::TextAvgEmbed: {
      const auto table = params_.segment("token.embedding");
      const auto M = params_.segment("bilinear");
      const auto qbar = mean_embedding(table, w, ex.query_tokens);
      const auto dbar = mean_embedding(table, w, ex.doc_tokens);
      const std::size_t moff = dims_.vocab * w;
      for (std::size_t i = 0; i < w; ++i)
        for (std::size_t j = 0; j < w; ++j) out[moff + i * w + j] += scale * qbar[i] * dbar[j];
      // d f / d qbar = M dbar, d f / d dbar = M^T qbar
      std::vector<double> m_dbar(w, 0.0), mt_qbar(w, 0.0);
      for (std::size_t i = 0; i < w; ++i)
        for (std::size_t j = 0; j < w; ++j) {
          m_dbar[i] += M[i * w + j] * dbar[j];
          mt_qbar[j] += M[i * w + j] * qbar[i];
        }
      if (!ex.query_tokens.empty()) {
        const double s = scale / static_cast<double>(ex.query_tokens.size());
        for (int t : ex.query_tokens) axpy(s, m_dbar, out.subspan(static_cast<std::size_t>(t) * w, w));
      }
      const double s = scale / static_cast<double>(ex.doc_tokens.size());
      for (int t : ex.doc_tokens) axpy(s, mt_qbar, out.subspan(static_cast<std::size_t>(t) * w, w));
      return;
    }
  }
}

std::vector<double> Scorer::gradient(const Example& ex) const
{
  std::vector<double> g(params_.size(), 0.0);
  accumulate_gradient(ex, 1.0, g);
  return g;
}

std::vector<double> score_gradient(const Scorer& s, const Dataset& ds, std::size_t qi, std::size_t pos)
{
  return s.gradient(ds.example(qi, pos));
}

std::vector<double> score_all(const Scorer& s, const Dataset& ds, std::size_t qi,
                              std::span<const std::size_t> positions)
{
  std::vector<double> out;
  out.reserve(positions.size());
  for (auto pos : positions) out.push_back(s.score(ds.example(qi, pos)));
  return out;
}

namespace {

template <typename T>
void put(std::ostream& out, T value)
{
  static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in)
{
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("truncated checkpoint");
  return value;
}

}  // namespace

void save_checkpoint(const Scorer& scorer, std::ostream& out)
{
  put<std::uint8_t>(out, kCheckpointVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(scorer.spec().kind));
  put<std::uint64_t>(out, scorer.spec().width);
  const auto& d = scorer.dims();
  for (auto n : {d.features, d.queries, d.items, d.vocab}) put<std::uint64_t>(out, n);
  const auto& p = scorer.params();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.layout.size()));
  for (const auto& s : p.layout) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.name.size()));
    out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
    put<std::uint64_t>(out, s.offset);
    put<std::uint64_t>(out, s.length);
  }
  put<std::uint64_t>(out, p.values.size());
  for (double v : p.values) put<double>(out, v);
}

Scorer load_checkpoint(std::istream& in)
{
  const auto version = get<std::uint8_t>(in);
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  const auto kind = get<std::uint8_t>(in);
  if (kind > static_cast<std::uint8_t>(ScorerKind::TextAvgEmbed)) throw std::runtime_error("bad scorer kind in checkpoint");
  ScorerSpec spec{static_cast<ScorerKind>(kind), static_cast<std::size_t>(get<std::uint64_t>(in))};
  ScorerDims dims;
  dims.features = get<std::uint64_t>(in);
  dims.queries = get<std::uint64_t>(in);
  dims.items = get<std::uint64_t>(in);
  dims.vocab = get<std::uint64_t>(in);
  ParamVector p;
  const auto n_seg = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_seg; ++i) {
    Segment s;
    s.name.resize(get<std::uint32_t>(in));
    in.read(s.name.data(), static_cast<std::streamsize>(s.name.size()));
    s.offset = get<std::uint64_t>(in);
    s.length = get<std::uint64_t>(in);
    p.layout.push_back(std::move(s));
  }
  p.values.resize(get<std::uint64_t>(in));
  for (auto& v : p.values) v = get<double>(in);
  return Scorer(spec, dims, std::move(p));
}

void save_checkpoint(const Scorer& scorer, const std::string& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  save_checkpoint(scorer, out);
}

Scorer load_checkpoint(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint '" + path + "'");
  return load_checkpoint(in);
}

}  // namespace ranklab
