#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "ranklab/errors.hpp"

namespace ranklab::cli {

IniSections parse_ini(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError("config", fmt::format("cannot open '{}'", path));
  std::ostringstream text;
  text << in.rdbuf();
  boost::property_tree::ptree tree;
  try {
    std::istringstream parse(text.str());
    boost::property_tree::ini_parser::read_ini(parse, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config", fmt::format("line {}: {}", e.line(), e.message()));
  }
  IniSections out;
  // read_ini drops sections without keys; keep their names so they are
  // still checked.
  std::istringstream lines(text.str());
  for (std::string line; std::getline(lines, line);) {
    const auto b = line.find_first_not_of(" \t");
    const auto e = line.find(']');
    if (b == std::string::npos || line[b] != '[' || e == std::string::npos || e < b) continue;
    const auto name = line.substr(b + 1, e - b - 1);
    const auto nb = name.find_first_not_of(" \t");
    if (nb != std::string::npos) out[name.substr(nb, name.find_last_not_of(" \t") - nb + 1)];
  }
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      out[""][name] = node.data();
      continue;
    }
    auto& section = out[name];
    for (const auto& [key, value] : node) section[key] = value.data();
  }
  return out;
}

namespace {

std::string trim(std::string s)
{
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text)
{
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    auto item = trim(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// Reads keys of one section and remembers which ones were used.
class Section {
 public:
  Section(std::string name, const std::map<std::string, std::string>* values) : name_(std::move(name)), values_(values) {}

  bool has(const std::string& key) const { return values_ && values_->count(key); }

  std::optional<std::string> raw(const std::string& key)
  {
    if (!has(key)) return std::nullopt;
    used_.insert(key);
    return trim(values_->at(key));
  }

  std::string qualified(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  template <typename T>
  void read(const std::string& key, T& target)
  {
    if (auto v = raw(key)) target = convert<T>(key, *v);
  }

  template <typename T>
  T convert(const std::string& key, const std::string& v) const
  {
    if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
      if (v == "false" || v == "0" || v == "no" || v == "off") return false;
      throw ConfigError(qualified(key), fmt::format("expected a boolean, got '{}'", v));
    } else if constexpr (std::is_floating_point_v<T>) {
      try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size() && std::isfinite(d)) return d;
      } catch (const std::exception&) {
      }
      throw ConfigError(qualified(key), fmt::format("expected a number, got '{}'", v));
    } else {
      T out{};
      const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError(qualified(key), fmt::format("expected a non-negative integer, got '{}'", v));
      return out;
    }
  }

  void finish() const
  {
    if (!values_) return;
    for (const auto& [key, value] : *values_)
      if (!used_.count(key)) throw ConfigError(qualified(key), "unknown key");
  }

 private:
  std::string name_;
  const std::map<std::string, std::string>* values_;
  std::set<std::string> used_;
};

Section section(const IniSections& ini, const std::string& name)
{
  const auto it = ini.find(name);
  return Section(name, it == ini.end() ? nullptr : &it->second);
}

template <typename F>
auto wrap(const std::string& key, F&& f)
{
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

void read_dataset(Section s, DatasetConfig& d)
{
  if (auto v = s.raw("kind")) d.kind = wrap(s.qualified("kind"), [&] { return parse_dataset_kind(*v); });
  s.read("path", d.path);
  s.read("threshold", d.threshold);
  s.read("vocab_size", d.vocab_size);
  s.read("normalize", d.normalize);
  s.read("test_fraction", d.test_fraction);
  if (auto v = s.raw("seed")) d.seed = s.convert<std::uint64_t>("seed", *v);
  auto& sp = d.synthetic;
  s.read("num_queries", sp.num_queries);
  s.read("pool_size", sp.pool_size);
  s.read("relevant_fraction", sp.relevant_fraction);
  s.read("feature_dim", sp.feature_dim);
  s.read("noise_sigma", sp.noise_sigma);
  s.read("holdout_queries", sp.holdout_queries);
  s.finish();

  if (d.kind != DatasetKind::Synthetic && d.path.empty()) throw ConfigError("dataset.path", "required for real data");
  if (d.kind == DatasetKind::Synthetic) {
    if (sp.num_queries < 1) throw ConfigError("dataset.num_queries", "must be at least 1");
    if (sp.pool_size < 1) throw ConfigError("dataset.pool_size", "must be at least 1");
    if (sp.feature_dim < 1) throw ConfigError("dataset.feature_dim", "must be at least 1");
    if (!(sp.relevant_fraction > 0.0 && sp.relevant_fraction <= 1.0))
      throw ConfigError("dataset.relevant_fraction", "must lie in (0, 1]");
    if (!(sp.noise_sigma >= 0.0)) throw ConfigError("dataset.noise_sigma", "must be non-negative");
    if (sp.holdout_queries < 1) throw ConfigError("dataset.holdout_queries", "evaluation needs held-out queries");
  } else if (!(d.test_fraction > 0.0 && d.test_fraction < 1.0)) {
    throw ConfigError("dataset.test_fraction", "must lie in (0, 1)");
  }
}

void read_model(Section s, ExperimentConfig& e)
{
  if (auto v = s.raw("scorer")) e.scorer.kind = wrap(s.qualified("scorer"), [&] { return parse_scorer_kind(*v); });
  s.read("width", e.scorer.width);
  s.read("init_scale", e.init_scale);
  s.finish();
  if (e.scorer.kind != ScorerKind::Linear && e.scorer.width < 1) throw ConfigError("model.width", "must be at least 1");
  if (!(e.init_scale > 0.0)) throw ConfigError("model.init_scale", "must be positive");
}

// Shared by [trainer] and [trainer:<name>]; `name` and compare keys are
// handled by the caller.
void read_trainer_keys(Section& s, ExperimentConfig& e)
{
  auto& t = e.train;
  s.read("learning_rate", t.learning_rate);
  s.read("batch_size", t.batch_size);
  s.read("epochs_outer", t.epochs_outer);
  s.read("epochs_inner", t.epochs_inner);
  s.read("K", t.K);
  s.read("dns_k", t.dns_k);
  if (auto v = s.raw("baseline")) t.baseline = wrap(s.qualified("baseline"), [&] { return parse_baseline(*v); });
  if (auto v = s.raw("reward")) t.reward = wrap(s.qualified("reward"), [&] { return parse_reward(*v); });
  s.read("seed", t.seed);
  s.read("temperature", t.temperature);
  s.read("d_steps", t.d_steps);
  s.read("g_steps", t.g_steps);
  s.read("exclude_positives", t.exclude_positives);
  s.read("with_replacement", t.with_replacement);
  s.read("pretrain_epochs", e.pretrain_epochs);
  s.read("pretrain_learning_rate", e.pretrain_learning_rate);
}

void validate_experiment(const ExperimentConfig& e, const std::string& prefix)
{
  try {
    e.train.validate();
  } catch (const ConfigError& err) {
    throw ConfigError(prefix + "." + err.key(), std::string(err.what()).substr(err.key().size() + 2));
  }
  if (e.train.learning_rate <= 0.0) throw ConfigError(prefix + ".learning_rate", "must be positive");
  if (!(e.pretrain_learning_rate > 0.0)) throw ConfigError(prefix + ".pretrain_learning_rate", "must be positive");
}

std::vector<std::uint64_t> parse_seeds(const std::string& key, const std::string& text)
{
  std::vector<std::uint64_t> seeds;
  const Section conv(key, nullptr);
  for (const auto& item : split_list(text)) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      seeds.push_back(conv.convert<std::uint64_t>("", item));
      continue;
    }
    const auto lo = conv.convert<std::uint64_t>("", trim(item.substr(0, dash)));
    const auto hi = conv.convert<std::uint64_t>("", trim(item.substr(dash + 1)));
    if (hi < lo) throw ConfigError(key, fmt::format("empty range '{}'", item));
    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw ConfigError(key, "at least one seed is required");
  return seeds;
}

std::vector<double> parse_doubles(const std::string& key, const std::string& text)
{
  std::vector<double> out;
  const Section conv(key, nullptr);
  for (const auto& item : split_list(text)) out.push_back(conv.convert<double>("", item));
  if (out.empty()) throw ConfigError(key, "list is empty");
  return out;
}

}  // namespace

RunConfig load_config(const std::string& path, Command command, std::optional<std::uint64_t> seed)
{
  const auto ini = parse_ini(path);
  static const std::set<std::string> known{"", "run", "dataset", "model", "trainer", "compare", "eval", "variance"};
  for (const auto& [name, keys] : ini)
    if (!known.count(name) && name.rfind("trainer:", 0) != 0) throw ConfigError(name, "unknown section");

  RunConfig cfg;
  {
    auto s = section(ini, "");
    s.finish();
    auto run = section(ini, "run");
    run.read("name", cfg.name);
    run.finish();
    if (cfg.name.empty() || cfg.name.find_first_of("/\\") != std::string::npos || cfg.name == "." || cfg.name == "..")
      throw ConfigError("run.name", "must be a plain directory name");
  }

  read_dataset(section(ini, "dataset"), cfg.dataset);

  // Trainer name decides the tuned defaults the explicit keys override.
  auto trainer = section(ini, "trainer");
  Regime regime = Regime::SingleD;
  if (auto v = trainer.raw("name")) regime = wrap("trainer.name", [&] { return parse_regime(*v); });
  else if (command == Command::Train) throw ConfigError("trainer.name", "required by the train command");

  const auto base = [&](Regime r) {
    auto e = default_experiment(cfg.dataset.kind, r);
    read_model(section(ini, "model"), e);
    auto t = section(ini, "trainer");
    t.raw("name");
    read_trainer_keys(t, e);
    if (seed) e.train.seed = *seed;
    auto ev = section(ini, "eval");
    if (auto m = ev.raw("metrics")) e.metrics = wrap("eval.metrics", [&] { return parse_metric_list(*m); });
    ev.finish();
    return e;
  };

  read_trainer_keys(trainer, cfg.experiment);
  trainer.finish();
  const bool needs_training = command != Command::Variance;
  if (needs_training && !trainer.has("learning_rate")) throw ConfigError("trainer.learning_rate", "missing required key");
  cfg.experiment = base(regime);
  validate_experiment(cfg.experiment, "trainer");

  // [trainer:<name>] sections must name real trainers.
  std::map<Regime, const std::map<std::string, std::string>*> overrides;
  for (const auto& [name, keys] : ini) {
    if (name.rfind("trainer:", 0) != 0) continue;
    const auto r = wrap(name, [&] { return parse_regime(name.substr(8)); });
    overrides[r] = &keys;
  }

  auto cmp = section(ini, "compare");
  std::vector<Regime> regimes;
  if (auto v = cmp.raw("trainers"))
    for (const auto& item : split_list(*v)) regimes.push_back(wrap("compare.trainers", [&] { return parse_regime(item); }));
  cfg.compare.seeds = {cfg.experiment.train.seed};
  if (auto v = cmp.raw("seeds")) cfg.compare.seeds = parse_seeds("compare.seeds", *v);
  if (seed) cfg.compare.seeds = {*seed};
  cmp.read("budget", cfg.compare.budget);
  cmp.read("parallel", cfg.compare.parallel);
  if (auto v = cmp.raw("parity_override"))
    for (const auto& item : split_list(*v))
      cfg.compare.parity_overrides.push_back(wrap("compare.parity_override", [&] { return parse_regime(item); }));
  cmp.finish();

  for (auto r : regimes) {
    auto e = base(r);
    if (const auto it = overrides.find(r); it != overrides.end()) {
      Section s(fmt::format("trainer:{}", to_string(r)), it->second);
      read_trainer_keys(s, e);
      s.finish();
      if (seed) e.train.seed = *seed;
    }
    validate_experiment(e, fmt::format("trainer:{}", to_string(r)));
    cfg.compare.entries.push_back(e);
  }
  for (const auto& [r, keys] : overrides) {
    if (std::find(regimes.begin(), regimes.end(), r) == regimes.end()) {
      Section s(fmt::format("trainer:{}", to_string(r)), keys);
      ExperimentConfig scratch;
      read_trainer_keys(s, scratch);
      s.finish();
    }
  }
  if (command == Command::Compare) {
    if (regimes.size() < 2) throw ConfigError("compare.trainers", "list at least two trainers");
    if (cfg.dataset.kind != DatasetKind::Synthetic)
      throw ConfigError("dataset.kind", "compare regenerates synthetic data per seed");
    if (cfg.compare.budget < 1) throw ConfigError("compare.budget", "must be at least 1");
  }

  auto var = section(ini, "variance");
  auto& v = cfg.variance;
  if (auto x = var.raw("fractions")) v.fractions = parse_doubles("variance.fractions", *x);
  if (auto x = var.raw("sweep")) v.sweep = parse_doubles("variance.sweep", *x);
  var.read("b", v.study.b);
  var.read("mc_samples", v.study.mc_samples);
  var.read("num_queries", v.study.num_queries);
  var.read("pool_size", v.study.pool_size);
  var.read("feature_dim", v.study.feature_dim);
  var.read("noise_sigma", v.study.noise_sigma);
  var.read("d_epochs", v.study.d_epochs);
  var.read("d_learning_rate", v.study.d_learning_rate);
  var.read("batch_size", v.study.batch_size);
  var.read("K", v.study.K);
  var.read("init_scale", v.study.init_scale);
  var.read("seed", v.seed);
  var.finish();
  if (seed) v.seed = *seed;
  for (double f : v.fractions)
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("variance.fractions", fmt::format("{} outside (0, 1]", f));
  if (v.study.mc_samples < 2) throw ConfigError("variance.mc_samples", "must be at least 2");
  if (v.study.num_queries < 1 || v.study.pool_size < 1 || v.study.feature_dim < 1)
    throw ConfigError("variance", "sizes must be at least 1");
  if (v.study.batch_size < 1) throw ConfigError("variance.batch_size", "must be at least 1");
  if (v.study.K < 1) throw ConfigError("variance.K", "must be at least 1");
  if (!(v.study.init_scale > 0.0)) throw ConfigError("variance.init_scale", "must be positive");

  return cfg;
}

Splits load_data(const DatasetConfig& cfg, std::uint64_t seed)
{
  const auto data_seed = cfg.seed.value_or(seed);
  switch (cfg.kind) {
    case DatasetKind::Synthetic: {
      auto spec = cfg.synthetic;
      spec.seed = data_seed;
      auto data = synth_retrieval(spec);
      return {std::move(data.dataset), std::move(data.holdout)};
    }
    case DatasetKind::WebSearch: {
      auto ds = parse_letor(cfg.path);
      if (cfg.normalize) ds = normalize_per_query(ds);
      auto split = split_queries(ds, cfg.test_fraction, data_seed);
      return {std::move(split.train), std::move(split.test)};
    }
    case DatasetKind::Recommendation: {
      auto split = split_judgments(parse_interactions(cfg.path, cfg.threshold), cfg.test_fraction, data_seed);
      return {std::move(split.train), std::move(split.test)};
    }
    case DatasetKind::Qa: {
      std::size_t size = cfg.vocab_size;
      if (size == 0) {
        // Size the vocabulary to the largest id in the file.
        Vocabulary open(std::numeric_limits<int>::max());
        const auto probe = parse_qa_pairs(cfg.path, open);
        size = probe.dataset.token_bound();
      }
      auto parsed = parse_qa_pairs(cfg.path, Vocabulary(size));
      auto split = split_queries(parsed.dataset, cfg.test_fraction, data_seed);
      return {std::move(split.train), std::move(split.test)};
    }
  }
  throw ConfigError("dataset.kind", "unsupported");
}

}  // namespace ranklab::cli
