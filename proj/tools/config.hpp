#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ranklab/dataio.hpp"
#include "ranklab/experiment.hpp"
#include "ranklab/pgvar.hpp"

namespace ranklab::cli {

/// section -> key -> raw value. Keys outside a section live under "".
using IniSections = std::map<std::string, std::map<std::string, std::string>>;

/// Parses INI text; throws ConfigError on syntax errors.
IniSections parse_ini(const std::string& path);

struct DatasetConfig {
  DatasetKind kind = DatasetKind::Synthetic;
  std::string path;
  SyntheticSpec synthetic{.holdout_queries = 50};
  double threshold = 4.0;         ///< recommendation
  std::size_t vocab_size = 0;     ///< qa; 0 sizes the vocabulary from the data
  bool normalize = false;         ///< web-search
  double test_fraction = 0.2;     ///< real data
  std::optional<std::uint64_t> seed;  ///< defaults to the trainer seed
};

struct CompareConfig {
  std::vector<ExperimentConfig> entries;
  std::vector<std::uint64_t> seeds;
  std::size_t budget = 300;
  std::vector<Regime> parity_overrides;
  bool parallel = false;
};

struct VarianceConfig {
  std::vector<double> fractions{0.002, 0.005, 0.015};
  StudyConfig study;
  std::vector<double> sweep{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::uint64_t seed = 40;
};

struct RunConfig {
  std::string name = "run";
  DatasetConfig dataset;
  ExperimentConfig experiment;  ///< train and pretrain
  CompareConfig compare;
  VarianceConfig variance;
};

enum class Command { Pretrain, Train, Compare, Variance };

/// Reads and validates everything `command` needs. `seed` overrides the
/// configured seed(s). Unknown sections or keys are errors.
RunConfig load_config(const std::string& path, Command command, std::optional<std::uint64_t> seed);

struct Splits {
  Dataset train;
  Dataset eval;
};

/// Loads or generates the data and splits off the evaluation set.
Splits load_data(const DatasetConfig& cfg, std::uint64_t seed);

}  // namespace ranklab::cli
