#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "ranklab/dataio.hpp"
#include "ranklab/dataset.hpp"
#include "ranklab/metrics.hpp"
#include "ranklab/run_record.hpp"
#include "ranklab/scorers.hpp"
#include "ranklab/trainers.hpp"

namespace ranklab {

enum class Regime { IrganPointwise, IrganPairwise, SingleD, DualD, Dns };

std::string_view to_string(Regime regime);
/// "irgan-pointwise", "irgan-pairwise", "single-d", "dual-d" or "dns".
Regime parse_regime(std::string_view name);

struct ExperimentConfig {
  Regime regime = Regime::SingleD;
  ScorerSpec scorer{ScorerKind::Mlp1, 46};
  double init_scale = 0.1;
  TrainConfig train;
  /// MLE pretraining of the IRGAN generator; ignored by other regimes.
  std::size_t pretrain_epochs = 50;
  double pretrain_learning_rate = 0.01;
  std::vector<MetricSpec> metrics{{MetricKind::Precision, 5}, {MetricKind::Ndcg, 5}};
};

/// Hyperparameters from the tuned tables for a dataset kind and regime.
/// Synthetic data uses the web-search values.
ExperimentConfig default_experiment(DatasetKind kind, Regime regime);

struct NamedModel {
  std::string name;
  Scorer scorer;
};

struct ExperimentResult {
  /// Training measurements plus one evaluation row per epoch and metric.
  /// Evaluation before training is recorded at epoch 0 under `<tag>.init`.
  RunRecord record;
  std::vector<NamedModel> models;
  /// Final evaluation per reported model; the first entry is the model
  /// the regime is judged by (the generator for IRGAN, the chosen
  /// discriminator for Dual-D).
  std::vector<std::pair<std::string, std::vector<MetricResult>>> final_eval;
  std::vector<MetricResult> initial_eval;
  /// Dual-D only: "A" or "B".
  std::string chosen;
};

/// Trains on `train` and evaluates on `eval` after every epoch. A regime's
/// epoch count is cfg.train.epochs_outer; a Dual-D outer epoch runs
/// 2 * epochs_inner discriminator epochs.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& train, const Dataset& eval);

/// Discriminator epochs one run of the regime performs.
std::size_t discriminator_epochs(const ExperimentConfig& cfg);

struct ComparisonConfig {
  std::vector<ExperimentConfig> entries;
  SyntheticSpec data;  ///< regenerated per seed; needs holdout_queries > 0
  std::vector<std::uint64_t> seeds;
  /// Discriminator-epoch budget every regime is matched to.
  std::size_t budget = 300;
  /// Regimes whose epoch count is kept as configured instead of matched.
  std::vector<Regime> parity_overrides;
  bool parallel = false;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  /// model name -> metric name -> value
  std::map<std::string, std::map<std::string, double>> values;
};

struct ParityWarning {
  std::string model;
  std::size_t epochs = 0;  ///< discriminator epochs actually spent
};

struct ComparisonResult {
  std::vector<SeedOutcome> per_seed;
  std::vector<ParityWarning> warnings;
  /// model, metric, mean over seeds
  std::vector<std::tuple<std::string, std::string, double>> table;
};

/// Epoch counts that spend `budget` discriminator epochs.
ExperimentConfig matched_budget(ExperimentConfig cfg, std::size_t budget);

ComparisonResult run_comparison(const ComparisonConfig& cfg);

/// Header `model,metric,value`. Each parity warning becomes a row
/// `warning,budget-parity:<model>,<epochs spent>`.
void write_comparison_csv(std::ostream& out, const ComparisonResult& result);
/// Header `seed,model,metric,value`.
void write_per_seed_csv(std::ostream& out, const ComparisonResult& result);

}  // namespace ranklab
