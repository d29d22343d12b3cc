// rank-lab: config-driven runner for the trainers, evaluators and the
// variance lab. Exit codes: 0 ok, 1 config error, 2 data error, 3 NaN.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "config.hpp"
#include "ranklab/errors.hpp"
#include "ranklab/experiment.hpp"
#include "ranklab/pgvar.hpp"

namespace fs = std::filesystem;
using namespace ranklab;
using namespace ranklab::cli;

namespace {

enum Exit { kOk = 0, kConfig = 1, kData = 2, kNumeric = 3 };

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
}

template <typename F>
void write_with(const fs::path& path, F&& f)
{
  std::ostringstream os;
  f(os);
  write_file(path, os.str());
}

fs::path prepare_run_dir(const std::string& root, const RunConfig& cfg, const std::string& config_path)
{
  const fs::path dir = fs::path(root) / cfg.name;
  std::error_code ec;
  fs::create_directories(dir / "checkpoints", ec);
  if (ec) throw DataError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  std::ifstream in(config_path, std::ios::binary);
  std::ostringstream copy;
  copy << in.rdbuf();
  write_file(dir / "config.copy", copy.str());
  return dir;
}

Splits data_or_throw(const RunConfig& cfg)
{
  try {
    return load_data(cfg.dataset, cfg.experiment.train.seed);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
}

void cmd_pretrain(const RunConfig& cfg, const fs::path& dir)
{
  const auto data = data_or_throw(cfg);
  const auto& e = cfg.experiment;
  const auto dims = dims_of(data.train);
  SoftmaxPolicy G{Scorer(e.scorer, dims, init_params(e.scorer, dims, e.init_scale, derive_seed(e.train.seed, 21))),
                  e.train.temperature};
  const auto record = pretrain_mle(G, data.train, e.train);
  save_checkpoint(G.scorer, (dir / "checkpoints" / "generator.ckpt").string());
  write_with(dir / "curves.csv", [&](std::ostream& os) { record.write_csv(os); });
  write_with(dir / "results.csv", [&](std::ostream& os) {
    write_eval_csv(os, {{"generator", evaluate_model(G.scorer, data.eval, e.metrics)}});
  });
}

void cmd_train(const RunConfig& cfg, const fs::path& dir)
{
  const auto data = data_or_throw(cfg);
  const auto result = run_experiment(cfg.experiment, data.train, data.eval);
  for (const auto& m : result.models) save_checkpoint(m.scorer, (dir / "checkpoints" / (m.name + ".ckpt")).string());
  if (!result.chosen.empty()) write_file(dir / "chosen", result.chosen + "\n");
  write_with(dir / "curves.csv", [&](std::ostream& os) { result.record.write_csv(os); });
  write_with(dir / "results.csv", [&](std::ostream& os) { write_eval_csv(os, result.final_eval); });
}

void cmd_compare(const RunConfig& cfg, const fs::path& dir)
{
  ComparisonConfig cc;
  cc.entries = cfg.compare.entries;
  cc.data = cfg.dataset.synthetic;
  cc.seeds = cfg.compare.seeds;
  cc.budget = cfg.compare.budget;
  cc.parity_overrides = cfg.compare.parity_overrides;
  cc.parallel = cfg.compare.parallel;
  const auto result = run_comparison(cc);
  for (const auto& w : result.warnings)
    std::cerr << fmt::format("warning: budget parity overridden for {} ({} discriminator epochs, budget {})\n",
                             w.model, w.epochs, cc.budget);
  write_with(dir / "results.csv", [&](std::ostream& os) { write_comparison_csv(os, result); });
  write_with(dir / "per_seed.csv", [&](std::ostream& os) { write_per_seed_csv(os, result); });
}

void cmd_variance(const RunConfig& cfg, const fs::path& dir)
{
  const auto& v = cfg.variance;
  std::vector<StudyRow> rows;
  std::ostringstream chain, sweep;
  chain << "fraction,b,exact_variance,term_a1,term_a2,q_max,bound_rhs,p_a1,a2_empty,term_a1_holds,variance_holds,"
           "pointwise_checked,pointwise_failures\n";
  sweep << "fraction,b,bound_rhs,above_q_max\n";
  const auto opt = [](const std::optional<double>& x) { return x ? fmt::format("{}", *x) : std::string(); };

  for (std::size_t i = 0; i < v.fractions.size(); ++i) {
    const auto inst = study_instance(v.fractions[i], v.study, v.seed);
    Rng rng(derive_seed(v.seed, 100 + i));
    rows.push_back(measure_study_instance(inst, v.study, rng));

    const auto& mdp = inst.built.instance;
    const auto& pol = inst.built.policy;
    const auto r = verify_bound_chain(mdp, pol, v.study.b);
    chain << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", inst.fraction, r.b, r.exact_variance, r.term_a1,
                         r.term_a2, opt(r.q_max), opt(r.bound_rhs), r.p_a1, int(r.a2_empty), int(r.term_a1_holds),
                         int(r.variance_holds), r.pointwise_checked, r.pointwise_failures);
    for (const auto& s : bound_sweep(mdp, pol, v.study.b, v.sweep))
      sweep << fmt::format("{},{},{},{}\n", inst.fraction, s.b, s.bound_rhs, int(s.above_q_max));
  }
  write_with(dir / "study.csv", [&](std::ostream& os) { write_study_csv(os, rows); });
  write_file(dir / "bound_chain.csv", chain.str());
  write_file(dir / "bound_sweep.csv", sweep.str());
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Train and compare adversarial and contrastive ranking models; run the variance lab."};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_root;
  std::optional<std::uint64_t> seed;
  std::map<std::string, Command> commands{{"pretrain", Command::Pretrain},
                                          {"train", Command::Train},
                                          {"compare", Command::Compare},
                                          {"variance", Command::Variance}};
  const std::map<std::string, std::string> help{{"pretrain", "MLE-pretrain a generator"},
                                                {"train", "run one trainer with per-epoch evaluation"},
                                                {"compare", "compare trainers under a matched budget"},
                                                {"variance", "sparsity study and bound checks"}};
  for (const auto& [name, cmd] : commands) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", config_path, "INI configuration file")->required();
    sub->add_option("--out", out_root, "output root (default $RANK_LAB_OUT or ./out)");
    sub->add_option("--seed", seed, "overrides the configured seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  const Command command = commands.at(name);
  if (out_root.empty()) {
    const char* env = std::getenv("RANK_LAB_OUT");
    out_root = env && *env ? env : "out";
  }

  try {
    const auto cfg = load_config(config_path, command, seed);
    const auto dir = prepare_run_dir(out_root, cfg, config_path);
    switch (command) {
      case Command::Pretrain: cmd_pretrain(cfg, dir); break;
      case Command::Train: cmd_train(cfg, dir); break;
      case Command::Compare: cmd_compare(cfg, dir); break;
      case Command::Variance: cmd_variance(cfg, dir); break;
    }
    std::cout << dir.string() << "\n";
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
}
