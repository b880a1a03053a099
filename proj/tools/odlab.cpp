// odlab CLI: train / sweep / corrupt / analyze.

#include <string>
#include <vector>

#include <CLI11.hpp>

#include "odlab/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"output-decay training laboratory"};
  app.require_subcommand(1);

  std::string train_config;
  CLI::App* train = app.add_subcommand("train", "run one training experiment");
  train->add_option("config", train_config, "experiment config (JSON)")
      ->required();

  std::string sweep_config, sweep_param;
  std::vector<double> sweep_values;
  CLI::App* sweep =
      app.add_subcommand("sweep", "train once per value of c or beta");
  sweep->add_option("config", sweep_config, "base config (JSON)")->required();
  sweep->add_option("--param", sweep_param, "hyper-parameter to sweep: c|beta")
      ->required();
  sweep
      ->add_option("--values", sweep_values,
                   "comma-separated list of values")
      ->required()
      ->delimiter(',');

  odlab::CorruptOptions copt;
  CLI::App* corrupt =
      app.add_subcommand("corrupt", "apply label noise to an IDX label file");
  corrupt->add_option("--kind", copt.kind, "symmetric|pair")->required();
  corrupt->add_option("--rate", copt.rate, "noise rate in [0,1]")->required();
  corrupt->add_option("--seed", copt.seed, "corruption seed");
  corrupt->add_option("--in", copt.in_path, "input IDX label file")
      ->required();
  corrupt->add_option("--out", copt.out_dir, "output directory")->required();
  corrupt->add_option("--classes", copt.n_classes,
                      "class count (default: max label + 1)");

  odlab::AnalyzeOptions aopt;
  CLI::App* analyze =
      app.add_subcommand("analyze", "aggregate run logs / fit a regression");
  analyze->add_option("runlogs", aopt.runlogs, "runlog.csv files")->required();
  analyze->add_option("--regress", aopt.regress,
                      "fit y on x over the given columns, e.g. epoch:test_acc");
  analyze->add_option("--out", aopt.out_path,
                      "output JSON path (default analysis.json)");

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) return odlab::cmd_train(train_config);
  if (sweep->parsed()) {
    return odlab::cmd_sweep(sweep_config, sweep_param, sweep_values);
  }
  if (corrupt->parsed()) return odlab::cmd_corrupt(copt);
  if (analyze->parsed()) return odlab::cmd_analyze(aopt);
  return 1;
}
