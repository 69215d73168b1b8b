// mbrlab: staged MBR + DPO experiment pipeline.
//
//   mbrlab init-config cfg.json        write the default config
//   mbrlab gen-data    -c cfg.json     run a single stage (earlier stages are
//   ...                                reused from out_dir when present)
//   mbrlab pipeline    -c cfg.json     run everything and print the report
//   mbrlab report      -c cfg.json     print the report for an existing run
//   mbrlab sweep-beta  -c cfg.json --beta 0.1 --beta 0.7
//   mbrlab grid-strategy -c cfg.json --strategy BW,BMW --set-size 4,8

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mbrlab/harness.hpp"
#include "mbrlab/records.hpp"

namespace {

using namespace mbrlab;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;  // optional override
  bool fresh = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("-c,--config", opts.config_path, "experiment config (json)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", opts.out_dir, "override the config's output directory");
  cmd->add_flag("--fresh", opts.fresh, "recompute stages even if artifacts exist");
}

ExperimentConfig load_cfg(const CommonOpts& opts) {
  ExperimentConfig cfg = load_experiment_config(opts.config_path);
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  return cfg;
}

void print_rows(const std::vector<EvalRow>& rows) {
  std::printf("%-20s  %9s  %9s  %9s  %9s\n", "system", "chrf", "s-bleu", "exact", "rep");
  for (const auto& r : rows) {
    std::printf("%-20s  %9.6f  %9.6f  %9.6f  %9.6f\n", r.system.c_str(), r.chrf, r.sentence_bleu,
                r.exact_match, r.repetition_rate);
  }
}

Strategy strategy_parse(const std::string& name, int& stride) {
  if (name.rfind("CPS", 0) == 0 && name.size() > 3) {
    stride = std::stoi(name.substr(3));
    return Strategy::kCPS;
  }
  return strategy_from_name(name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MBR-ranked preference fine-tuning pipeline"};
  app.require_subcommand(1);

  std::string init_path;
  CLI::App* init = app.add_subcommand("init-config", "write the default config to a file");
  init->add_option("path", init_path, "destination")->required();

  struct StageCmd {
    const char* name;
    Stage stage;
  };
  const StageCmd stage_cmds[] = {
      {"gen-data", Stage::kGenData},     {"train-base", Stage::kTrainBase},
      {"sample", Stage::kSample},        {"rank", Stage::kRank},
      {"make-prefs", Stage::kMakePrefs}, {"dpo-train", Stage::kDpoTrain},
      {"evaluate", Stage::kEvaluate},
  };
  CommonOpts stage_opts[std::size(stage_cmds)];
  for (std::size_t i = 0; i < std::size(stage_cmds); ++i) {
    CLI::App* cmd = app.add_subcommand(stage_cmds[i].name, "run the pipeline up to this stage");
    add_common(cmd, stage_opts[i]);
  }

  CommonOpts pipeline_opts;
  CLI::App* pipeline = app.add_subcommand("pipeline", "run all stages and print the report");
  add_common(pipeline, pipeline_opts);

  CommonOpts report_opts;
  CLI::App* report = app.add_subcommand("report", "print the report of a finished run");
  add_common(report, report_opts);

  CommonOpts sweep_opts;
  std::vector<double> betas{0.1, 0.3, 0.5, 0.7};
  CLI::App* sweep = app.add_subcommand("sweep-beta", "DPO runs over a list of betas");
  add_common(sweep, sweep_opts);
  sweep->add_option("--beta", betas, "beta values")->delimiter(',');

  CommonOpts grid_opts;
  std::vector<std::string> strategy_names{"BW", "BMW", "CP", "CPS2"};
  std::vector<std::size_t> set_sizes{8};
  CLI::App* grid = app.add_subcommand("grid-strategy", "strategy x |H| grid of DPO runs");
  add_common(grid, grid_opts);
  grid->add_option("--strategy", strategy_names, "strategies (BW, BMW, CP, CPS<stride>)")
      ->delimiter(',');
  grid->add_option("--set-size", set_sizes, "hypothesis set sizes")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (init->parsed()) {
      save_experiment_config(init_path, default_experiment_config());
      std::cout << "wrote " << init_path << "\n";
      return 0;
    }
    for (std::size_t i = 0; i < std::size(stage_cmds); ++i) {
      if (!app.get_subcommand(stage_cmds[i].name)->parsed()) continue;
      ExperimentConfig cfg = load_cfg(stage_opts[i]);
      ExperimentReport rep = run_pipeline(cfg, !stage_opts[i].fresh, stage_cmds[i].stage);
      if (stage_cmds[i].stage == Stage::kEvaluate) print_rows(rep.rows);
      return 0;
    }
    if (pipeline->parsed()) {
      ExperimentConfig cfg = load_cfg(pipeline_opts);
      ExperimentReport rep = run_pipeline(cfg, !pipeline_opts.fresh);
      print_rows(rep.rows);
      return 0;
    }
    if (report->parsed()) {
      ExperimentConfig cfg = load_cfg(report_opts);
      std::cout << read_text_file(cfg.out_dir + "/report.txt");
      return 0;
    }
    if (sweep->parsed()) {
      ExperimentConfig cfg = load_cfg(sweep_opts);
      BetaSweepReport rep = run_beta_sweep(cfg, betas);
      std::vector<EvalRow> rows{rep.base};
      for (const auto& [beta, row] : rep.rows) rows.push_back(row);
      print_rows(rows);
      return 0;
    }
    if (grid->parsed()) {
      ExperimentConfig cfg = load_cfg(grid_opts);
      std::vector<StrategyChoice> strategies;
      for (const auto& name : strategy_names) {
        StrategyChoice sc;
        sc.stride = cfg.stride;
        sc.strategy = strategy_parse(name, sc.stride);
        strategies.push_back(sc);
      }
      StrategyGridReport rep = run_strategy_grid(cfg, strategies, set_sizes);
      std::printf("%-10s  %9s  %9s  %s\n", "strategy", "|H|", "chrf", "triplets/src");
      for (const auto& c : rep.cells) {
        std::printf("%-10s  %9zu  %9.6f  %zu\n", c.strategy.c_str(), c.set_size, c.chrf,
                    c.triplets_per_source_max);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
