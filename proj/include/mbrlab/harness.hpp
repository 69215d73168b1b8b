#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mbrlab/dpo.hpp"
#include "mbrlab/mbr.hpp"
#include "mbrlab/mle.hpp"
#include "mbrlab/prefs.hpp"
#include "mbrlab/tasks.hpp"

namespace mbrlab {

// Full experiment description; every random choice flows from a named seed.
struct ExperimentConfig {
  TaskSpec task;
  ModelConfig model;     // vocab_size filled from the generated corpus
  MleConfig mle;
  SamplingConfig sampling;  // |H| and temperature for preference building
  UtilityId utility = UtilityId::kChrf;
  Strategy strategy = Strategy::kCP;
  int stride = 2;  // used when strategy == CPS
  bool equality_filter = true;
  DpoConfig dpo;  // dpo.epochs == 0 skips fine-tuning (dpo model := base)
  std::size_t beam_width = 4;
  bool length_normalize = false;
  std::uint64_t model_seed = 1;
  std::uint64_t eval_seed = 1234;  // MBR-eval sampling on the test split
  std::string out_dir = "out";
};

ExperimentConfig default_experiment_config();
ExperimentConfig load_experiment_config(const std::string& path);
void save_experiment_config(const std::string& path, const ExperimentConfig& cfg);
std::string experiment_config_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const std::string& text);

struct EvalRow {
  std::string system;
  double chrf = 0.0;
  double sentence_bleu = 0.0;
  double exact_match = 0.0;
  double repetition_rate = 0.0;
};

struct ExperimentReport {
  std::vector<EvalRow> rows;  // base-beam, base-mbr@|H|, dpo-beam
};

struct BetaSweepReport {
  EvalRow base;  // shared base-beam reference row
  std::vector<std::pair<double, EvalRow>> rows;
};

struct StrategyGridReport {
  struct Cell {
    std::string strategy;
    std::size_t set_size = 0;
    double chrf = 0.0;
    std::size_t triplets_per_source_max = 0;  // before equality filtering
  };
  std::vector<Cell> cells;
};

enum class Stage {
  kGenData,
  kTrainBase,
  kSample,
  kRank,
  kMakePrefs,
  kDpoTrain,
  kEvaluate,
};

std::string stage_name(Stage s);

// Runs gen-data .. evaluate, serializing every intermediate under
// cfg.out_dir. With resume=true, stages whose artifacts already exist are
// loaded instead of recomputed. Throws with a stage-tagged message on
// failure.
ExperimentReport run_pipeline(const ExperimentConfig& cfg, bool resume = false,
                              Stage up_to = Stage::kEvaluate);

// One DPO run per beta, sharing the base model and preference data.
BetaSweepReport run_beta_sweep(const ExperimentConfig& cfg, const std::vector<double>& betas);

// dpo-beam chrF per (strategy, |H|) cell; sampling artifacts shared per |H|.
struct StrategyChoice {
  Strategy strategy;
  int stride = 1;
};
StrategyGridReport run_strategy_grid(const ExperimentConfig& cfg,
                                     const std::vector<StrategyChoice>& strategies,
                                     const std::vector<std::size_t>& set_sizes);

// Fraction of sequences containing any token 4-gram at least twice.
double repetition_rate(const std::vector<std::vector<int>>& hypotheses);

}  // namespace mbrlab
