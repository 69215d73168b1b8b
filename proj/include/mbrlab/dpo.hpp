#pragma once

#include <cstdint>
#include <vector>

#include "mbrlab/model.hpp"
#include "mbrlab/prefs.hpp"

namespace mbrlab {

struct DpoConfig {
  double beta = 0.7;
  double lr = 1e-4;
  std::size_t warmup_steps = 0;  // 0: auto, 5% of total steps
  std::size_t epochs = 1;
  std::size_t batch_size = 4;
  std::uint64_t seed = 0;  // dataset shuffling
  std::vector<double> checkpoint_fractions = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t moving_average_window = 20;
  // Neither gradient clipping nor weight decay is applied by default.
  double grad_clip = 0.0;    // 0: off
  double weight_decay = 0.0;

  void validate() const;
};

// Per-step margins during fine-tuning plus held-out margin distributions at
// the checkpoint fractions.
struct MarginTrace {
  std::vector<double> raw;             // batch-mean reward margin per step
  std::vector<double> moving_average;  // trailing mean, same length as raw
  struct HeldoutSnapshot {
    double fraction = 0.0;
    std::vector<double> margins;  // one per held-out pair, in dataset order
  };
  std::vector<HeldoutSnapshot> heldout;
};

struct DpoResult {
  ModelParams params;
  MarginTrace trace;
};

// Trailing mean over min(window, position+1) elements.
std::vector<double> moving_average(const std::vector<double>& series, std::size_t window);

// Eq.-style reward margin: beta * ((log pi_theta(yw|x) - log pi_ref(yw|x)) -
// (log pi_theta(yl|x) - log pi_ref(yl|x))). Exactly zero when theta == ref.
double reward_margin(const ModelParams& theta, const ModelParams& ref, const Vocab& vocab,
                     const PreferenceTriplet& triplet, double beta);

// Mean over the batch of -log sigma(margin).
double dpo_loss(const ModelParams& theta, const ModelParams& ref, const Vocab& vocab,
                const std::vector<PreferenceTriplet>& batch, double beta);

// Graph version used by training; ref log-probs are passed as constants.
// Also reports the batch margins (values, not graph nodes).
Value dpo_loss_value(Graph& g, const BoundModel& theta, const std::vector<PreferenceTriplet>& batch,
                     const std::vector<std::pair<double, double>>& ref_logprobs, double beta,
                     std::vector<double>* margins_out = nullptr);

// One-epoch (configurable) DPO fine-tune with RMSProp and linear warmup.
// The base model is the frozen reference and the starting point of theta.
// heldout may be empty; when present, all its pair margins are recorded at
// each checkpoint fraction.
DpoResult dpo_finetune(const ModelParams& base, const Vocab& vocab,
                       const std::vector<PreferenceTriplet>& triplets, const DpoConfig& cfg,
                       const std::vector<PreferenceTriplet>& heldout = {});

}  // namespace mbrlab
