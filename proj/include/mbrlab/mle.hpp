#pragma once

#include <cstdint>
#include <vector>

#include "mbrlab/model.hpp"
#include "mbrlab/optimizer.hpp"

namespace mbrlab {

struct MleConfig {
  std::size_t epochs = 6;
  std::size_t batch_size = 4;
  double lr = 1e-3;
  std::size_t warmup_steps = 0;  // 0: auto, 5% of total steps
  std::size_t max_steps = 0;     // 0: no cap
  std::uint64_t seed = 0;
};

struct MleResult {
  ModelParams params;
  std::vector<double> step_losses;     // token-mean NLL per step
  std::vector<double> epoch_mean_nll;  // mean of step losses per epoch
};

// Token-level NLL (mean over y+EOS positions) for one batch; shared graph.
Value mle_loss_value(Graph& g, const BoundModel& m, const std::vector<const SentencePair*>& batch);

double mle_loss(const ModelParams& params, const Vocab& vocab,
                const std::vector<SentencePair>& batch);

MleResult train_mle(const ModelParams& init, const Vocab& vocab,
                    const std::vector<SentencePair>& corpus, const MleConfig& cfg);

}  // namespace mbrlab
