#include "mbrlab/mle.hpp"

#include <cmath>
#include <stdexcept>

#include "mbrlab/rng.hpp"

namespace mbrlab {

Value mle_loss_value(Graph& g, const BoundModel& m,
                     const std::vector<const SentencePair*>& batch) {
  if (batch.empty()) throw std::invalid_argument("mle_loss_value: empty batch");
  Value total;
  bool first = true;
  std::size_t positions = 0;
  for (const SentencePair* pair : batch) {
    if (pair->source.empty() || pair->target.empty()) {
      throw std::invalid_argument("mle_loss_value: empty sentence");
    }
    Value lp = sequence_logprob_value(g, m, pair->source, pair->target);
    total = first ? lp : g.add(total, lp);
    first = false;
    positions += pair->target.size() + 1;  // y tokens plus EOS
  }
  return g.scale(total, -1.0 / static_cast<double>(positions));
}

double mle_loss(const ModelParams& params, const Vocab& vocab,
                const std::vector<SentencePair>& batch) {
  if (params.config.vocab_size != vocab.size()) {
    throw std::invalid_argument("mle_loss: vocab size mismatch");
  }
  Graph g;
  BoundModel m = bind_model(g, params, /*requires_grad=*/false);
  std::vector<const SentencePair*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& p : batch) ptrs.push_back(&p);
  return mle_loss_value(g, m, ptrs).item();
}

MleResult train_mle(const ModelParams& init, const Vocab& vocab,
                    const std::vector<SentencePair>& corpus, const MleConfig& cfg) {
  if (corpus.empty()) throw std::invalid_argument("train_mle: empty corpus");
  if (cfg.batch_size == 0 || cfg.epochs == 0) {
    throw std::invalid_argument("train_mle: batch_size and epochs must be positive");
  }
  if (init.config.vocab_size != vocab.size()) {
    throw std::invalid_argument("train_mle: vocab size mismatch");
  }

  MleResult result;
  result.params = init;

  std::size_t steps_per_epoch = (corpus.size() + cfg.batch_size - 1) / cfg.batch_size;
  std::size_t total_steps = steps_per_epoch * cfg.epochs;
  if (cfg.max_steps > 0 && cfg.max_steps < total_steps) total_steps = cfg.max_steps;
  std::size_t warmup = cfg.warmup_steps > 0 ? cfg.warmup_steps
                                            : std::max<std::size_t>(1, total_steps / 20);

  RmsProp opt(RmsPropConfig{cfg.lr, 0.99, 1e-8});
  Rng shuffle_rng(Rng::mix(cfg.seed, 0x51e5));

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::size_t step = 0;
  bool done = false;
  for (std::size_t epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_sum = 0.0;
    std::size_t epoch_steps = 0;
    for (std::size_t start = 0; start < corpus.size() && !done; start += cfg.batch_size) {
      std::vector<const SentencePair*> batch;
      for (std::size_t i = start; i < std::min(corpus.size(), start + cfg.batch_size); ++i) {
        batch.push_back(&corpus[order[i]]);
      }
      Graph g;
      BoundModel m = bind_model(g, result.params, /*requires_grad=*/true);
      Value loss = mle_loss_value(g, m, batch);
      double loss_v = loss.item();
      if (!std::isfinite(loss_v)) {
        throw std::runtime_error("train_mle: non-finite loss at step " + std::to_string(step));
      }
      g.backward(loss);

      auto named = result.params.named_tensors();
      std::vector<Tensor*> ps;
      std::vector<Tensor> gs;
      ps.reserve(named.size());
      gs.reserve(named.size());
      for (std::size_t i = 0; i < named.size(); ++i) {
        ps.push_back(named[i].second);
        gs.push_back(m.named[i].second.grad());
      }
      opt.step(ps, gs, warmup_scale(step, warmup));

      result.step_losses.push_back(loss_v);
      epoch_sum += loss_v;
      ++epoch_steps;
      ++step;
      if (step >= total_steps) done = true;
    }
    if (epoch_steps > 0) {
      result.epoch_mean_nll.push_back(epoch_sum / static_cast<double>(epoch_steps));
    }
  }
  return result;
}

}  // namespace mbrlab
