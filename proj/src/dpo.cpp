#include "mbrlab/dpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mbrlab/optimizer.hpp"
#include "mbrlab/rng.hpp"

namespace mbrlab {

void DpoConfig::validate() const {
  if (!(beta > 0.0)) throw std::invalid_argument("DpoConfig: beta must be > 0");
  if (epochs < 1) throw std::invalid_argument("DpoConfig: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("DpoConfig: batch_size must be >= 1");
  if (moving_average_window < 1) throw std::invalid_argument("DpoConfig: window must be >= 1");
  for (std::size_t i = 0; i < checkpoint_fractions.size(); ++i) {
    if (checkpoint_fractions[i] < 0.0 || checkpoint_fractions[i] > 1.0) {
      throw std::invalid_argument("DpoConfig: checkpoint fractions must lie in [0, 1]");
    }
    if (i > 0 && checkpoint_fractions[i] < checkpoint_fractions[i - 1]) {
      throw std::invalid_argument("DpoConfig: checkpoint fractions must be sorted");
    }
  }
}

std::vector<double> moving_average(const std::vector<double>& series, std::size_t window) {
  if (series.empty()) throw std::invalid_argument("moving_average: empty series");
  if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
  std::vector<double> out(series.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    acc += series[i];
    if (i >= window) acc -= series[i - window];
    std::size_t n = std::min(window, i + 1);
    out[i] = acc / static_cast<double>(n);
  }
  return out;
}

namespace {

void check_compatible(const ModelParams& theta, const ModelParams& ref, const Vocab& vocab) {
  if (theta.config.vocab_size != ref.config.vocab_size ||
      theta.config.d_model != ref.config.d_model || theta.config.n_heads != ref.config.n_heads ||
      theta.config.n_layers != ref.config.n_layers || theta.config.max_len != ref.config.max_len) {
    throw std::invalid_argument("dpo: policy and reference configs differ");
  }
  if (theta.config.vocab_size != vocab.size()) {
    throw std::invalid_argument("dpo: vocab size mismatch");
  }
}

}  // namespace

double reward_margin(const ModelParams& theta, const ModelParams& ref, const Vocab& vocab,
                     const PreferenceTriplet& triplet, double beta) {
  check_compatible(theta, ref, vocab);
  double w_theta = sequence_logprob(theta, vocab, triplet.source, triplet.winner);
  double w_ref = sequence_logprob(ref, vocab, triplet.source, triplet.winner);
  double l_theta = sequence_logprob(theta, vocab, triplet.source, triplet.loser);
  double l_ref = sequence_logprob(ref, vocab, triplet.source, triplet.loser);
  return beta * ((w_theta - w_ref) - (l_theta - l_ref));
}

double dpo_loss(const ModelParams& theta, const ModelParams& ref, const Vocab& vocab,
                const std::vector<PreferenceTriplet>& batch, double beta) {
  if (batch.empty()) throw std::invalid_argument("dpo_loss: empty batch");
  double acc = 0.0;
  for (const auto& t : batch) {
    double m = reward_margin(theta, ref, vocab, t, beta);
    if (!std::isfinite(m)) throw std::runtime_error("dpo_loss: non-finite margin");
    // -log sigma(m), stable on both tails
    double nls = m >= 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
    acc += nls;
  }
  return acc / static_cast<double>(batch.size());
}

Value dpo_loss_value(Graph& g, const BoundModel& theta, const std::vector<PreferenceTriplet>& batch,
                     const std::vector<std::pair<double, double>>& ref_logprobs, double beta,
                     std::vector<double>* margins_out) {
  if (batch.empty()) throw std::invalid_argument("dpo_loss_value: empty batch");
  if (batch.size() != ref_logprobs.size()) {
    throw std::invalid_argument("dpo_loss_value: ref logprob count mismatch");
  }
  Value total;
  bool first = true;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = batch[i];
    Value lw = sequence_logprob_value(g, theta, t.source, t.winner);
    Value ll = sequence_logprob_value(g, theta, t.source, t.loser);
    // margin = beta * ((lw - ll) + (ref_l - ref_w)); the grouping keeps the
    // theta == ref case exactly zero.
    double ref_const = ref_logprobs[i].second - ref_logprobs[i].first;
    Value margin = g.scale(
        g.add(g.add(lw, g.scale(ll, -1.0)), g.input(Tensor::scalar(ref_const))), beta);
    if (margins_out) margins_out->push_back(margin.item());
    Value ls = g.log_sigmoid(margin);
    total = first ? ls : g.add(total, ls);
    first = false;
  }
  return g.scale(total, -1.0 / static_cast<double>(batch.size()));
}

DpoResult dpo_finetune(const ModelParams& base, const Vocab& vocab,
                       const std::vector<PreferenceTriplet>& triplets, const DpoConfig& cfg,
                       const std::vector<PreferenceTriplet>& heldout) {
  cfg.validate();
  if (triplets.empty()) throw std::invalid_argument("dpo_finetune: empty triplet set");
  check_compatible(base, base, vocab);

  DpoResult result;
  result.params = base;  // pi_theta starts from pi_ref

  // The reference model is frozen; its log-probs per pair are constants.
  auto ref_pair_logprobs = [&](const std::vector<PreferenceTriplet>& ts) {
    std::vector<std::pair<double, double>> out;
    out.reserve(ts.size());
    for (const auto& t : ts) {
      out.emplace_back(sequence_logprob(base, vocab, t.source, t.winner),
                       sequence_logprob(base, vocab, t.source, t.loser));
    }
    return out;
  };
  std::vector<std::pair<double, double>> ref_train = ref_pair_logprobs(triplets);
  std::vector<std::pair<double, double>> ref_heldout = ref_pair_logprobs(heldout);

  std::size_t steps_per_epoch = (triplets.size() + cfg.batch_size - 1) / cfg.batch_size;
  std::size_t total_steps = steps_per_epoch * cfg.epochs;
  std::size_t warmup = cfg.warmup_steps > 0 ? cfg.warmup_steps
                                            : std::max<std::size_t>(1, total_steps / 20);

  // Checkpoint step indices (snapshot taken before that step runs).
  std::vector<std::size_t> ckpt_steps;
  for (double f : cfg.checkpoint_fractions) {
    ckpt_steps.push_back(static_cast<std::size_t>(f * static_cast<double>(total_steps)));
  }
  std::size_t next_ckpt = 0;
  auto snapshot = [&](std::size_t step) {
    while (next_ckpt < ckpt_steps.size() && ckpt_steps[next_ckpt] <= step) {
      MarginTrace::HeldoutSnapshot snap;
      snap.fraction = cfg.checkpoint_fractions[next_ckpt];
      snap.margins.reserve(heldout.size());
      for (std::size_t i = 0; i < heldout.size(); ++i) {
        const auto& t = heldout[i];
        double w = sequence_logprob(result.params, vocab, t.source, t.winner);
        double l = sequence_logprob(result.params, vocab, t.source, t.loser);
        snap.margins.push_back(cfg.beta *
                               ((w - l) + (ref_heldout[i].second - ref_heldout[i].first)));
      }
      result.trace.heldout.push_back(std::move(snap));
      ++next_ckpt;
    }
  };

  RmsProp opt(RmsPropConfig{cfg.lr, 0.99, 1e-8});
  std::vector<std::size_t> order(triplets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(Rng::mix(cfg.seed, epoch));
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < triplets.size(); start += cfg.batch_size) {
      snapshot(step);
      std::vector<PreferenceTriplet> batch;
      std::vector<std::pair<double, double>> batch_ref;
      for (std::size_t i = start; i < std::min(triplets.size(), start + cfg.batch_size); ++i) {
        batch.push_back(triplets[order[i]]);
        batch_ref.push_back(ref_train[order[i]]);
      }

      Graph g;
      BoundModel m = bind_model(g, result.params, /*requires_grad=*/true);
      std::vector<double> margins;
      Value loss = dpo_loss_value(g, m, batch, batch_ref, cfg.beta, &margins);
      double loss_v = loss.item();
      if (!std::isfinite(loss_v)) {
        throw std::runtime_error("dpo_finetune: non-finite loss at step " + std::to_string(step));
      }
      g.backward(loss);

      auto named = result.params.named_tensors();
      std::vector<Tensor*> ps;
      std::vector<Tensor> gs;
      for (std::size_t i = 0; i < named.size(); ++i) {
        ps.push_back(named[i].second);
        gs.push_back(m.named[i].second.grad());
      }
      if (cfg.grad_clip > 0.0) {
        double sq = 0.0;
        for (const Tensor& t : gs)
          for (double v : t.data) sq += v * v;
        double nrm = std::sqrt(sq);
        if (nrm > cfg.grad_clip) {
          double s = cfg.grad_clip / nrm;
          for (Tensor& t : gs)
            for (double& v : t.data) v *= s;
        }
      }
      if (cfg.weight_decay > 0.0) {
        for (std::size_t i = 0; i < ps.size(); ++i)
          for (std::size_t k = 0; k < gs[i].data.size(); ++k)
            gs[i].data[k] += cfg.weight_decay * ps[i]->data[k];
      }
      opt.step(ps, gs, warmup_scale(step, warmup));

      double mean_margin = 0.0;
      for (double v : margins) mean_margin += v;
      result.trace.raw.push_back(mean_margin / static_cast<double>(margins.size()));
      ++step;
    }
  }
  snapshot(total_steps);
  result.trace.moving_average = moving_average(result.trace.raw, cfg.moving_average_window);
  return result;
}

}  // namespace mbrlab
