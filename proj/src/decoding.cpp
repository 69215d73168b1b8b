#include "mbrlab/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mbrlab/rng.hpp"

namespace mbrlab {

void SamplingConfig::validate() const {
  if (!(temperature > 0.0)) throw std::invalid_argument("SamplingConfig: temperature must be > 0");
  if (set_size < 1) throw std::invalid_argument("SamplingConfig: set_size must be >= 1");
}

NextTokenFn model_scorer(const ModelParams& params, const Vocab& vocab,
                         const std::vector<int>& x) {
  return [&params, &vocab, x](const std::vector<int>& y_prefix) {
    return next_token_logprobs(params, vocab, x, y_prefix);
  };
}

std::size_t default_max_decode_len(std::size_t source_len) { return 2 * source_len + 8; }

namespace {

// Tempered categorical draw. Tempering rescales log-probs; the softmax here
// only needs relative mass, so the untempered logsumexp term drops out.
int draw_token(const std::vector<double>& logprobs, double temperature, Rng& rng) {
  std::size_t n = logprobs.size();
  std::vector<double> w(n);
  double mx = -1e300;
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, logprobs[i] / temperature);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::exp(logprobs[i] / temperature - mx);
    z += w[i];
  }
  double u = rng.next_double() * z;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += w[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(n - 1);  // u landed on accumulated rounding
}

}  // namespace

Hypothesis ancestral_sample_fn(const NextTokenFn& next, int eos_id, double temperature,
                               std::size_t max_len, std::uint64_t sample_seed, int sample_index) {
  Rng rng(sample_seed);
  Hypothesis hyp;
  hyp.sample_index = sample_index;
  for (std::size_t step = 0; step < max_len; ++step) {
    std::vector<double> lp = next(hyp.tokens);
    int tok = draw_token(lp, temperature, rng);
    hyp.logprob += lp[static_cast<std::size_t>(tok)];
    if (tok == eos_id) return hyp;
    hyp.tokens.push_back(tok);
  }
  hyp.truncated = true;
  return hyp;
}

Hypothesis ancestral_sample(const ModelParams& params, const Vocab& vocab,
                            const std::vector<int>& x, const SamplingConfig& cfg,
                            int sample_index) {
  cfg.validate();
  std::size_t max_len = cfg.max_len ? cfg.max_len : default_max_decode_len(x.size());
  std::uint64_t sub_seed = Rng::mix(cfg.seed, static_cast<std::uint64_t>(sample_index));
  return ancestral_sample_fn(model_scorer(params, vocab, x), Vocab::kEos, cfg.temperature,
                             max_len, sub_seed, sample_index);
}

std::vector<Hypothesis> sample_hypothesis_set(const ModelParams& params, const Vocab& vocab,
                                              const std::vector<int>& x,
                                              const SamplingConfig& cfg) {
  cfg.validate();
  std::vector<Hypothesis> out;
  out.reserve(cfg.set_size);
  for (std::size_t i = 1; i <= cfg.set_size; ++i) {
    out.push_back(ancestral_sample(params, vocab, x, cfg, static_cast<int>(i)));
  }
  return out;
}

namespace {

struct Beam {
  std::vector<int> tokens;
  double logprob = 0.0;
};

// Higher score first; exact score ties prefer the lexicographically smaller
// token sequence (and hence the lower token id at the first difference).
bool beam_better(double sa, const std::vector<int>& ta, double sb, const std::vector<int>& tb) {
  if (sa != sb) return sa > sb;
  return ta < tb;
}

}  // namespace

Hypothesis beam_search_fn(const NextTokenFn& next, int eos_id, std::size_t beam_width,
                          std::size_t max_len, bool length_normalize) {
  if (beam_width < 1) throw std::invalid_argument("beam_search: beam_width must be >= 1");
  auto norm = [&](double lp, std::size_t len) {
    return length_normalize ? lp / static_cast<double>(len + 1) : lp;
  };

  std::vector<Beam> live{Beam{}};
  bool have_best = false;
  Hypothesis best;
  double best_score = 0.0;

  for (std::size_t step = 0; step < max_len && !live.empty(); ++step) {
    struct Cand {
      std::size_t beam;
      int token;
      double logprob;
    };
    std::vector<Cand> cands;
    for (std::size_t b = 0; b < live.size(); ++b) {
      std::vector<double> lp = next(live[b].tokens);
      for (std::size_t t = 0; t < lp.size(); ++t) {
        cands.push_back({b, static_cast<int>(t), live[b].logprob + lp[t]});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) {
      if (a.logprob != b.logprob) return a.logprob > b.logprob;
      if (live[a.beam].tokens != live[b.beam].tokens) return live[a.beam].tokens < live[b.beam].tokens;
      return a.token < b.token;
    });

    // The top beam_width candidates are taken; an EOS candidate retires to
    // the completed pool but still consumes its slot (width 1 == greedy).
    std::vector<Beam> nxt;
    std::size_t taken = 0;
    for (const Cand& c : cands) {
      if (taken >= beam_width) break;
      ++taken;
      if (c.token == eos_id) {
        double score = norm(c.logprob, live[c.beam].tokens.size());
        if (!have_best || beam_better(score, live[c.beam].tokens, best_score, best.tokens)) {
          best.tokens = live[c.beam].tokens;
          best.logprob = c.logprob;
          best.truncated = false;
          best_score = score;
          have_best = true;
        }
        continue;
      }
      Beam b;
      b.tokens = live[c.beam].tokens;
      b.tokens.push_back(c.token);
      b.logprob = c.logprob;
      nxt.push_back(std::move(b));
    }
    live = std::move(nxt);
  }

  if (!have_best) {
    // Nothing completed within max_len; fall back to the best truncated beam.
    if (live.empty()) throw std::runtime_error("beam_search: no candidates");
    const Beam* pick = &live[0];
    for (const Beam& b : live) {
      if (beam_better(norm(b.logprob, b.tokens.size()), b.tokens,
                      norm(pick->logprob, pick->tokens.size()), pick->tokens)) {
        pick = &b;
      }
    }
    best.tokens = pick->tokens;
    best.logprob = pick->logprob;
    best.truncated = true;
  }
  best.sample_index = 0;
  return best;
}

Hypothesis beam_search(const ModelParams& params, const Vocab& vocab, const std::vector<int>& x,
                       std::size_t beam_width, std::size_t max_len, bool length_normalize) {
  if (!max_len) max_len = default_max_decode_len(x.size());
  return beam_search_fn(model_scorer(params, vocab, x), Vocab::kEos, beam_width, max_len,
                        length_normalize);
}

Hypothesis greedy_decode(const ModelParams& params, const Vocab& vocab,
                         const std::vector<int>& x, std::size_t max_len) {
  return beam_search(params, vocab, x, 1, max_len);
}

}  // namespace mbrlab
