#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mbrlab/model.hpp"

namespace mbrlab {

// One candidate translation. `logprob` is the untempered model log-prob of
// the emitted sequence (EOS included unless truncated).
struct Hypothesis {
  std::vector<int> tokens;  // content tokens, EOS stripped
  double logprob = 0.0;
  int sample_index = 0;  // 1-based origin order; 0 for search decodes
  bool truncated = false;
};

struct SamplingConfig {
  double temperature = 0.7;
  std::size_t max_len = 0;  // 0: 2*|x| + 8
  std::uint64_t seed = 0;
  std::size_t set_size = 8;  // |H|

  void validate() const;  // throws on tau <= 0 or set_size < 1
};

// Next-token scorer abstraction: log-prob vector over the vocab given the
// target prefix. Lets the search code be tested against hand-built tables.
using NextTokenFn = std::function<std::vector<double>(const std::vector<int>& y_prefix)>;

NextTokenFn model_scorer(const ModelParams& params, const Vocab& vocab,
                         const std::vector<int>& x);

std::size_t default_max_decode_len(std::size_t source_len);

Hypothesis ancestral_sample_fn(const NextTokenFn& next, int eos_id, double temperature,
                               std::size_t max_len, std::uint64_t sample_seed, int sample_index);

Hypothesis ancestral_sample(const ModelParams& params, const Vocab& vocab,
                            const std::vector<int>& x, const SamplingConfig& cfg,
                            int sample_index = 1);

// Exactly |H| hypotheses with sample indices 1..|H|; per-index sub-seeds make
// the multiset independent of generation order.
std::vector<Hypothesis> sample_hypothesis_set(const ModelParams& params, const Vocab& vocab,
                                              const std::vector<int>& x,
                                              const SamplingConfig& cfg);

// Sum-of-log-probs beam search (no length normalization unless asked).
// Ties break toward the lexicographically smaller token sequence.
Hypothesis beam_search_fn(const NextTokenFn& next, int eos_id, std::size_t beam_width,
                          std::size_t max_len, bool length_normalize = false);

Hypothesis beam_search(const ModelParams& params, const Vocab& vocab, const std::vector<int>& x,
                       std::size_t beam_width, std::size_t max_len = 0,
                       bool length_normalize = false);

Hypothesis greedy_decode(const ModelParams& params, const Vocab& vocab,
                         const std::vector<int>& x, std::size_t max_len = 0);

}  // namespace mbrlab
