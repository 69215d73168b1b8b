#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mbrlab/autodiff.hpp"
#include "mbrlab/tensor.hpp"
#include "mbrlab/vocab.hpp"

namespace mbrlab {

// One aligned source/target sentence (token ids, content symbols only).
struct SentencePair {
  int id = 0;
  std::vector<int> source;
  std::vector<int> target;
};

struct ModelConfig {
  std::size_t d_model = 32;
  std::size_t n_heads = 2;
  std::size_t n_layers = 1;
  std::size_t ffn_mult = 2;
  std::size_t max_len = 64;
  std::size_t vocab_size = 0;
  double init_scale = 0.08;

  std::size_t head_dim() const { return d_model / n_heads; }
  void validate() const;  // throws on bad dims
};

// All learnable weights of the decoder-only conditional LM. Biases and layer
// norm are omitted; residual connections keep optimization stable at this
// scale.
struct ModelParams {
  struct Head {
    Tensor wq, wk, wv;  // d_model x head_dim
  };
  struct Layer {
    std::vector<Head> heads;
    Tensor wo;      // d_model x d_model
    Tensor w1, w2;  // d_model x ffn, ffn x d_model
  };

  ModelConfig config;
  Tensor tok_embed;  // vocab x d_model
  Tensor pos_embed;  // max_len x d_model
  std::vector<Layer> layers;
  Tensor w_out;  // d_model x vocab

  std::vector<std::pair<std::string, Tensor*>> named_tensors();
  std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;
  std::size_t num_params() const;
};

ModelParams init_model(const ModelConfig& config, std::uint64_t seed);

// Graph-bound view of the parameters; `named` follows named_tensors() order.
struct BoundModel {
  const ModelConfig* config = nullptr;
  Value tok_embed, pos_embed, w_out;
  struct Layer {
    std::vector<std::array<Value, 3>> heads;  // wq, wk, wv
    Value wo, w1, w2;
  };
  std::vector<Layer> layers;
  std::vector<std::pair<std::string, Value>> named;
};

BoundModel bind_model(Graph& g, const ModelParams& params, bool requires_grad);

// Log-probability rows: row t holds log P(token | input[0..t]) over the
// vocab. `input` is the already-assembled [BOS, x, SEP, y...] sequence.
Value logprob_rows(Graph& g, const BoundModel& m, const std::vector<int>& input);

// Scalar log pi(y|x): sum of next-token log-probs over y's tokens plus EOS.
Value sequence_logprob_value(Graph& g, const BoundModel& m, const std::vector<int>& x,
                             const std::vector<int>& y);

std::vector<int> build_prompt(const std::vector<int>& x, const std::vector<int>& y_prefix);

// Convenience wrappers (build a throwaway graph internally).
std::vector<double> next_token_logprobs(const ModelParams& params, const Vocab& vocab,
                                        const std::vector<int>& x,
                                        const std::vector<int>& y_prefix);
double sequence_logprob(const ModelParams& params, const Vocab& vocab, const std::vector<int>& x,
                        const std::vector<int>& y);

// Checkpoint container: JSON header (config + vocab + tensor table) followed
// by raw little-endian doubles. Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const ModelParams& params, const Vocab& vocab);
std::pair<ModelParams, Vocab> load_checkpoint(const std::string& path);

}  // namespace mbrlab
