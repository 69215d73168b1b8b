#include "mbrlab/model.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "mbrlab/rng.hpp"

namespace mbrlab {

void ModelConfig::validate() const {
  if (d_model == 0 || n_heads == 0 || n_layers == 0 || ffn_mult == 0 || max_len < 4 ||
      vocab_size <= Vocab::kNumReserved) {
    throw std::invalid_argument("ModelConfig: invalid dimensions");
  }
  if (d_model % n_heads != 0) {
    throw std::invalid_argument("ModelConfig: d_model must be divisible by n_heads");
  }
  if (!(init_scale > 0.0)) {
    throw std::invalid_argument("ModelConfig: init_scale must be positive");
  }
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::named_tensors() {
  std::vector<std::pair<std::string, Tensor*>> out;
  out.emplace_back("tok_embed", &tok_embed);
  out.emplace_back("pos_embed", &pos_embed);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::string p = "layer" + std::to_string(l) + ".";
    for (std::size_t h = 0; h < layers[l].heads.size(); ++h) {
      std::string hp = p + "head" + std::to_string(h) + ".";
      out.emplace_back(hp + "wq", &layers[l].heads[h].wq);
      out.emplace_back(hp + "wk", &layers[l].heads[h].wk);
      out.emplace_back(hp + "wv", &layers[l].heads[h].wv);
    }
    out.emplace_back(p + "wo", &layers[l].wo);
    out.emplace_back(p + "w1", &layers[l].w1);
    out.emplace_back(p + "w2", &layers[l].w2);
  }
  out.emplace_back("w_out", &w_out);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> ModelParams::named_tensors() const {
  auto mut = const_cast<ModelParams*>(this)->named_tensors();
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.reserve(mut.size());
  for (auto& [name, t] : mut) out.emplace_back(name, t);
  return out;
}

std::size_t ModelParams::num_params() const {
  std::size_t n = 0;
  for (auto& [name, t] : named_tensors()) n += t->numel();
  return n;
}

ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  std::size_t d = config.d_model, dh = config.head_dim(), f = config.d_model * config.ffn_mult;
  p.tok_embed = Tensor::zeros({config.vocab_size, d});
  p.pos_embed = Tensor::zeros({config.max_len, d});
  p.layers.resize(config.n_layers);
  for (auto& layer : p.layers) {
    layer.heads.resize(config.n_heads);
    for (auto& head : layer.heads) {
      head.wq = Tensor::zeros({d, dh});
      head.wk = Tensor::zeros({d, dh});
      head.wv = Tensor::zeros({d, dh});
    }
    layer.wo = Tensor::zeros({d, d});
    layer.w1 = Tensor::zeros({d, f});
    layer.w2 = Tensor::zeros({f, d});
  }
  p.w_out = Tensor::zeros({d, config.vocab_size});

  Rng rng(seed);
  double s = config.init_scale;
  for (auto& [name, t] : p.named_tensors()) {
    for (double& v : t->data) v = rng.next_uniform(-s, s);
  }
  return p;
}

BoundModel bind_model(Graph& g, const ModelParams& params, bool requires_grad) {
  BoundModel m;
  m.config = &params.config;
  auto named = params.named_tensors();
  std::size_t i = 0;
  auto take = [&](const char* suffix) {
    Value v = g.input(*named[i].second, requires_grad);
    m.named.emplace_back(named[i].first, v);
    (void)suffix;
    ++i;
    return v;
  };
  m.tok_embed = take("tok_embed");
  m.pos_embed = take("pos_embed");
  m.layers.resize(params.layers.size());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& bl = m.layers[l];
    bl.heads.resize(params.layers[l].heads.size());
    for (auto& head : bl.heads) {
      head[0] = take("wq");
      head[1] = take("wk");
      head[2] = take("wv");
    }
    bl.wo = take("wo");
    bl.w1 = take("w1");
    bl.w2 = take("w2");
  }
  m.w_out = take("w_out");
  return m;
}

Value logprob_rows(Graph& g, const BoundModel& m, const std::vector<int>& input) {
  const ModelConfig& cfg = *m.config;
  if (input.empty()) throw std::invalid_argument("logprob_rows: empty input");
  if (input.size() > cfg.max_len) {
    throw std::invalid_argument("logprob_rows: input longer than max_len");
  }
  std::size_t T = input.size();
  std::vector<std::size_t> tok_idx(T), pos_idx(T);
  for (std::size_t t = 0; t < T; ++t) {
    if (input[t] < 0 || static_cast<std::size_t>(input[t]) >= cfg.vocab_size) {
      throw std::invalid_argument("logprob_rows: token id out of vocab");
    }
    tok_idx[t] = static_cast<std::size_t>(input[t]);
    pos_idx[t] = t;
  }

  Value x = g.add(g.gather_rows(m.tok_embed, tok_idx), g.gather_rows(m.pos_embed, pos_idx));

  // Causal mask: -1e9 above the diagonal.
  Tensor mask = Tensor::zeros({T, T});
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t j = i + 1; j < T; ++j) mask.at(i, j) = -1e9;
  Value mask_v = g.input(mask);

  double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim()));
  for (const auto& layer : m.layers) {
    Value cat;
    bool first = true;
    for (const auto& head : layer.heads) {
      Value q = g.matmul(x, head[0]);
      Value k = g.matmul(x, head[1]);
      Value v = g.matmul(x, head[2]);
      Value scores = g.add(g.scale(g.matmul(q, k, /*transpose_b=*/true), inv_sqrt_dh), mask_v);
      Value attn = g.matmul(g.softmax(scores), v);
      cat = first ? attn : g.concat(cat, attn, /*axis=*/1);
      first = false;
    }
    x = g.add(x, g.matmul(cat, layer.wo));
    Value ff = g.matmul(g.sigmoid(g.matmul(x, layer.w1)), layer.w2);
    x = g.add(x, ff);
  }
  return g.log_softmax(g.matmul(x, m.w_out));
}

std::vector<int> build_prompt(const std::vector<int>& x, const std::vector<int>& y_prefix) {
  std::vector<int> seq;
  seq.reserve(x.size() + y_prefix.size() + 2);
  seq.push_back(Vocab::kBos);
  seq.insert(seq.end(), x.begin(), x.end());
  seq.push_back(Vocab::kSep);
  seq.insert(seq.end(), y_prefix.begin(), y_prefix.end());
  return seq;
}

Value sequence_logprob_value(Graph& g, const BoundModel& m, const std::vector<int>& x,
                             const std::vector<int>& y) {
  std::vector<int> seq = build_prompt(x, y);
  seq.push_back(Vocab::kEos);
  std::vector<int> input(seq.begin(), seq.end() - 1);
  Value lp = logprob_rows(g, m, input);

  std::size_t T = input.size();
  std::size_t vocab = m.config->vocab_size;
  std::size_t first_target = x.size() + 1;  // input position predicting y[0]
  Tensor onehot = Tensor::zeros({T, vocab});
  for (std::size_t t = first_target; t < T; ++t) {
    onehot.at(t, static_cast<std::size_t>(seq[t + 1])) = 1.0;
  }
  return g.sum(g.mul(lp, g.input(onehot)));
}

std::vector<double> next_token_logprobs(const ModelParams& params, const Vocab& vocab,
                                        const std::vector<int>& x,
                                        const std::vector<int>& y_prefix) {
  if (params.config.vocab_size != vocab.size()) {
    throw std::invalid_argument("next_token_logprobs: vocab size mismatch");
  }
  Graph g;
  BoundModel m = bind_model(g, params, /*requires_grad=*/false);
  std::vector<int> input = build_prompt(x, y_prefix);
  Value lp = logprob_rows(g, m, input);
  const Tensor& t = lp.tensor();
  std::size_t last = t.shape[0] - 1;
  std::vector<double> out(t.shape[1]);
  for (std::size_t c = 0; c < t.shape[1]; ++c) out[c] = t.at(last, c);
  return out;
}

double sequence_logprob(const ModelParams& params, const Vocab& vocab, const std::vector<int>& x,
                        const std::vector<int>& y) {
  if (params.config.vocab_size != vocab.size()) {
    throw std::invalid_argument("sequence_logprob: vocab size mismatch");
  }
  Graph g;
  BoundModel m = bind_model(g, params, /*requires_grad=*/false);
  return sequence_logprob_value(g, m, x, y).item();
}

// ---------------------------------------------------------------------------
// checkpoint io

namespace {
constexpr char kMagic[8] = {'M', 'B', 'R', 'L', 'C', 'K', 'P', '1'};
}

void save_checkpoint(const std::string& path, const ModelParams& params, const Vocab& vocab) {
  nlohmann::json header;
  header["config"] = {
      {"d_model", params.config.d_model},   {"n_heads", params.config.n_heads},
      {"n_layers", params.config.n_layers}, {"ffn_mult", params.config.ffn_mult},
      {"max_len", params.config.max_len},   {"vocab_size", params.config.vocab_size},
      {"init_scale", params.config.init_scale},
  };
  header["vocab"] = vocab.symbols;
  nlohmann::json tensors = nlohmann::json::array();
  for (auto& [name, t] : params.named_tensors()) {
    tensors.push_back({{"name", name}, {"shape", t->shape}});
  }
  header["tensors"] = tensors;
  std::string hs = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
  f.write(kMagic, sizeof(kMagic));
  std::uint64_t hlen = hs.size();
  f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (auto& [name, t] : params.named_tensors()) {
    f.write(reinterpret_cast<const char*>(t->data.data()),
            static_cast<std::streamsize>(t->data.size() * sizeof(double)));
  }
  if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

std::pair<ModelParams, Vocab> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  }
  std::uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string hs(hlen, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!f) throw std::runtime_error("load_checkpoint: truncated header in " + path);
  nlohmann::json header = nlohmann::json::parse(hs);

  ModelConfig cfg;
  const auto& jc = header.at("config");
  cfg.d_model = jc.at("d_model").get<std::size_t>();
  cfg.n_heads = jc.at("n_heads").get<std::size_t>();
  cfg.n_layers = jc.at("n_layers").get<std::size_t>();
  cfg.ffn_mult = jc.at("ffn_mult").get<std::size_t>();
  cfg.max_len = jc.at("max_len").get<std::size_t>();
  cfg.vocab_size = jc.at("vocab_size").get<std::size_t>();
  cfg.init_scale = jc.at("init_scale").get<double>();

  Vocab vocab = Vocab::from_symbols(header.at("vocab").get<std::vector<std::string>>());
  ModelParams params = init_model(cfg, 0);
  auto named = params.named_tensors();
  const auto& jt = header.at("tensors");
  if (jt.size() != named.size()) throw std::runtime_error("load_checkpoint: tensor table mismatch");
  for (std::size_t i = 0; i < named.size(); ++i) {
    if (jt[i].at("name").get<std::string>() != named[i].first) {
      throw std::runtime_error("load_checkpoint: unexpected tensor " +
                               jt[i].at("name").get<std::string>());
    }
    auto shape = jt[i].at("shape").get<std::vector<std::size_t>>();
    if (shape != named[i].second->shape) {
      throw std::runtime_error("load_checkpoint: shape mismatch for " + named[i].first);
    }
    f.read(reinterpret_cast<char*>(named[i].second->data.data()),
           static_cast<std::streamsize>(named[i].second->data.size() * sizeof(double)));
  }
  if (!f) throw std::runtime_error("load_checkpoint: truncated payload in " + path);
  return {std::move(params), std::move(vocab)};
}

}  // namespace mbrlab
