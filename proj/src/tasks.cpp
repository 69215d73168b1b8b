#include "mbrlab/tasks.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "mbrlab/rng.hpp"

namespace mbrlab {

std::string task_name(TaskKind k) {
  switch (k) {
    case TaskKind::kCipher: return "cipher";
    case TaskKind::kReverse: return "reverse";
    case TaskKind::kLexicon: return "lexicon";
  }
  throw std::invalid_argument("task_name: bad kind");
}

TaskKind task_from_name(const std::string& name) {
  if (name == "cipher") return TaskKind::kCipher;
  if (name == "reverse") return TaskKind::kReverse;
  if (name == "lexicon") return TaskKind::kLexicon;
  throw std::invalid_argument("unknown task: " + name);
}

void TaskSpec::validate() const {
  if (vocab_size < 2) throw std::invalid_argument("TaskSpec: vocab too small");
  if (vocab_size > 26) throw std::invalid_argument("TaskSpec: vocab_size capped at 26 symbols");
  if (min_len < 1 || max_len < min_len) throw std::invalid_argument("TaskSpec: bad length range");
  if (noise_rate < 0.0 || noise_rate > 1.0) throw std::invalid_argument("TaskSpec: bad noise rate");
  if (base_train == 0 || test == 0) throw std::invalid_argument("TaskSpec: empty split");
}

namespace {

std::vector<std::string> letters(std::size_t n, char base) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(1, static_cast<char>(base + i)));
  return out;
}

}  // namespace

Corpus gen_corpus(const TaskSpec& spec) {
  spec.validate();
  Corpus corpus;
  corpus.spec = spec;

  std::vector<std::string> src_syms = letters(spec.vocab_size, 'a');
  std::vector<std::string> content = src_syms;
  if (spec.kind == TaskKind::kLexicon) {
    auto tgt_syms = letters(spec.vocab_size, 'A');
    content.insert(content.end(), tgt_syms.begin(), tgt_syms.end());
  }
  corpus.vocab = Vocab::build(content);

  // Source content ids are contiguous starting after the reserved markers.
  int first_src = Vocab::kNumReserved;
  int n = static_cast<int>(spec.vocab_size);

  // Task mapping over source ids.
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  if (spec.kind == TaskKind::kCipher && !spec.cipher_identity) {
    Rng perm_rng(Rng::mix(spec.seed, 0xc1f3));
    perm_rng.shuffle(perm);
  }

  auto map_sentence = [&](const std::vector<int>& src) {
    std::vector<int> tgt;
    switch (spec.kind) {
      case TaskKind::kCipher:
        for (int t : src) tgt.push_back(first_src + perm[t - first_src]);
        break;
      case TaskKind::kReverse:
        tgt.assign(src.rbegin(), src.rend());
        break;
      case TaskKind::kLexicon: {
        // Word-for-word dictionary (a -> A) then a local reordering: each
        // adjacent pair of target words is swapped.
        for (int t : src) tgt.push_back(t + n);
        for (std::size_t i = 0; i + 1 < tgt.size(); i += 2) std::swap(tgt[i], tgt[i + 1]);
        break;
      }
    }
    return tgt;
  };

  // Unique source sentences, then partition into the splits.
  std::size_t total = spec.base_train + spec.dpo_sources + spec.heldout + spec.test;
  Rng rng(Rng::mix(spec.seed, 0xda7a));
  std::set<std::vector<int>> seen;
  std::vector<std::vector<int>> sources;
  std::size_t attempts = 0;
  while (sources.size() < total) {
    if (++attempts > total * 1000) {
      throw std::runtime_error("gen_corpus: cannot draw enough distinct sources");
    }
    std::size_t len = spec.min_len + rng.next_below(spec.max_len - spec.min_len + 1);
    std::vector<int> s(len);
    for (auto& t : s) t = first_src + static_cast<int>(rng.next_below(spec.vocab_size));
    if (seen.insert(s).second) sources.push_back(std::move(s));
  }

  Rng noise_rng(Rng::mix(spec.seed, 0x9015e));
  int tgt_base = spec.kind == TaskKind::kLexicon ? first_src + n : first_src;
  std::size_t idx = 0;
  int next_id = 0;
  auto take = [&](std::size_t count, bool noised) {
    std::vector<SentencePair> split;
    for (std::size_t i = 0; i < count; ++i, ++idx) {
      SentencePair p;
      p.id = next_id++;
      p.source = sources[idx];
      p.target = map_sentence(p.source);
      if (noised && spec.noise_rate > 0.0) {
        for (int& t : p.target) {
          if (noise_rng.next_double() < spec.noise_rate) {
            t = tgt_base + static_cast<int>(noise_rng.next_below(spec.vocab_size));
          }
        }
      }
      split.push_back(std::move(p));
    }
    return split;
  };
  corpus.base_train = take(spec.base_train, /*noised=*/true);
  corpus.dpo_finetune = take(spec.dpo_sources, false);
  corpus.heldout = take(spec.heldout, false);
  corpus.test = take(spec.test, false);
  return corpus;
}

CorpusScore corpus_metrics(const std::vector<std::vector<int>>& hypotheses,
                           const std::vector<std::vector<int>>& references, const Vocab& vocab,
                           const UtilityFunction& util) {
  if (hypotheses.size() != references.size()) {
    throw std::invalid_argument("corpus_metrics: length mismatch");
  }
  if (hypotheses.empty()) throw std::invalid_argument("corpus_metrics: empty input");
  CorpusScore score;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    auto hyp = vocab.to_symbols(hypotheses[i]);
    auto ref = vocab.to_symbols(references[i]);
    score.mean_utility += hyp.empty() ? 0.0 : util.score(hyp, ref);
    score.exact_match += hypotheses[i] == references[i] ? 1.0 : 0.0;
  }
  double n = static_cast<double>(hypotheses.size());
  score.mean_utility /= n;
  score.exact_match /= n;
  return score;
}

}  // namespace mbrlab
