#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mbrlab/metrics.hpp"
#include "mbrlab/model.hpp"
#include "mbrlab/vocab.hpp"

namespace mbrlab {

enum class TaskKind { kCipher, kReverse, kLexicon };

std::string task_name(TaskKind k);
TaskKind task_from_name(const std::string& name);

struct TaskSpec {
  TaskKind kind = TaskKind::kCipher;
  std::size_t vocab_size = 20;  // source content symbols
  std::size_t min_len = 4;
  std::size_t max_len = 12;
  double noise_rate = 0.10;  // base-training targets only
  std::size_t base_train = 2000;
  std::size_t dpo_sources = 500;
  std::size_t heldout = 200;
  std::size_t test = 500;
  std::uint64_t seed = 0;
  bool cipher_identity = false;  // identity permutation (tests)

  void validate() const;
};

// Splits are pairwise disjoint by source sentence. base_train targets carry
// the noise; the other splits keep exact references (used for evaluation
// only — DPO fine-tuning reads just the sources).
struct Corpus {
  Vocab vocab;
  TaskSpec spec;
  std::vector<SentencePair> base_train;
  std::vector<SentencePair> dpo_finetune;
  std::vector<SentencePair> heldout;
  std::vector<SentencePair> test;
};

Corpus gen_corpus(const TaskSpec& spec);

struct CorpusScore {
  double mean_utility = 0.0;
  double exact_match = 0.0;
};

CorpusScore corpus_metrics(const std::vector<std::vector<int>>& hypotheses,
                           const std::vector<std::vector<int>>& references, const Vocab& vocab,
                           const UtilityFunction& util);

}  // namespace mbrlab
