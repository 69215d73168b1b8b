#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "mbrlab/tasks.hpp"

using namespace mbrlab;

namespace {

TaskSpec small_spec(TaskKind kind) {
  TaskSpec s;
  s.kind = kind;
  s.vocab_size = 8;
  s.min_len = 3;
  s.max_len = 7;
  s.base_train = 60;
  s.dpo_sources = 20;
  s.heldout = 10;
  s.test = 30;
  s.seed = 42;
  return s;
}

std::vector<const std::vector<SentencePair>*> splits(const Corpus& c) {
  return {&c.base_train, &c.dpo_finetune, &c.heldout, &c.test};
}

}  // namespace

TEST_CASE("split sizes, sequential ids, and disjoint sources") {
  for (TaskKind kind : {TaskKind::kCipher, TaskKind::kReverse, TaskKind::kLexicon}) {
    Corpus c = gen_corpus(small_spec(kind));
    CHECK(c.base_train.size() == 60);
    CHECK(c.dpo_finetune.size() == 20);
    CHECK(c.heldout.size() == 10);
    CHECK(c.test.size() == 30);
    std::set<std::vector<int>> sources;
    int expect_id = 0;
    for (const auto* split : splits(c)) {
      for (const auto& p : *split) {
        CHECK(p.id == expect_id++);
        CHECK(sources.insert(p.source).second);  // no source appears twice
        CHECK(p.source.size() >= 3);
        CHECK(p.source.size() <= 7);
      }
    }
  }
}

TEST_CASE("generation is deterministic per seed") {
  TaskSpec s = small_spec(TaskKind::kCipher);
  Corpus a = gen_corpus(s);
  Corpus b = gen_corpus(s);
  s.seed = 43;
  Corpus d = gen_corpus(s);
  REQUIRE(a.base_train.size() == b.base_train.size());
  bool same = true, diff = false;
  for (std::size_t i = 0; i < a.base_train.size(); ++i) {
    if (a.base_train[i].source != b.base_train[i].source ||
        a.base_train[i].target != b.base_train[i].target)
      same = false;
    if (a.base_train[i].source != d.base_train[i].source) diff = true;
  }
  CHECK(same);
  CHECK(diff);
}

TEST_CASE("cipher applies one fixed permutation of the content symbols") {
  Corpus c = gen_corpus(small_spec(TaskKind::kCipher));
  // recover the mapping from clean pairs, then check it is a consistent
  // bijection across every split
  std::map<int, int> mapping;
  for (const auto* split : {&c.dpo_finetune, &c.heldout, &c.test}) {
    for (const auto& p : *split) {
      REQUIRE(p.target.size() == p.source.size());
      for (std::size_t i = 0; i < p.source.size(); ++i) {
        auto [it, inserted] = mapping.emplace(p.source[i], p.target[i]);
        CHECK(it->second == p.target[i]);
      }
    }
  }
  std::set<int> images;
  for (auto [k, v] : mapping) images.insert(v);
  CHECK(images.size() == mapping.size());  // injective
}

TEST_CASE("cipher_identity makes the mapping the identity") {
  TaskSpec s = small_spec(TaskKind::kCipher);
  s.cipher_identity = true;
  Corpus c = gen_corpus(s);
  for (const auto& p : c.test) CHECK(p.target == p.source);
}

TEST_CASE("reverse task reverses the source") {
  Corpus c = gen_corpus(small_spec(TaskKind::kReverse));
  for (const auto* split : {&c.dpo_finetune, &c.heldout, &c.test}) {
    for (const auto& p : *split) {
      std::vector<int> rev(p.source.rbegin(), p.source.rend());
      CHECK(p.target == rev);
    }
  }
}

TEST_CASE("lexicon maps words to the uppercase register and swaps adjacent pairs") {
  TaskSpec s = small_spec(TaskKind::kLexicon);
  Corpus c = gen_corpus(s);
  int n = static_cast<int>(s.vocab_size);
  CHECK(c.vocab.size() == Vocab::kNumReserved + 2 * s.vocab_size);
  for (const auto& p : c.test) {
    std::vector<int> want;
    for (int t : p.source) want.push_back(t + n);
    for (std::size_t i = 0; i + 1 < want.size(); i += 2) std::swap(want[i], want[i + 1]);
    CHECK(p.target == want);
    for (int t : p.target) CHECK(t >= Vocab::kNumReserved + n);  // target register only
  }
}

TEST_CASE("noise corrupts only the base-training targets") {
  TaskSpec s = small_spec(TaskKind::kCipher);
  s.noise_rate = 0.3;
  s.base_train = 200;
  Corpus c = gen_corpus(s);
  // clean splits match the task mapping exactly: rebuild the cipher from the
  // clean splits and verify; noisy split must disagree somewhere
  std::map<int, int> mapping;
  for (const auto& p : c.test)
    for (std::size_t i = 0; i < p.source.size(); ++i) mapping[p.source[i]] = p.target[i];
  std::size_t corrupted_tokens = 0, total_tokens = 0;
  for (const auto& p : c.base_train) {
    for (std::size_t i = 0; i < p.source.size(); ++i) {
      ++total_tokens;
      if (mapping.count(p.source[i]) && p.target[i] != mapping[p.source[i]]) ++corrupted_tokens;
    }
  }
  double rate = static_cast<double>(corrupted_tokens) / static_cast<double>(total_tokens);
  CHECK(rate > 0.15);  // ~0.3 less the re-draws that hit the true symbol
  CHECK(rate < 0.45);
  for (const auto* split : {&c.dpo_finetune, &c.heldout}) {
    for (const auto& p : *split) {
      for (std::size_t i = 0; i < p.source.size(); ++i) {
        if (mapping.count(p.source[i])) CHECK(p.target[i] == mapping[p.source[i]]);
      }
    }
  }
}

TEST_CASE("zero noise leaves base-training targets exact") {
  TaskSpec s = small_spec(TaskKind::kReverse);
  s.noise_rate = 0.0;
  Corpus c = gen_corpus(s);
  for (const auto& p : c.base_train) {
    std::vector<int> rev(p.source.rbegin(), p.source.rend());
    CHECK(p.target == rev);
  }
}

TEST_CASE("corpus metrics") {
  Vocab v = Vocab::build({"a", "b", "c", "d", "e", "f"});
  UtilityFunction util;
  std::vector<std::vector<int>> refs = {v.to_ids({"a", "b", "c", "d"}),
                                        v.to_ids({"c", "c", "d", "e"})};
  CorpusScore perfect = corpus_metrics(refs, refs, v, util);
  CHECK(perfect.mean_utility == doctest::Approx(1.0));
  CHECK(perfect.exact_match == 1.0);

  std::vector<std::vector<int>> half = {refs[0], v.to_ids({"f"})};
  CorpusScore mixed = corpus_metrics(half, refs, v, util);
  CHECK(mixed.exact_match == 0.5);
  CHECK(mixed.mean_utility < 1.0);
  CHECK(mixed.mean_utility > 0.4);

  // empty hypothesis contributes zero utility instead of throwing
  std::vector<std::vector<int>> with_empty = {refs[0], {}};
  CorpusScore partial = corpus_metrics(with_empty, refs, v, util);
  CHECK(partial.mean_utility == doctest::Approx(0.5));

  CHECK_THROWS(corpus_metrics({}, {}, v, util));
  CHECK_THROWS(corpus_metrics(half, {refs[0]}, v, util));
}

TEST_CASE("task name round-trip and validation") {
  for (TaskKind k : {TaskKind::kCipher, TaskKind::kReverse, TaskKind::kLexicon}) {
    CHECK(task_from_name(task_name(k)) == k);
  }
  CHECK_THROWS(task_from_name("wmt"));

  TaskSpec s = small_spec(TaskKind::kCipher);
  s.vocab_size = 1;
  CHECK_THROWS(s.validate());
  s = small_spec(TaskKind::kCipher);
  s.min_len = 5;
  s.max_len = 4;
  CHECK_THROWS(s.validate());
  s = small_spec(TaskKind::kCipher);
  s.noise_rate = 1.5;
  CHECK_THROWS(s.validate());
}
