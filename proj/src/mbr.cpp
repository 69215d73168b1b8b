#include "mbrlab/mbr.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace mbrlab {

std::vector<std::vector<double>> utility_matrix(const std::vector<Hypothesis>& hyps,
                                                const Vocab& vocab, const UtilityFunction& util) {
  if (hyps.empty()) throw std::invalid_argument("utility_matrix: empty hypothesis set");
  std::size_t n = hyps.size();
  std::vector<std::vector<std::string>> toks(n);
  for (std::size_t i = 0; i < n; ++i) toks[i] = vocab.to_symbols(hyps[i].tokens);

  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      // Pseudo-references may be empty strings; treat utility against an
      // empty reference as 0 rather than an error.
      m[i][j] = toks[j].empty() ? 0.0 : util.score(toks[i], toks[j]);
    }
  }
  return m;
}

std::vector<double> mbr_scores(const std::vector<Hypothesis>& hyps, const Vocab& vocab,
                               const UtilityFunction& util) {
  auto m = utility_matrix(hyps, vocab, util);
  std::size_t n = hyps.size();
  std::vector<double> scores(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += m[i][j];
    scores[i] = acc / static_cast<double>(n);
  }
  return scores;
}

RankedHypothesisSet mbr_rank(const std::vector<Hypothesis>& hyps, const Vocab& vocab,
                             const UtilityFunction& util, int source_id,
                             std::vector<int> source) {
  std::vector<double> scores = mbr_scores(hyps, vocab, util);
  std::vector<std::size_t> order(hyps.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return hyps[a].sample_index < hyps[b].sample_index;
  });

  RankedHypothesisSet out;
  out.source_id = source_id;
  out.source = std::move(source);
  out.utility = util.id;
  out.hyps.reserve(hyps.size());
  out.scores.reserve(hyps.size());
  for (std::size_t i : order) {
    out.hyps.push_back(hyps[i]);
    out.scores.push_back(scores[i]);
  }
  return out;
}

Hypothesis mbr_decode(const std::vector<Hypothesis>& hyps, const Vocab& vocab,
                      const UtilityFunction& util) {
  return mbr_rank(hyps, vocab, util).hyps.front();
}

}  // namespace mbrlab
