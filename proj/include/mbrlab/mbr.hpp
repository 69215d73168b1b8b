#pragma once

#include <vector>

#include "mbrlab/decoding.hpp"
#include "mbrlab/metrics.hpp"
#include "mbrlab/vocab.hpp"

namespace mbrlab {

// Hypotheses for one source, ordered by descending MBR score. Ties keep
// ascending sample index (stable under identical hypotheses).
struct RankedHypothesisSet {
  int source_id = 0;
  std::vector<int> source;
  std::vector<Hypothesis> hyps;  // y1..y|H|
  std::vector<double> scores;    // aligned, non-increasing
  UtilityId utility = UtilityId::kChrf;

  std::size_t size() const { return hyps.size(); }
};

// Pairwise utility matrix, m[i][j] = U(hyp i, hyp j as pseudo-reference).
std::vector<std::vector<double>> utility_matrix(const std::vector<Hypothesis>& hyps,
                                                const Vocab& vocab, const UtilityFunction& util);

// Monte-Carlo score of each hypothesis against the whole set (self-term
// included), aligned with the input order.
std::vector<double> mbr_scores(const std::vector<Hypothesis>& hyps, const Vocab& vocab,
                               const UtilityFunction& util);

RankedHypothesisSet mbr_rank(const std::vector<Hypothesis>& hyps, const Vocab& vocab,
                             const UtilityFunction& util, int source_id = 0,
                             std::vector<int> source = {});

Hypothesis mbr_decode(const std::vector<Hypothesis>& hyps, const Vocab& vocab,
                      const UtilityFunction& util);

}  // namespace mbrlab
