#pragma once

#include <string>
#include <vector>

namespace mbrlab {

enum class UtilityId { kChrf, kSentenceBleu };

std::string utility_name(UtilityId id);
UtilityId utility_from_name(const std::string& name);

// Deterministic string-similarity utility in [0,1], U(y,y)=1 for any
// non-degenerate y.
struct UtilityFunction {
  UtilityId id = UtilityId::kChrf;
  // chrF parameters
  int chrf_max_order = 6;
  double chrf_beta = 2.0;
  // sentence-BLEU parameters
  int bleu_max_order = 4;

  double score(const std::vector<std::string>& hyp_tokens,
               const std::vector<std::string>& ref_tokens) const;
};

// Character n-gram F-score over the space-joined token strings. Precision and
// recall are averaged uniformly over orders 1..max_order; an order with no
// n-grams on either side contributes zero.
double utility_chrf(const std::vector<std::string>& hyp_tokens,
                    const std::vector<std::string>& ref_tokens, int max_order = 6,
                    double beta = 2.0);

// Token 4-gram BLEU with add-1 smoothing on orders 2..4 and the standard
// brevity penalty.
double utility_sentence_bleu(const std::vector<std::string>& hyp_tokens,
                             const std::vector<std::string>& ref_tokens, int max_order = 4);

}  // namespace mbrlab
