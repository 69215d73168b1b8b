#include "mbrlab/metrics.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace mbrlab {

std::string utility_name(UtilityId id) {
  return id == UtilityId::kChrf ? "chrf" : "sentence_bleu";
}

UtilityId utility_from_name(const std::string& name) {
  if (name == "chrf") return UtilityId::kChrf;
  if (name == "sentence_bleu") return UtilityId::kSentenceBleu;
  throw std::invalid_argument("unknown utility: " + name);
}

double UtilityFunction::score(const std::vector<std::string>& hyp_tokens,
                              const std::vector<std::string>& ref_tokens) const {
  if (id == UtilityId::kChrf) return utility_chrf(hyp_tokens, ref_tokens, chrf_max_order, chrf_beta);
  return utility_sentence_bleu(hyp_tokens, ref_tokens, bleu_max_order);
}

namespace {

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

// Multiset of n-grams as substring -> count.
std::map<std::string, int> char_ngrams(const std::string& s, int n) {
  std::map<std::string, int> out;
  if (static_cast<int>(s.size()) < n) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[s.substr(i, n)];
  return out;
}

int overlap(const std::map<std::string, int>& a, const std::map<std::string, int>& b) {
  int m = 0;
  for (const auto& [gram, ca] : a) {
    auto it = b.find(gram);
    if (it != b.end()) m += std::min(ca, it->second);
  }
  return m;
}

int total(const std::map<std::string, int>& a) {
  int t = 0;
  for (const auto& [gram, c] : a) t += c;
  return t;
}

}  // namespace

double utility_chrf(const std::vector<std::string>& hyp_tokens,
                    const std::vector<std::string>& ref_tokens, int max_order, double beta) {
  if (ref_tokens.empty()) throw std::invalid_argument("utility_chrf: empty reference");
  if (hyp_tokens.empty()) return 0.0;
  std::string hyp = join(hyp_tokens);
  std::string ref = join(ref_tokens);

  double prec_sum = 0.0, rec_sum = 0.0;
  for (int n = 1; n <= max_order; ++n) {
    auto hg = char_ngrams(hyp, n);
    auto rg = char_ngrams(ref, n);
    int th = total(hg), tr = total(rg);
    if (th == 0 && tr == 0) continue;  // absent order contributes 0
    int m = overlap(hg, rg);
    if (th > 0) prec_sum += static_cast<double>(m) / th;
    if (tr > 0) rec_sum += static_cast<double>(m) / tr;
  }
  double p = prec_sum / max_order;
  double r = rec_sum / max_order;
  double b2 = beta * beta;
  double denom = b2 * p + r;
  if (denom <= 0.0) return 0.0;
  return (1.0 + b2) * p * r / denom;
}

double utility_sentence_bleu(const std::vector<std::string>& hyp_tokens,
                             const std::vector<std::string>& ref_tokens, int max_order) {
  if (ref_tokens.empty()) throw std::invalid_argument("utility_sentence_bleu: empty reference");
  if (hyp_tokens.empty()) return 0.0;

  auto tok_ngrams = [](const std::vector<std::string>& toks, int n) {
    std::map<std::string, int> out;
    if (static_cast<int>(toks.size()) < n) return out;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
      std::string key;
      for (int k = 0; k < n; ++k) {
        key += toks[i + k];
        key += '\x1f';
      }
      ++out[key];
    }
    return out;
  };

  double log_prec_sum = 0.0;
  for (int n = 1; n <= max_order; ++n) {
    auto hg = tok_ngrams(hyp_tokens, n);
    auto rg = tok_ngrams(ref_tokens, n);
    int th = total(hg);
    int m = overlap(hg, rg);
    double p;
    if (n == 1) {
      if (th == 0 || m == 0) return 0.0;
      p = static_cast<double>(m) / th;
    } else {
      p = static_cast<double>(m + 1) / (th + 1);  // add-1 smoothing
    }
    log_prec_sum += std::log(p);
  }
  double c = static_cast<double>(hyp_tokens.size());
  double r = static_cast<double>(ref_tokens.size());
  double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_prec_sum / max_order);
}

}  // namespace mbrlab
