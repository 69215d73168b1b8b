#include "mbrlab/prefs.hpp"

#include <stdexcept>

namespace mbrlab {

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kBW: return "BW";
    case Strategy::kBMW: return "BMW";
    case Strategy::kCP: return "CP";
    case Strategy::kCPS: return "CPS";
  }
  throw std::invalid_argument("strategy_name: bad strategy");
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "BW") return Strategy::kBW;
  if (name == "BMW") return Strategy::kBMW;
  if (name == "CP") return Strategy::kCP;
  if (name == "CPS") return Strategy::kCPS;
  throw std::invalid_argument("unknown strategy: " + name);
}

namespace {

// w and l are 1-based ranks into the ordered set.
void emit(std::vector<PreferenceTriplet>& out, const RankedHypothesisSet& r, std::size_t w,
          std::size_t l, const std::string& tag, bool equality_filter) {
  const auto& wh = r.hyps[w - 1];
  const auto& lh = r.hyps[l - 1];
  if (equality_filter && wh.tokens == lh.tokens) return;
  PreferenceTriplet t;
  t.source_id = r.source_id;
  t.source = r.source;
  t.winner = wh.tokens;
  t.loser = lh.tokens;
  t.winner_rank = static_cast<int>(w);
  t.loser_rank = static_cast<int>(l);
  t.winner_score = r.scores[w - 1];
  t.loser_score = r.scores[l - 1];
  t.strategy = tag;
  out.push_back(std::move(t));
}

}  // namespace

std::vector<PreferenceTriplet> select_bw(const RankedHypothesisSet& ranked, bool equality_filter) {
  std::size_t n = ranked.size();
  if (n < 2) throw std::invalid_argument("select_bw: need |H| >= 2");
  std::vector<PreferenceTriplet> out;
  emit(out, ranked, 1, n, "BW", equality_filter);
  return out;
}

std::vector<PreferenceTriplet> select_bmw(const RankedHypothesisSet& ranked, bool equality_filter) {
  std::size_t n = ranked.size();
  if (n < 3) throw std::invalid_argument("select_bmw: need |H| >= 3");
  std::size_t m = (n + 1) / 2;  // ceil(|H| / 2)
  std::vector<PreferenceTriplet> out;
  emit(out, ranked, 1, m, "BMW", equality_filter);
  emit(out, ranked, m, n, "BMW", equality_filter);
  return out;
}

std::vector<PreferenceTriplet> select_cp(const RankedHypothesisSet& ranked, bool equality_filter) {
  std::size_t n = ranked.size();
  if (n < 2) throw std::invalid_argument("select_cp: need |H| >= 2");
  std::vector<PreferenceTriplet> out;
  for (std::size_t i = 1; i < n; ++i) emit(out, ranked, i, i + 1, "CP", equality_filter);
  return out;
}

std::vector<PreferenceTriplet> select_cps(const RankedHypothesisSet& ranked, int stride,
                                          bool equality_filter) {
  if (stride < 1) throw std::invalid_argument("select_cps: stride must be >= 1");
  std::size_t n = ranked.size();
  std::size_t s = static_cast<std::size_t>(stride);
  if (n <= s) throw std::invalid_argument("select_cps: need |H| > stride");
  std::vector<PreferenceTriplet> out;
  std::string tag = "CPS" + std::to_string(stride);
  // No trailing partial pair: stop once the loser index would pass |H|.
  for (std::size_t i = 1; i + s <= n; i += s) emit(out, ranked, i, i + s, tag, equality_filter);
  return out;
}

std::vector<PreferenceTriplet> select(Strategy strategy, const RankedHypothesisSet& ranked,
                                      int stride, bool equality_filter) {
  switch (strategy) {
    case Strategy::kBW: return select_bw(ranked, equality_filter);
    case Strategy::kBMW: return select_bmw(ranked, equality_filter);
    case Strategy::kCP: return select_cp(ranked, equality_filter);
    case Strategy::kCPS: return select_cps(ranked, stride, equality_filter);
  }
  throw std::invalid_argument("select: bad strategy");
}

}  // namespace mbrlab
