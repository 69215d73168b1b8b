#pragma once

#include <string>
#include <vector>

#include "mbrlab/mbr.hpp"

namespace mbrlab {

// One DPO training example: the winner outranks the loser under MBR.
struct PreferenceTriplet {
  int source_id = 0;
  std::vector<int> source;
  std::vector<int> winner;
  std::vector<int> loser;
  int winner_rank = 0;  // 1-based rank in the MBR ordering
  int loser_rank = 0;
  double winner_score = 0.0;
  double loser_score = 0.0;
  std::string strategy;
};

enum class Strategy { kBW, kBMW, kCP, kCPS };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

// All selectors drop triplets whose winner and loser are identical token
// sequences when equality_filter is on (zero DPO margin, no useful gradient).
std::vector<PreferenceTriplet> select_bw(const RankedHypothesisSet& ranked,
                                         bool equality_filter = true);
std::vector<PreferenceTriplet> select_bmw(const RankedHypothesisSet& ranked,
                                          bool equality_filter = true);
std::vector<PreferenceTriplet> select_cp(const RankedHypothesisSet& ranked,
                                         bool equality_filter = true);
std::vector<PreferenceTriplet> select_cps(const RankedHypothesisSet& ranked, int stride,
                                          bool equality_filter = true);

std::vector<PreferenceTriplet> select(Strategy strategy, const RankedHypothesisSet& ranked,
                                      int stride = 1, bool equality_filter = true);

}  // namespace mbrlab
