#include <string>
#include <vector>

#include "doctest.h"
#include "mbrlab/prefs.hpp"
#include "mbrlab/rng.hpp"

using namespace mbrlab;

namespace {

Vocab letters_vocab() {
  std::vector<std::string> syms;
  for (char c = 'a'; c <= 'f'; ++c) syms.push_back(std::string(1, c));
  return Vocab::build(syms);
}

// Ranked set with strictly decreasing scores and pairwise distinct sequences;
// hypothesis at rank r (1-based) is r tokens long, so rank is recoverable
// from the sequence.
RankedHypothesisSet fake_ranked(std::size_t n) {
  RankedHypothesisSet set;
  set.source_id = 9;
  set.source = {4, 5};
  for (std::size_t r = 1; r <= n; ++r) {
    Hypothesis h;
    h.sample_index = static_cast<int>(r);
    h.tokens.assign(r, 4);
    set.hyps.push_back(std::move(h));
    set.scores.push_back(1.0 - 0.1 * static_cast<double>(r));
  }
  return set;
}

std::vector<std::pair<int, int>> rank_pairs(const std::vector<PreferenceTriplet>& ts) {
  std::vector<std::pair<int, int>> out;
  for (const auto& t : ts) out.emplace_back(t.winner_rank, t.loser_rank);
  return out;
}

}  // namespace

TEST_CASE("BW picks best against worst") {
  auto ts = select_bw(fake_ranked(8));
  CHECK(rank_pairs(ts) == std::vector<std::pair<int, int>>{{1, 8}});
  CHECK(ts[0].winner.size() == 1);
  CHECK(ts[0].loser.size() == 8);
  CHECK(ts[0].strategy == "BW");
  CHECK(ts[0].source_id == 9);
}

TEST_CASE("BMW picks best-middle and middle-worst") {
  auto ts = select_bmw(fake_ranked(8));
  CHECK(rank_pairs(ts) == std::vector<std::pair<int, int>>{{1, 4}, {4, 8}});
  CHECK(select_bmw(fake_ranked(7)).size() == 2);  // m = ceil(7/2) = 4
  CHECK(rank_pairs(select_bmw(fake_ranked(7))) ==
        std::vector<std::pair<int, int>>{{1, 4}, {4, 7}});
}

TEST_CASE("CP emits every consecutive pair") {
  auto ts = select_cp(fake_ranked(8));
  std::vector<std::pair<int, int>> want;
  for (int r = 1; r < 8; ++r) want.emplace_back(r, r + 1);
  CHECK(rank_pairs(ts) == want);
}

TEST_CASE("CPS with stride 2 on 8 hypotheses gives (1,3)(3,5)(5,7)") {
  auto ts = select_cps(fake_ranked(8), 2);
  CHECK(rank_pairs(ts) == std::vector<std::pair<int, int>>{{1, 3}, {3, 5}, {5, 7}});
  CHECK(ts[0].strategy == "CPS2");
}

TEST_CASE("CPS leaves no trailing partial pair") {
  CHECK(rank_pairs(select_cps(fake_ranked(9), 2)) ==
        std::vector<std::pair<int, int>>{{1, 3}, {3, 5}, {5, 7}, {7, 9}});
  CHECK(rank_pairs(select_cps(fake_ranked(8), 3)) ==
        std::vector<std::pair<int, int>>{{1, 4}, {4, 7}});
  CHECK(rank_pairs(select_cps(fake_ranked(8), 7)) ==
        std::vector<std::pair<int, int>>{{1, 8}});
}

TEST_CASE("CPS with stride 1 equals CP on random ranked sets") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    std::size_t n = 2 + rng.next_below(10);
    auto set = fake_ranked(n);
    auto cp = select_cp(set);
    auto cps = select_cps(set, 1);
    REQUIRE(cp.size() == cps.size());
    for (std::size_t i = 0; i < cp.size(); ++i) {
      CHECK(cp[i].winner == cps[i].winner);
      CHECK(cp[i].loser == cps[i].loser);
      CHECK(cp[i].winner_rank == cps[i].winner_rank);
      CHECK(cp[i].loser_rank == cps[i].loser_rank);
    }
  }
}

TEST_CASE("triplet counts for |H|=8 are 1, 2, 7, 3") {
  auto set = fake_ranked(8);
  CHECK(select(Strategy::kBW, set).size() == 1);
  CHECK(select(Strategy::kBMW, set).size() == 2);
  CHECK(select(Strategy::kCP, set).size() == 7);
  CHECK(select(Strategy::kCPS, set, 2).size() == 3);
}

TEST_CASE("winner always outranks loser and carries the better score") {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    std::size_t n = 4 + rng.next_below(8);
    auto set = fake_ranked(n);
    for (Strategy s : {Strategy::kBW, Strategy::kBMW, Strategy::kCP, Strategy::kCPS}) {
      for (const auto& t : select(s, set, 2)) {
        CHECK(t.winner_rank < t.loser_rank);
        CHECK(t.winner_score >= t.loser_score);
        CHECK(t.source == set.source);
      }
    }
  }
}

TEST_CASE("equality filter drops pairs of identical sequences") {
  RankedHypothesisSet set = fake_ranked(4);
  // make ranks 2 and 3 identical token sequences
  set.hyps[2].tokens = set.hyps[1].tokens;
  auto all = select_cp(set, /*equality_filter=*/false);
  auto kept = select_cp(set, /*equality_filter=*/true);
  CHECK(all.size() == 3);
  CHECK(kept.size() == 2);  // the (2,3) pair vanished
  for (const auto& t : kept) CHECK(t.winner != t.loser);
}

TEST_CASE("degenerate set sizes are rejected") {
  CHECK_THROWS(select_bw(fake_ranked(1)));
  CHECK_THROWS(select_bmw(fake_ranked(2)));  // needs a distinct middle
  CHECK_THROWS(select_cps(fake_ranked(4), 0));
  CHECK_THROWS(select_cps(fake_ranked(4), 4));  // stride wider than the set
}

TEST_CASE("strategy names round-trip") {
  for (Strategy s : {Strategy::kBW, Strategy::kBMW, Strategy::kCP, Strategy::kCPS}) {
    CHECK(strategy_from_name(strategy_name(s)) == s);
  }
  CHECK_THROWS(strategy_from_name("RLHF"));
}

TEST_CASE("triplets reference the letter sequences, not indices") {
  Vocab v = letters_vocab();
  auto set = fake_ranked(8);
  auto ts = select_bmw(set);
  // ranks 1, 4, 8 have lengths 1, 4, 8 by construction
  CHECK(ts[0].winner.size() == 1);
  CHECK(ts[0].loser.size() == 4);
  CHECK(ts[1].winner.size() == 4);
  CHECK(ts[1].loser.size() == 8);
  (void)v;
}
