#include "mbrlab/records.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mbrlab {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);  // binary: no platform newline games
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  return f;
}

std::vector<json> read_lines(const std::string& path) {
  auto f = open_in(path);
  std::vector<json> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    out.push_back(json::parse(line));
  }
  return out;
}

}  // namespace

void write_corpus_split(const std::string& path, const std::vector<SentencePair>& split,
                        const Vocab& vocab) {
  auto f = open_out(path);
  for (const auto& p : split) {
    json j = {{"id", p.id},
              {"source", vocab.to_symbols(p.source)},
              {"target", vocab.to_symbols(p.target)}};
    f << j.dump() << '\n';
  }
}

std::vector<SentencePair> read_corpus_split(const std::string& path, const Vocab& vocab) {
  std::vector<SentencePair> out;
  for (const auto& j : read_lines(path)) {
    SentencePair p;
    p.id = j.at("id").get<int>();
    p.source = vocab.to_ids(j.at("source").get<std::vector<std::string>>());
    p.target = vocab.to_ids(j.at("target").get<std::vector<std::string>>());
    out.push_back(std::move(p));
  }
  return out;
}

void write_vocab(const std::string& path, const Vocab& vocab) {
  auto f = open_out(path);
  f << json{{"symbols", vocab.symbols}}.dump(2) << '\n';
}

Vocab read_vocab(const std::string& path) {
  auto f = open_in(path);
  json j = json::parse(f);
  return Vocab::from_symbols(j.at("symbols").get<std::vector<std::string>>());
}

void write_hypothesis_sets(const std::string& path,
                           const std::vector<std::pair<int, std::vector<Hypothesis>>>& sets,
                           const Vocab& vocab) {
  auto f = open_out(path);
  for (const auto& [source_id, hyps] : sets) {
    for (const auto& h : hyps) {
      json j = {{"source_id", source_id},
                {"sample_index", h.sample_index},
                {"tokens", vocab.to_symbols(h.tokens)},
                {"logprob", h.logprob},
                {"truncated", h.truncated}};
      f << j.dump() << '\n';
    }
  }
}

std::vector<std::pair<int, std::vector<Hypothesis>>> read_hypothesis_sets(const std::string& path,
                                                                          const Vocab& vocab) {
  std::vector<std::pair<int, std::vector<Hypothesis>>> out;
  for (const auto& j : read_lines(path)) {
    int sid = j.at("source_id").get<int>();
    if (out.empty() || out.back().first != sid) out.push_back({sid, {}});
    Hypothesis h;
    h.sample_index = j.at("sample_index").get<int>();
    h.tokens = vocab.to_ids(j.at("tokens").get<std::vector<std::string>>());
    h.logprob = j.at("logprob").get<double>();
    h.truncated = j.at("truncated").get<bool>();
    out.back().second.push_back(std::move(h));
  }
  return out;
}

void write_ranked_sets(const std::string& path, const std::vector<RankedHypothesisSet>& sets,
                       const Vocab& vocab) {
  auto f = open_out(path);
  for (const auto& s : sets) {
    for (std::size_t r = 0; r < s.hyps.size(); ++r) {
      json j = {{"source_id", s.source_id},
                {"rank", r + 1},
                {"sample_index", s.hyps[r].sample_index},
                {"score", s.scores[r]},
                {"tokens", vocab.to_symbols(s.hyps[r].tokens)}};
      f << j.dump() << '\n';
    }
  }
}

void write_triplets(const std::string& path, const std::vector<PreferenceTriplet>& triplets,
                    const Vocab& vocab) {
  auto f = open_out(path);
  for (const auto& t : triplets) {
    json j = {{"source_id", t.source_id},
              {"source", vocab.to_symbols(t.source)},
              {"winner", vocab.to_symbols(t.winner)},
              {"loser", vocab.to_symbols(t.loser)},
              {"winner_rank", t.winner_rank},
              {"loser_rank", t.loser_rank},
              {"winner_score", t.winner_score},
              {"loser_score", t.loser_score},
              {"strategy", t.strategy}};
    f << j.dump() << '\n';
  }
}

std::vector<PreferenceTriplet> read_triplets(const std::string& path, const Vocab& vocab) {
  std::vector<PreferenceTriplet> out;
  for (const auto& j : read_lines(path)) {
    PreferenceTriplet t;
    t.source_id = j.at("source_id").get<int>();
    t.source = vocab.to_ids(j.at("source").get<std::vector<std::string>>());
    t.winner = vocab.to_ids(j.at("winner").get<std::vector<std::string>>());
    t.loser = vocab.to_ids(j.at("loser").get<std::vector<std::string>>());
    t.winner_rank = j.at("winner_rank").get<int>();
    t.loser_rank = j.at("loser_rank").get<int>();
    t.winner_score = j.at("winner_score").get<double>();
    t.loser_score = j.at("loser_score").get<double>();
    t.strategy = j.at("strategy").get<std::string>();
    out.push_back(std::move(t));
  }
  return out;
}

namespace {
std::string fmt_double(double v) {
  // Shortest round-trip representation, reused for the csv reports.
  return json(v).dump();
}
}  // namespace

void write_margin_trace(const std::string& path, const MarginTrace& trace) {
  auto f = open_out(path);
  f << "step,raw_margin,moving_avg\n";
  for (std::size_t i = 0; i < trace.raw.size(); ++i) {
    f << i << ',' << fmt_double(trace.raw[i]) << ',' << fmt_double(trace.moving_average[i])
      << '\n';
  }
}

void write_heldout_margins(const std::string& path, const MarginTrace& trace) {
  auto f = open_out(path);
  f << "checkpoint_fraction,pair_id,margin\n";
  for (const auto& snap : trace.heldout) {
    for (std::size_t i = 0; i < snap.margins.size(); ++i) {
      f << fmt_double(snap.fraction) << ',' << i << ',' << fmt_double(snap.margins[i]) << '\n';
    }
  }
}

std::string read_text_file(const std::string& path) {
  auto f = open_in(path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  auto f = open_out(path);
  f << content;
}

}  // namespace mbrlab
