#pragma once

#include <map>
#include <string>
#include <vector>

#include "mbrlab/dpo.hpp"
#include "mbrlab/mbr.hpp"
#include "mbrlab/prefs.hpp"
#include "mbrlab/tasks.hpp"

namespace mbrlab {

// Line-delimited JSON records; tokens stored as vocab symbols so the files
// read naturally. All writers are deterministic byte-for-byte.

void write_corpus_split(const std::string& path, const std::vector<SentencePair>& split,
                        const Vocab& vocab);
std::vector<SentencePair> read_corpus_split(const std::string& path, const Vocab& vocab);

void write_vocab(const std::string& path, const Vocab& vocab);
Vocab read_vocab(const std::string& path);

// {source id, sample index, tokens, log-prob} per line, grouped by source.
void write_hypothesis_sets(const std::string& path,
                           const std::vector<std::pair<int, std::vector<Hypothesis>>>& sets,
                           const Vocab& vocab);
std::vector<std::pair<int, std::vector<Hypothesis>>> read_hypothesis_sets(const std::string& path,
                                                                          const Vocab& vocab);

// {source id, rank, sample index, score, tokens} per line.
void write_ranked_sets(const std::string& path, const std::vector<RankedHypothesisSet>& sets,
                       const Vocab& vocab);

void write_triplets(const std::string& path, const std::vector<PreferenceTriplet>& triplets,
                    const Vocab& vocab);
std::vector<PreferenceTriplet> read_triplets(const std::string& path, const Vocab& vocab);

// Columnar margin reports.
void write_margin_trace(const std::string& path, const MarginTrace& trace);
void write_heldout_margins(const std::string& path, const MarginTrace& trace);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace mbrlab
