#pragma once

#include <string>
#include <vector>

namespace mbrlab {

// Symbol table with fixed reserved markers at the front.
struct Vocab {
  static constexpr int kBos = 0;
  static constexpr int kEos = 1;
  static constexpr int kPad = 2;
  static constexpr int kSep = 3;
  static constexpr int kNumReserved = 4;

  std::vector<std::string> symbols;  // index == token id

  // Builds a vocab from content symbols; reserved markers are prepended.
  static Vocab build(const std::vector<std::string>& content);
  // Rebuilds from a full symbol list (e.g. a checkpoint header); validates
  // the reserved markers and uniqueness.
  static Vocab from_symbols(std::vector<std::string> all);

  std::size_t size() const { return symbols.size(); }
  bool is_reserved(int id) const { return id >= 0 && id < kNumReserved; }
  bool valid_id(int id) const {
    return id >= 0 && static_cast<std::size_t>(id) < symbols.size();
  }
  int id_of(const std::string& sym) const;  // throws if unknown

  std::string detok(const std::vector<int>& ids) const;  // space-joined
  std::vector<std::string> to_symbols(const std::vector<int>& ids) const;
  std::vector<int> to_ids(const std::vector<std::string>& syms) const;
};

}  // namespace mbrlab
