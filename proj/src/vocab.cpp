#include "mbrlab/vocab.hpp"

#include <stdexcept>
#include <unordered_set>

namespace mbrlab {

namespace {
const char* kReserved[Vocab::kNumReserved] = {"<bos>", "<eos>", "<pad>", "<sep>"};

void validate(const std::vector<std::string>& symbols) {
  if (symbols.size() < Vocab::kNumReserved) {
    throw std::invalid_argument("Vocab: missing reserved markers");
  }
  for (int i = 0; i < Vocab::kNumReserved; ++i) {
    if (symbols[i] != kReserved[i]) {
      throw std::invalid_argument("Vocab: reserved marker mismatch at id " + std::to_string(i));
    }
  }
  std::unordered_set<std::string> seen;
  for (const auto& s : symbols) {
    if (!seen.insert(s).second) throw std::invalid_argument("Vocab: duplicate symbol " + s);
  }
}
}  // namespace

Vocab Vocab::build(const std::vector<std::string>& content) {
  Vocab v;
  for (const char* r : kReserved) v.symbols.emplace_back(r);
  v.symbols.insert(v.symbols.end(), content.begin(), content.end());
  validate(v.symbols);
  return v;
}

Vocab Vocab::from_symbols(std::vector<std::string> all) {
  validate(all);
  Vocab v;
  v.symbols = std::move(all);
  return v;
}

int Vocab::id_of(const std::string& sym) const {
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] == sym) return static_cast<int>(i);
  }
  throw std::invalid_argument("Vocab: unknown symbol " + sym);
}

std::string Vocab::detok(const std::vector<int>& ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!valid_id(ids[i])) throw std::invalid_argument("Vocab: id out of range");
    if (i) out += ' ';
    out += symbols[ids[i]];
  }
  return out;
}

std::vector<std::string> Vocab::to_symbols(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (!valid_id(id)) throw std::invalid_argument("Vocab: id out of range");
    out.push_back(symbols[id]);
  }
  return out;
}

std::vector<int> Vocab::to_ids(const std::vector<std::string>& syms) const {
  std::vector<int> out;
  out.reserve(syms.size());
  for (const auto& s : syms) out.push_back(id_of(s));
  return out;
}

}  // namespace mbrlab
