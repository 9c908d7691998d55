#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fractal {

// A word addresses a cell: the empty word is the whole set, symbol i
// descends into the i-th contraction's image. Lexicographic order over
// words of one level is the canonical enumeration everywhere.
struct Word {
  std::vector<uint8_t> symbols;

  Word() = default;
  explicit Word(std::vector<uint8_t> s) : symbols(std::move(s)) {}

  int level() const { return static_cast<int>(symbols.size()); }
  bool empty() const { return symbols.empty(); }

  Word concat(const Word& o) const {
    Word w = *this;
    w.symbols.insert(w.symbols.end(), o.symbols.begin(), o.symbols.end());
    return w;
  }

  Word child(uint8_t i) const {
    Word w = *this;
    w.symbols.push_back(i);
    return w;
  }

  bool operator==(const Word& o) const { return symbols == o.symbols; }
  bool operator<(const Word& o) const {
    if (symbols.size() != o.symbols.size()) return symbols.size() < o.symbols.size();
    return symbols < o.symbols;
  }

  std::string str() const {
    static const char* digits = "0123456789abcdefghijklmnopqrstuvwxyz";
    std::string s;
    for (uint8_t c : symbols) s += digits[c];
    return s.empty() ? "-" : s;  // "-" renders the empty word
  }

  static Word parse(const std::string& s, int nsym) {
    if (s == "-" || s.empty()) return Word();
    std::vector<uint8_t> out;
    for (char c : s) {
      int v;
      if (c >= '0' && c <= '9') v = c - '0';
      else if (c >= 'a' && c <= 'z') v = 10 + (c - 'a');
      else throw std::invalid_argument("bad word character");
      if (v >= nsym) throw std::invalid_argument("word symbol out of range");
      out.push_back(static_cast<uint8_t>(v));
    }
    return Word(out);
  }
};

// Rank of a level-m word in lexicographic order, and back.
inline size_t word_rank(const Word& w, int nsym) {
  size_t r = 0;
  for (uint8_t c : w.symbols) r = r * nsym + c;
  return r;
}

inline Word word_at(int level, size_t rank, int nsym) {
  std::vector<uint8_t> s(level);
  for (int k = level - 1; k >= 0; --k) {
    s[k] = static_cast<uint8_t>(rank % nsym);
    rank /= nsym;
  }
  return Word(std::move(s));
}

inline size_t cell_count(int level, int nsym) {
  size_t n = 1;
  for (int i = 0; i < level; ++i) n *= nsym;
  return n;
}

}  // namespace fractal
