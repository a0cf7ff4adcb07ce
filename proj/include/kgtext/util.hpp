// Small shared primitives: id types, stable hashing, reproducible rng helpers,
// string utilities. Everything here must behave identically across runs and
// platforms, so no std::hash and no std::uniform_*_distribution.
#pragma once

#include <cctype>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace kgtext {

using EntityId = std::int32_t;
using RelationId = std::int32_t;
using TypeId = std::int32_t;
using LabelId = std::int32_t;

// FNV-1a 64-bit.
inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Independent seed for a named sub-stream of a run seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

// [0,1) from the top 53 bits of the engine output.
inline double uniform_unit(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(g);
}

// Unbiased integer in [0, n); n must be > 0.
inline std::uint64_t uniform_below(std::mt19937_64& g, std::uint64_t n) {
  const std::uint64_t limit = ~0ull - ~0ull % n;
  std::uint64_t x = g();
  while (x >= limit) x = g();
  return x % n;
}

// Fisher-Yates with the helpers above (std::shuffle is implementation-defined).
template <typename T>
void shuffle_vector(std::vector<T>& v, std::mt19937_64& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_below(g, i)]);
  }
}

// ASCII-only classification; multi-byte UTF-8 units pass through untouched.
inline bool is_ascii_punct(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return u < 128 && std::ispunct(u) != 0;
}

inline bool is_ascii_upper(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return u < 128 && std::isupper(u) != 0;
}

inline bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

inline char lower_ascii(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return u < 128 ? static_cast<char>(std::tolower(u)) : c;
}

inline std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = lower_ascii(c);
  return out;
}

inline bool punct_only(std::string_view tok) {
  if (tok.empty()) return false;
  for (char c : tok) {
    if (!is_ascii_punct(c)) return false;
  }
  return true;
}

inline std::vector<std::string_view> split_char(std::string_view line,
                                                char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  return split_char(line, '\t');
}

// Drop a trailing '\r' so CRLF inputs parse like LF inputs.
inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace kgtext
