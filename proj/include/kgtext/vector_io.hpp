// Keyed dense-vector files: header "#dim <d>", then one row per symbol:
// symbol <tab> d decimal floats. Values are written with enough digits to
// round-trip doubles exactly.
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace kgtext {

struct VectorTable {
  int dim = 0;
  std::vector<std::string> keys;
  std::vector<double> data;  // row-major, keys.size() x dim

  std::size_t rows() const { return keys.size(); }
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
};

// Throws on missing/garbled header, arity or dimension mismatch, non-numeric
// cells, duplicate keys, or non-finite values.
VectorTable read_vector_tsv(const std::filesystem::path& path);

void write_vector_tsv(const std::filesystem::path& path,
                      const VectorTable& table);

}  // namespace kgtext
