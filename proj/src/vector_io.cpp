#include "kgtext/vector_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "kgtext/util.hpp"

namespace kgtext {

VectorTable read_vector_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path.string() + ": empty vector file");
  }
  strip_cr(line);
  int dim = 0;
  if (std::sscanf(line.c_str(), "#dim %d", &dim) != 1 || dim <= 0) {
    throw std::runtime_error(path.string() + ": expected '#dim <d>' header");
  }

  VectorTable table;
  table.dim = dim;
  std::unordered_set<std::string> seen;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    strip_cr(line);
    if (line.empty()) continue;
    const std::string context =
        path.string() + ":" + std::to_string(line_number);
    auto cols = split_tabs(line);
    if (cols.size() != static_cast<std::size_t>(dim) + 1) {
      throw std::runtime_error(context + ": expected " +
                               std::to_string(dim + 1) + " columns, got " +
                               std::to_string(cols.size()));
    }
    std::string key(cols[0]);
    if (!seen.insert(key).second) {
      throw std::runtime_error(context + ": duplicate key '" + key + "'");
    }
    for (int i = 0; i < dim; ++i) {
      std::string cell(cols[static_cast<std::size_t>(i) + 1]);
      char* end = nullptr;
      double v = std::strtod(cell.c_str(), &end);
      if (end != cell.c_str() + cell.size() || cell.empty()) {
        throw std::runtime_error(context + ": bad float '" + cell + "'");
      }
      if (!std::isfinite(v)) {
        throw std::runtime_error(context + ": non-finite value");
      }
      table.data.push_back(v);
    }
    table.keys.push_back(std::move(key));
  }
  return table;
}

void write_vector_tsv(const std::filesystem::path& path,
                      const VectorTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "#dim " << table.dim << '\n';
  char buf[40];
  for (std::size_t i = 0; i < table.rows(); ++i) {
    out << table.keys[i];
    for (double v : table.row(i)) {
      // %.17g round-trips every finite double exactly.
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << '\t' << buf;
    }
    out << '\n';
  }
}

}  // namespace kgtext
