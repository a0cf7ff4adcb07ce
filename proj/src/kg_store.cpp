#include "kgtext/kg_store.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace kgtext {

namespace {

std::uint64_t pair_key(std::int32_t a, std::int32_t b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  return out;
}

const std::vector<EntityId> kEmptyAdjacency;

}  // namespace

EntityId Vocabulary::add(std::string_view symbol) {
  auto it = index_.find(symbol);
  if (it != index_.end()) return it->second;
  EntityId id = static_cast<EntityId>(symbols_.size());
  symbols_.emplace_back(symbol);
  index_.emplace(symbols_.back(), id);
  return id;
}

std::optional<EntityId> Vocabulary::find(std::string_view symbol) const {
  auto it = index_.find(symbol);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::symbol(EntityId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= symbols_.size()) {
    throw std::out_of_range("vocabulary id " + std::to_string(id) +
                            " out of range (size " +
                            std::to_string(symbols_.size()) + ")");
  }
  return symbols_[static_cast<std::size_t>(id)];
}

std::vector<Triple> parse_triples(const std::filesystem::path& path,
                                  Vocabulary& entities, Vocabulary& relations,
                                  const ParseOptions& opts,
                                  std::vector<Rejection>* rejections) {
  std::ifstream in = open_input(path);
  std::vector<Triple> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    strip_cr(line);
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 3) {
      throw std::runtime_error(path.string() + ":" +
                               std::to_string(line_number) +
                               ": expected 3 tab-separated columns, got " +
                               std::to_string(cols.size()));
    }
    auto resolve = [&](std::string_view sym, Vocabulary& vocab, bool extend,
                       const char* kind) -> std::optional<EntityId> {
      if (extend) return vocab.add(sym);
      auto id = vocab.find(sym);
      if (!id && rejections) {
        rejections->push_back({line_number,
                               std::string("oov_") + kind + ": " +
                                   std::string(sym),
                               line});
      }
      return id;
    };
    auto s = resolve(cols[0], entities, opts.extend_entities, "entity");
    if (!s) continue;
    auto r = resolve(cols[1], relations, opts.extend_relations, "relation");
    if (!r) continue;
    auto o = resolve(cols[2], entities, opts.extend_entities, "entity");
    if (!o) continue;
    out.push_back({*s, *r, *o});
  }
  return out;
}

void TripleStore::add_split(const std::string& name,
                            std::vector<Triple> triples) {
  splits_[name] = std::move(triples);
  finalized_ = false;
}

void TripleStore::finalize(const std::vector<std::string>& known_fact_splits) {
  objects_by_sr_.clear();
  subjects_by_or_.clear();
  auto index_split = [&](const std::vector<Triple>& triples) {
    for (const Triple& t : triples) {
      objects_by_sr_[pair_key(t.subject, t.relation)].push_back(t.object);
      subjects_by_or_[pair_key(t.object, t.relation)].push_back(t.subject);
    }
  };
  if (known_fact_splits.empty()) {
    for (const auto& [name, triples] : splits_) index_split(triples);
  } else {
    for (const std::string& name : known_fact_splits) index_split(split(name));
  }
  auto dedupe = [](std::unordered_map<std::uint64_t, std::vector<EntityId>>& m) {
    for (auto& [key, ids] : m) {
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    }
  };
  dedupe(objects_by_sr_);
  dedupe(subjects_by_or_);
  finalized_ = true;
}

const std::vector<Triple>& TripleStore::split(const std::string& name) const {
  auto it = splits_.find(name);
  if (it == splits_.end()) {
    throw std::out_of_range("no split named '" + name + "'");
  }
  return it->second;
}

const std::vector<EntityId>& TripleStore::known_objects(
    EntityId subject, RelationId relation) const {
  if (!finalized_) throw std::logic_error("TripleStore not finalized");
  auto it = objects_by_sr_.find(pair_key(subject, relation));
  return it == objects_by_sr_.end() ? kEmptyAdjacency : it->second;
}

const std::vector<EntityId>& TripleStore::known_subjects(
    EntityId object, RelationId relation) const {
  if (!finalized_) throw std::logic_error("TripleStore not finalized");
  auto it = subjects_by_or_.find(pair_key(object, relation));
  return it == subjects_by_or_.end() ? kEmptyAdjacency : it->second;
}

bool TripleStore::contains(const Triple& t) const {
  const auto& objs = known_objects(t.subject, t.relation);
  return std::binary_search(objs.begin(), objs.end(), t.object);
}

TripleStore load_store(const std::filesystem::path& train,
                       const std::filesystem::path& valid,
                       const std::filesystem::path& test,
                       const std::vector<std::string>& known_fact_splits,
                       std::vector<Rejection>* rejections) {
  TripleStore store;
  // Fixed (train, valid, test) order keeps id assignment reproducible.
  const std::pair<const char*, const std::filesystem::path*> files[] = {
      {"train", &train}, {"valid", &valid}, {"test", &test}};
  for (const auto& [name, path] : files) {
    if (path->empty()) continue;
    store.add_split(name, parse_triples(*path, store.entities(),
                                        store.relations(), {}, rejections));
  }
  store.finalize(known_fact_splits);
  return store;
}

const std::string& EntityCatalog::lexicalization(EntityId e) const {
  return lexicalizations_.at(static_cast<std::size_t>(e));
}

const std::string& EntityCatalog::description(EntityId e) const {
  return descriptions_.at(static_cast<std::size_t>(e));
}

const std::vector<TypeId>& EntityCatalog::types(EntityId e) const {
  return types_.at(static_cast<std::size_t>(e));
}

void EntityCatalog::set_lexicalization(EntityId e, std::string v) {
  lexicalizations_.at(static_cast<std::size_t>(e)) = std::move(v);
}

void EntityCatalog::set_description(EntityId e, std::string v) {
  descriptions_.at(static_cast<std::size_t>(e)) = std::move(v);
}

void EntityCatalog::add_type(EntityId e, TypeId t) {
  auto& ts = types_.at(static_cast<std::size_t>(e));
  if (std::find(ts.begin(), ts.end(), t) == ts.end()) ts.push_back(t);
}

bool EntityCatalog::present(EntityId e) const {
  return !lexicalization(e).empty() || !description(e).empty() ||
         !types(e).empty();
}

EntityCatalog parse_entity_metadata(
    const std::filesystem::path& labels_path,
    const std::filesystem::path& types_path,
    const std::filesystem::path& descriptions_path, const Vocabulary& entities,
    std::vector<Rejection>* rejections) {
  EntityCatalog catalog(entities.size());

  // Shared walk over "entity <tab> payload" files. Entities appearing only in
  // metadata but never in the triples are rejected, not added.
  auto for_each_row = [&](const std::filesystem::path& path, auto&& handle) {
    if (path.empty()) return;
    std::ifstream in = open_input(path);
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
      ++line_number;
      strip_cr(line);
      if (line.empty()) continue;
      std::size_t tab = line.find('\t');
      if (tab == std::string::npos) {
        throw std::runtime_error(path.string() + ":" +
                                 std::to_string(line_number) +
                                 ": expected at least 2 tab-separated columns");
      }
      std::string_view sym(line.data(), tab);
      auto id = entities.find(sym);
      if (!id) {
        if (rejections) {
          rejections->push_back(
              {line_number, "oov_entity: " + std::string(sym), line});
        }
        continue;
      }
      handle(*id, std::string_view(line).substr(tab + 1));
    }
  };

  for_each_row(labels_path, [&](EntityId e, std::string_view rest) {
    catalog.set_lexicalization(e, std::string(rest));
  });
  for_each_row(types_path, [&](EntityId e, std::string_view rest) {
    for (std::string_view field : split_tabs(rest)) {
      if (field.empty()) continue;
      catalog.add_type(e, catalog.type_vocab().add(field));
    }
  });
  for_each_row(descriptions_path, [&](EntityId e, std::string_view rest) {
    catalog.set_description(e, std::string(rest));
  });
  return catalog;
}

void write_split_tsv(const TripleStore& store, const std::string& split,
                     const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  for (const Triple& t : store.split(split)) {
    out << store.entities().symbol(t.subject) << '\t'
        << store.relations().symbol(t.relation) << '\t'
        << store.entities().symbol(t.object) << '\n';
  }
}

void write_rejections_tsv(std::span<const Rejection> rejections,
                          const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  for (const Rejection& r : rejections) {
    out << r.line_number << '\t' << r.reason << '\t' << r.raw_line << '\n';
  }
}

nlohmann::json store_stats(const TripleStore& store,
                           const EntityCatalog* catalog) {
  nlohmann::json split_sizes = nlohmann::json::object();
  for (const auto& [name, triples] : store.splits()) {
    split_sizes[name] = triples.size();
  }
  return nlohmann::json{
      {"entities", store.n_entities()},
      {"relations", store.n_relations()},
      {"types", catalog ? catalog->type_vocab().size() : 0},
      {"split_sizes", split_sizes}};
}

}  // namespace kgtext
