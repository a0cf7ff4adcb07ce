// Triple store: vocabularies with dense ids, named splits, adjacency over the
// known-fact splits, and entity metadata (lexicalization, description, types).
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgtext/util.hpp"

#include "json.hpp"

namespace kgtext {

// Symbol <-> dense id, ids assigned 0..n-1 in first-occurrence order.
class Vocabulary {
 public:
  EntityId add(std::string_view symbol);
  std::optional<EntityId> find(std::string_view symbol) const;
  const std::string& symbol(EntityId id) const;
  EntityId size() const { return static_cast<EntityId>(symbols_.size()); }
  const std::vector<std::string>& symbols() const { return symbols_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return fnv1a64(s); }
  };
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, EntityId, Hash, std::equal_to<>> index_;
};

struct Triple {
  EntityId subject{};
  RelationId relation{};
  EntityId object{};
  friend bool operator==(const Triple&, const Triple&) = default;
};

// One skipped input line/record. line_number is 1-based for line-oriented
// files and the 0-based record index for record-oriented ones.
struct Rejection {
  std::size_t line_number{};
  std::string reason;
  std::string raw_line;
};

struct ParseOptions {
  bool extend_entities = true;
  bool extend_relations = true;
};

// Parses subject <tab> relation <tab> object, one triple per non-empty line.
// Malformed lines throw; OOV symbols with extension disabled are skipped and
// recorded in `rejections` when given.
std::vector<Triple> parse_triples(const std::filesystem::path& path,
                                  Vocabulary& entities, Vocabulary& relations,
                                  const ParseOptions& opts = {},
                                  std::vector<Rejection>* rejections = nullptr);

class TripleStore {
 public:
  void add_split(const std::string& name, std::vector<Triple> triples);

  // Builds adjacency over the union of `known_fact_splits` (empty = all
  // splits). Must be called after the last add_split.
  void finalize(const std::vector<std::string>& known_fact_splits = {});

  const std::map<std::string, std::vector<Triple>>& splits() const {
    return splits_;
  }
  bool has_split(const std::string& name) const {
    return splits_.count(name) != 0;
  }
  const std::vector<Triple>& split(const std::string& name) const;

  Vocabulary& entities() { return entities_; }
  const Vocabulary& entities() const { return entities_; }
  Vocabulary& relations() { return relations_; }
  const Vocabulary& relations() const { return relations_; }

  EntityId n_entities() const { return entities_.size(); }
  RelationId n_relations() const { return relations_.size(); }

  // Sorted, duplicate-free adjacency lists; empty list when none.
  const std::vector<EntityId>& known_objects(EntityId subject,
                                             RelationId relation) const;
  const std::vector<EntityId>& known_subjects(EntityId object,
                                              RelationId relation) const;
  bool contains(const Triple& t) const;

 private:
  std::map<std::string, std::vector<Triple>> splits_;
  Vocabulary entities_, relations_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> objects_by_sr_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> subjects_by_or_;
  bool finalized_ = false;
};

inline const std::vector<EntityId>& known_objects(const TripleStore& store,
                                                  EntityId s, RelationId r) {
  return store.known_objects(s, r);
}

// Loads train/valid/test files (empty paths skipped) with shared vocabularies
// in that fixed order, then finalizes.
TripleStore load_store(const std::filesystem::path& train,
                       const std::filesystem::path& valid,
                       const std::filesystem::path& test,
                       const std::vector<std::string>& known_fact_splits = {},
                       std::vector<Rejection>* rejections = nullptr);

// Per-entity metadata. Entities never seen in the triple files are not
// represented here; metadata rows for them are rejected at parse time.
class EntityCatalog {
 public:
  explicit EntityCatalog(EntityId n_entities = 0)
      : lexicalizations_(n_entities),
        descriptions_(n_entities),
        types_(n_entities) {}

  EntityId size() const {
    return static_cast<EntityId>(lexicalizations_.size());
  }
  const std::string& lexicalization(EntityId e) const;
  const std::string& description(EntityId e) const;
  const std::vector<TypeId>& types(EntityId e) const;

  void set_lexicalization(EntityId e, std::string v);
  void set_description(EntityId e, std::string v);
  void add_type(EntityId e, TypeId t);

  Vocabulary& type_vocab() { return type_vocab_; }
  const Vocabulary& type_vocab() const { return type_vocab_; }

  // True when the entity appeared in at least one metadata file.
  bool present(EntityId e) const;

 private:
  std::vector<std::string> lexicalizations_;
  std::vector<std::string> descriptions_;
  std::vector<std::vector<TypeId>> types_;
  Vocabulary type_vocab_;
};

// Labels file: entity <tab> lexicalization (rest of line). Types file:
// entity <tab> type [<tab> type ...]. Descriptions file: entity <tab> text
// (rest of line). Any path may be empty. Rows whose entity is not in
// `entities` are rejected.
EntityCatalog parse_entity_metadata(const std::filesystem::path& labels_path,
                                    const std::filesystem::path& types_path,
                                    const std::filesystem::path& descriptions_path,
                                    const Vocabulary& entities,
                                    std::vector<Rejection>* rejections = nullptr);

void write_split_tsv(const TripleStore& store, const std::string& split,
                     const std::filesystem::path& path);
void write_rejections_tsv(std::span<const Rejection> rejections,
                          const std::filesystem::path& path);

// {"entities": n, "relations": n, "types": n, "split_sizes": {...}}
nlohmann::json store_stats(const TripleStore& store,
                           const EntityCatalog* catalog = nullptr);

}  // namespace kgtext
