// Feature assembly for mentions: contextual vectors (loaded or synthesized by
// feature hashing), graph-embedding vectors, or their concatenation
// (contextual part first, then the graph part).
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgtext/corpus.hpp"
#include "kgtext/kge.hpp"

namespace kgtext {

// Mention-keyed vector store; keys are "<entity-symbol>#<mention-id>".
struct ContextualStore {
  int dim = 0;
  std::vector<std::string> keys;
  std::vector<double> data;
  std::unordered_map<std::string, std::size_t> index;

  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
  std::optional<std::size_t> find(const std::string& key) const;
};

// Duplicate keys and dimension mismatches are errors (from the vector file
// reader underneath).
ContextualStore load_contextual(const std::filesystem::path& path);

std::string mention_key(const Vocabulary& entities,
                        const ContextualMention& mention);

// Deterministic stand-in for a sentence encoder: signed feature hashing of
// the tokens within +-5 positions of the head (lowercased), the head token
// hashed once more with a distinct salt at weight 2, then L2-normalized.
// A fully cancelled accumulation falls back to a unit impulse at the head
// bucket so the result always has unit norm.
std::vector<double> pseudo_contextual(const ContextualMention& mention,
                                      int dim, std::uint64_t seed);

ContextualStore build_pseudo_store(std::span<const ContextualMention> mentions,
                                   const Vocabulary& entities, int dim,
                                   std::uint64_t seed);

enum class FeatureMode { contextual, kg, concat };
std::string_view to_string(FeatureMode mode);
FeatureMode parse_feature_mode(std::string_view name);

int feature_dim(FeatureMode mode, int contextual_dim, int kg_dim);

// Assembles the mention's feature vector. Unused sources may be null; a
// needed-but-missing source or contextual key is an error. No rescaling
// unless normalize_parts is set, which L2-normalizes each part before use.
std::vector<double> features(FeatureMode mode, const ContextualMention& mention,
                             const Vocabulary& entities,
                             const EmbeddingTable* kg,
                             const ContextualStore* contextual,
                             bool normalize_parts = false);

}  // namespace kgtext
