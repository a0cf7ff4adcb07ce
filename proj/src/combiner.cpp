#include "kgtext/combiner.hpp"

#include <cmath>
#include <stdexcept>

#include "kgtext/vector_io.hpp"

namespace kgtext {

namespace {

constexpr std::uint64_t kWindowSalt = 0x77696e64;    // window tokens
constexpr std::uint64_t kHeadSalt = 0x68656164;      // extra head hash
constexpr std::uint64_t kFallbackSalt = 0x66616c6c;  // cancellation fallback
constexpr std::size_t kWindow = 5;

void l2_normalize(std::vector<double>& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
}

// Bucket from the low bits, sign from a high bit, so small dims do not
// correlate the two.
void add_hashed(std::vector<double>& v, std::string_view token,
                std::uint64_t salt, double weight) {
  std::uint64_t h = splitmix64(fnv1a64(token) ^ salt);
  std::size_t bucket = h % v.size();
  double sign = (h >> 61) & 1 ? 1.0 : -1.0;
  v[bucket] += sign * weight;
}

}  // namespace

std::optional<std::size_t> ContextualStore::find(const std::string& key) const {
  auto it = index.find(key);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

ContextualStore load_contextual(const std::filesystem::path& path) {
  VectorTable file = read_vector_tsv(path);
  ContextualStore store;
  store.dim = file.dim;
  store.keys = std::move(file.keys);
  store.data = std::move(file.data);
  for (std::size_t i = 0; i < store.keys.size(); ++i) {
    store.index.emplace(store.keys[i], i);
  }
  return store;
}

std::string mention_key(const Vocabulary& entities,
                        const ContextualMention& mention) {
  return entities.symbol(mention.entity) + "#" +
         std::to_string(mention.mention_id);
}

std::vector<double> pseudo_contextual(const ContextualMention& mention,
                                      int dim, std::uint64_t seed) {
  if (dim <= 0) throw std::invalid_argument("pseudo dim must be positive");
  const TokenizedText& sentence = *mention.sentence;
  if (mention.head_index >= sentence.tokens.size()) {
    throw std::out_of_range("head index outside sentence");
  }
  std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
  const std::uint64_t window_salt = derive_seed(seed, kWindowSalt);
  const std::uint64_t head_salt = derive_seed(seed, kHeadSalt);

  const std::size_t lo =
      mention.head_index >= kWindow ? mention.head_index - kWindow : 0;
  const std::size_t hi =
      std::min(sentence.tokens.size() - 1, mention.head_index + kWindow);
  for (std::size_t i = lo; i <= hi; ++i) {
    add_hashed(v, lower_ascii(sentence.tokens[i]), window_salt, 1.0);
  }
  const std::string head = lower_ascii(sentence.tokens[mention.head_index]);
  add_hashed(v, head, head_salt, 2.0);

  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm == 0.0) {
    std::uint64_t h = splitmix64(fnv1a64(head) ^ derive_seed(seed, kFallbackSalt));
    v[h % v.size()] = 1.0;
    return v;
  }
  l2_normalize(v);
  return v;
}

ContextualStore build_pseudo_store(std::span<const ContextualMention> mentions,
                                   const Vocabulary& entities, int dim,
                                   std::uint64_t seed) {
  ContextualStore store;
  store.dim = dim;
  for (const ContextualMention& m : mentions) {
    std::string key = mention_key(entities, m);
    if (!store.index.emplace(key, store.keys.size()).second) {
      throw std::runtime_error("duplicate mention key '" + key + "'");
    }
    std::vector<double> v = pseudo_contextual(m, dim, seed);
    store.data.insert(store.data.end(), v.begin(), v.end());
    store.keys.push_back(std::move(key));
  }
  return store;
}

std::string_view to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::contextual: return "contextual";
    case FeatureMode::kg: return "kg";
    case FeatureMode::concat: return "concat";
  }
  return "unknown";
}

FeatureMode parse_feature_mode(std::string_view name) {
  if (name == "contextual") return FeatureMode::contextual;
  if (name == "kg") return FeatureMode::kg;
  if (name == "concat") return FeatureMode::concat;
  throw std::invalid_argument("unknown feature mode '" + std::string(name) +
                              "' (expected contextual|kg|concat)");
}

int feature_dim(FeatureMode mode, int contextual_dim, int kg_dim) {
  switch (mode) {
    case FeatureMode::contextual: return contextual_dim;
    case FeatureMode::kg: return kg_dim;
    case FeatureMode::concat: return contextual_dim + kg_dim;
  }
  return 0;
}

namespace {

std::vector<double> contextual_part(const ContextualMention& mention,
                                    const Vocabulary& entities,
                                    const ContextualStore* contextual) {
  if (!contextual) {
    throw std::invalid_argument("contextual store required for this mode");
  }
  std::string key = mention_key(entities, mention);
  auto row = contextual->find(key);
  if (!row) {
    throw std::runtime_error("no contextual vector for mention key '" + key +
                             "'");
  }
  auto span = contextual->row(*row);
  return {span.begin(), span.end()};
}

std::vector<double> kg_part(const ContextualMention& mention,
                            const EmbeddingTable* kg) {
  if (!kg) {
    throw std::invalid_argument("embedding table required for this mode");
  }
  return lookup(*kg, mention.entity);
}

}  // namespace

std::vector<double> features(FeatureMode mode, const ContextualMention& mention,
                             const Vocabulary& entities,
                             const EmbeddingTable* kg,
                             const ContextualStore* contextual,
                             bool normalize_parts) {
  std::vector<double> out;
  if (mode == FeatureMode::contextual || mode == FeatureMode::concat) {
    std::vector<double> part = contextual_part(mention, entities, contextual);
    if (normalize_parts) l2_normalize(part);
    out = std::move(part);
  }
  if (mode == FeatureMode::kg || mode == FeatureMode::concat) {
    std::vector<double> part = kg_part(mention, kg);
    if (normalize_parts) l2_normalize(part);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

}  // namespace kgtext
