// Shared fixtures for the test suite: deterministic synthetic knowledge
// graphs, corpora with known answers, and independently written brute-force
// oracles for the ranking metrics.
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "kgtext/kg_store.hpp"
#include "kgtext/kge.hpp"
#include "kgtext/util.hpp"

namespace synth {

using namespace kgtext;

// --- filesystem scratch ---

// Unique per-test scratch directory under the system temp root.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("kgtext_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in),
          std::istreambuf_iterator<char>()};
}

// --- synthetic knowledge graphs ---

// Five groups of `per_group` entities. Relation r0 joins every entity of
// group g to every entity of group (g+1)%5, r1 to group (g+2)%5. Triples are
// dealt to splits round-robin: index%10==0 -> test, ==1 -> valid, else train.
// The group structure makes link prediction solvable exactly, and the
// filtered protocol removes the 9 sibling objects of each test triple.
struct GroupKg {
  TripleStore store;
  int groups = 5;
  int per_group = 10;

  int group_of(EntityId e) const { return e / per_group; }
};

inline std::string group_entity(int g, int i) {
  return "g" + std::to_string(g) + "e" + std::to_string(i);
}

inline GroupKg make_group_kg(int per_group = 10) {
  GroupKg kg;
  kg.per_group = per_group;
  std::vector<Triple> train, valid, test;
  auto& ents = kg.store.entities();
  auto& rels = kg.store.relations();
  for (int g = 0; g < kg.groups; ++g) {
    for (int i = 0; i < per_group; ++i) ents.add(group_entity(g, i));
  }
  const RelationId r0 = rels.add("r0");
  const RelationId r1 = rels.add("r1");
  std::size_t index = 0;
  for (int g = 0; g < kg.groups; ++g) {
    for (int i = 0; i < per_group; ++i) {
      for (int j = 0; j < per_group; ++j) {
        for (const auto& [rel, offset] :
             {std::pair{r0, 1}, std::pair{r1, 2}}) {
          const Triple t{
              static_cast<EntityId>(g * per_group + i), rel,
              static_cast<EntityId>(((g + offset) % kg.groups) * per_group +
                                    j)};
          switch (index % 10) {
            case 0: test.push_back(t); break;
            case 1: valid.push_back(t); break;
            default: train.push_back(t); break;
          }
          ++index;
        }
      }
    }
  }
  kg.store.add_split("train", std::move(train));
  kg.store.add_split("valid", std::move(valid));
  kg.store.add_split("test", std::move(test));
  kg.store.finalize();
  return kg;
}

// Directed ring: e_i --next--> e_{(i+1)%n}, all triples in train.
inline TripleStore make_ring_kg(int n) {
  TripleStore store;
  for (int i = 0; i < n; ++i) store.entities().add("e" + std::to_string(i));
  const RelationId next = store.relations().add("next");
  std::vector<Triple> train;
  for (int i = 0; i < n; ++i) {
    train.push_back({static_cast<EntityId>(i), next,
                     static_cast<EntityId>((i + 1) % n)});
  }
  store.add_split("train", std::move(train));
  store.finalize();
  return store;
}

// Uniformly random triples over n_entities/n_relations, deduplicated,
// split round-robin 8/1/1.
inline TripleStore make_random_kg(int n_entities, int n_relations,
                                  std::size_t n_triples, std::uint64_t seed) {
  TripleStore store;
  for (int i = 0; i < n_entities; ++i) {
    store.entities().add("e" + std::to_string(i));
  }
  for (int r = 0; r < n_relations; ++r) {
    store.relations().add("r" + std::to_string(r));
  }
  std::mt19937_64 rng(seed);
  std::set<std::tuple<EntityId, RelationId, EntityId>> seen;
  std::vector<Triple> train, valid, test;
  std::size_t index = 0;
  while (seen.size() < n_triples) {
    const Triple t{
        static_cast<EntityId>(uniform_below(rng, n_entities)),
        static_cast<RelationId>(uniform_below(rng, n_relations)),
        static_cast<EntityId>(uniform_below(rng, n_entities))};
    if (!seen.insert({t.subject, t.relation, t.object}).second) continue;
    switch (index % 10) {
      case 0: test.push_back(t); break;
      case 1: valid.push_back(t); break;
      default: train.push_back(t); break;
    }
    ++index;
  }
  store.add_split("train", std::move(train));
  store.add_split("valid", std::move(valid));
  store.add_split("test", std::move(test));
  store.finalize();
  return store;
}

// --- brute-force metric oracles (written independently of src/metrics) ---

inline double oracle_precision_at_n(const std::vector<int>& ranked,
                                    const std::vector<int>& gold, int n) {
  int hits = 0;
  for (int i = 0; i < n && i < static_cast<int>(ranked.size()); ++i) {
    for (const int g : gold) {
      if (ranked[i] == g) {
        ++hits;
        break;
      }
    }
  }
  return double(hits) / double(n);
}

inline double oracle_ap_at_k(const std::vector<int>& ranked,
                             const std::vector<int>& gold, int k) {
  std::set<int> gold_set(gold.begin(), gold.end());
  double total = 0.0;
  for (int i = 1; i <= k && i <= static_cast<int>(ranked.size()); ++i) {
    if (gold_set.count(ranked[i - 1]) != 0) {
      total += oracle_precision_at_n(ranked, gold, i);
    }
  }
  return total / double(gold_set.size());
}

inline double oracle_rr(const std::vector<int>& ranked,
                        const std::vector<int>& gold) {
  std::set<int> gold_set(gold.begin(), gold.end());
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (gold_set.count(ranked[i]) != 0) return 1.0 / double(i + 1);
  }
  return 0.0;
}

inline double oracle_hits_at_k(const std::vector<std::size_t>& ranks, int k) {
  int hits = 0;
  for (const auto r : ranks) {
    if (static_cast<int>(r) <= k) ++hits;
  }
  return double(hits) / double(ranks.size());
}

// Competition rank with mean-tie placement (rounded up), computed by an
// explicit sort instead of counting.
inline std::size_t oracle_rank(const std::vector<double>& scores,
                               std::size_t true_index,
                               const std::vector<char>& exclude) {
  struct Row {
    double score;
    std::size_t index;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i != true_index && !exclude.empty() && exclude[i] != 0) continue;
    rows.push_back({scores[i], i});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.score > b.score; });
  std::size_t first = 0;
  while (rows[first].score != scores[true_index]) ++first;
  std::size_t last = first;
  while (last + 1 < rows.size() &&
         rows[last + 1].score == scores[true_index]) {
    ++last;
  }
  // Mean of ranks first+1 .. last+1, rounded up.
  const std::size_t twice_mean = (first + 1) + (last + 1);
  return (twice_mean + 1) / 2;
}

// --- misc ---

inline void fill_uniform(std::span<double> values, std::mt19937_64& rng,
                         double lo, double hi) {
  for (double& v : values) v = uniform_range(rng, lo, hi);
}

inline double rel_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / denom;
}

}  // namespace synth
