// Knowledge-graph embedding models (translation, bilinear-diagonal, complex
// bilinear), negative-sampling SGD training, and vector-file import/export.
//
// Numeric conventions pinned here:
//  - the bilinear-diagonal score multiplies (subject*object)*relation per
//    coordinate, which makes its subject/object symmetry bit-exact;
//  - the complex score with all-zero imaginary parts reproduces the
//    bilinear-diagonal score of the real parts exactly;
//  - the logistic loss L2 penalty applies per example to the three rows the
//    example touches.
#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "kgtext/kg_store.hpp"
#include "kgtext/util.hpp"

namespace kgtext {

enum class ModelFamily { transe, distmult, complex_bilinear };
enum class TranseNorm { l1, l2 };

std::string_view to_string(ModelFamily family);
ModelFamily parse_model_family(std::string_view name);

// Complex-valued tables store coordinate i as (cell 2i = real, 2i+1 = imag);
// dim counts cells, so it must be even for that family.
struct EmbeddingTable {
  ModelFamily family = ModelFamily::distmult;
  TranseNorm transe_norm = TranseNorm::l2;
  int dim = 0;
  EntityId n_entities = 0;
  RelationId n_relations = 0;
  std::vector<double> entity_data;    // n_entities x dim, row-major
  std::vector<double> relation_data;  // n_relations x dim, row-major

  std::span<const double> entity(EntityId e) const;
  std::span<double> entity(EntityId e);
  std::span<const double> relation(RelationId r) const;
  std::span<double> relation(RelationId r);
};

struct TrainConfig {
  int dim = 400;
  int epochs = 50;
  double learning_rate = 0.05;
  int batch_size = 128;
  int negatives_per_positive = 10;
  double margin = 1.0;      // translation family only
  double l2_weight = 1e-3;  // logistic-loss families only
  std::uint64_t seed = 0;
  bool deterministic = true;
  TranseNorm transe_norm = TranseNorm::l2;
};

// Higher is better for every family. The translation score is the negated
// L1/L2 distance between subject+relation and object.
double score(const EmbeddingTable& table, const Triple& t);

// Row copy of an entity embedding (complex layout stays interleaved).
std::vector<double> lookup(const EmbeddingTable& table, EntityId entity);

enum class CorruptMode { subject, object, uniform_both };

// Replaces one side with a uniformly drawn entity; redraws (up to a bounded
// retry count, then accepts) while the corruption reproduces a known fact.
Triple negative_sample(const Triple& t, const TripleStore& store,
                       std::mt19937_64& rng,
                       CorruptMode mode = CorruptMode::uniform_both);

// Uniform init in [-0.6/sqrt(dim), 0.6/sqrt(dim)]; translation-family entity
// rows are L2-normalized as the final init step (so training with lr=0
// returns exactly this table).
EmbeddingTable init_table(ModelFamily family, const TrainConfig& config,
                          EntityId n_entities, RelationId n_relations);

struct TrainResult {
  EmbeddingTable table;
  std::vector<double> epoch_mean_loss;  // includes the L2 term where used
};

// Sequential SGD over the train split with uniform both-side corruption.
// Each positive's corruption set is drawn once up front and reused every
// epoch, so the per-epoch objective is fixed (shuffling still randomizes the
// SGD path). Deterministic and bit-reproducible for a fixed seed. Aborts with
// the epoch and batch in the message if a parameter or loss turns NaN/Inf.
TrainResult train(const TripleStore& store, ModelFamily family,
                  const TrainConfig& config);

// --- loss primitives (exposed for finite-difference verification) ---

struct TableGrad {
  std::vector<double> entity_data;
  std::vector<double> relation_data;
};
TableGrad zero_grad(const EmbeddingTable& table);

// max(0, margin + score(neg) - score(pos))
double margin_pair_loss(const EmbeddingTable& table, const Triple& pos,
                        const Triple& neg, double margin);
void add_margin_pair_grad(const EmbeddingTable& table, const Triple& pos,
                          const Triple& neg, double margin, TableGrad& grad);

// softplus(-y*score) + l2*(|e_s|^2 + |w_r|^2 + |e_o|^2), y in {+1,-1}
double logistic_example_loss(const EmbeddingTable& table, const Triple& t,
                             int y, double l2_weight);
void add_logistic_example_grad(const EmbeddingTable& table, const Triple& t,
                               int y, double l2_weight, TableGrad& grad);

double margin_batch_loss(const EmbeddingTable& table,
                         std::span<const std::pair<Triple, Triple>> pairs,
                         double margin);
TableGrad margin_batch_grad(const EmbeddingTable& table,
                            std::span<const std::pair<Triple, Triple>> pairs,
                            double margin);
double logistic_batch_loss(const EmbeddingTable& table,
                           std::span<const std::pair<Triple, int>> examples,
                           double l2_weight);
TableGrad logistic_batch_grad(const EmbeddingTable& table,
                              std::span<const std::pair<Triple, int>> examples,
                              double l2_weight);

// --- vector-file interchange ---

// Writes one row per vocabulary symbol. relation_path may be empty to skip
// the relation table (entity-feature-only consumers).
void export_embeddings(const EmbeddingTable& table, const TripleStore& store,
                       const std::filesystem::path& entity_path,
                       const std::filesystem::path& relation_path);

// Unknown file symbols are rejected (recorded when `rejections` is given);
// vocabulary symbols missing from the file are an error. relation_path may be
// empty, producing a table usable for entity features but not scoring.
EmbeddingTable import_embeddings(const std::filesystem::path& entity_path,
                                 const std::filesystem::path& relation_path,
                                 ModelFamily family, TranseNorm transe_norm,
                                 const TripleStore& store,
                                 std::vector<Rejection>* rejections = nullptr);

}  // namespace kgtext
