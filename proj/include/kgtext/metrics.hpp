// Ranking metrics shared by the evaluation harnesses: precision@n, average
// precision, reciprocal rank, and entity ranking with deterministic tie
// handling (ties take their mean rank, rounded up).
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kgtext/classifier.hpp"
#include "kgtext/kge.hpp"

namespace kgtext {

// One evaluated sample: a full ranking over labels plus its gold set.
struct EvalRecord {
  RankedPrediction prediction;
  std::vector<LabelId> gold;
};

// |top-n of ranked ∩ gold| / n. The divisor is always n, even when fewer
// than n gold labels exist.
double precision_at_n(std::span<const LabelId> ranked,
                      std::span<const LabelId> gold, std::size_t n);

// AP@k = (1/|gold|) * sum over the top k positions i of
// [ranked_i in gold] * precision_at_i. Normalizing by the full gold size
// means AP@k < 1 whenever k < |gold|. Throws on empty gold.
double ap_at_k(std::span<const LabelId> ranked, std::span<const LabelId> gold,
               std::size_t k);

// Reciprocal rank of the first gold label in the ranking; 0 when none appears.
double reciprocal_rank(std::span<const LabelId> ranked,
                       std::span<const LabelId> gold);

double map_at_k(std::span<const EvalRecord> records, std::size_t k);
double mean_reciprocal_rank(std::span<const EvalRecord> records);

// Competition rank of true_index among candidates by descending score.
// Candidates with exclude[j] != 0 are ignored (the true index never is).
// A group of tied scores shares its mean rank, rounded up, so a unique top
// score ranks 1 and a two-way tie at the top ranks 2.
std::size_t rank_entity(std::span<const double> scores, std::size_t true_index,
                        std::span<const char> exclude = {});

enum class RankSide { subject, object };
enum class RankProtocol { raw, filtered };

// Rank of the triple's true entity on the chosen side among all entities as
// candidate replacements, scored by the embedding table. The filtered
// protocol drops candidates that form a known fact with the rest of the
// triple (the true entity always stays). Filtered rank <= raw rank.
std::size_t rank_triple(const EmbeddingTable& table, const Triple& t,
                        RankSide side, RankProtocol protocol,
                        const TripleStore& store);

// Fraction of ranks <= k. Throws on an empty rank list.
double hits_at_k(std::span<const std::size_t> ranks, std::size_t k);
// Mean of 1/rank. Throws on an empty rank list.
double mrr_from_ranks(std::span<const std::size_t> ranks);

struct MetricStat {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};

MetricStat summarize(std::span<const double> values);

}  // namespace kgtext
