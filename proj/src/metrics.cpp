#include "kgtext/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace kgtext {
namespace {

std::unordered_set<LabelId> to_set(std::span<const LabelId> gold) {
  return {gold.begin(), gold.end()};
}

}  // namespace

double precision_at_n(std::span<const LabelId> ranked,
                      std::span<const LabelId> gold, std::size_t n) {
  if (n == 0) throw std::invalid_argument("precision@0 is undefined");
  const auto gold_set = to_set(gold);
  std::size_t hits = 0;
  const std::size_t limit = std::min(n, ranked.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (gold_set.contains(ranked[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

double ap_at_k(std::span<const LabelId> ranked, std::span<const LabelId> gold,
               std::size_t k) {
  if (gold.empty()) {
    throw std::invalid_argument("average precision needs a non-empty gold set");
  }
  const auto gold_set = to_set(gold);
  const std::size_t limit = std::min(k, ranked.size());
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < limit; ++i) {
    if (gold_set.contains(ranked[i])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(gold_set.size());
}

double reciprocal_rank(std::span<const LabelId> ranked,
                       std::span<const LabelId> gold) {
  const auto gold_set = to_set(gold);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (gold_set.contains(ranked[i])) {
      return 1.0 / static_cast<double>(i + 1);
    }
  }
  return 0.0;
}

double map_at_k(std::span<const EvalRecord> records, std::size_t k) {
  if (records.empty()) {
    throw std::invalid_argument("mean average precision over zero records");
  }
  double sum = 0.0;
  for (const auto& record : records) {
    sum += ap_at_k(record.prediction.labels, record.gold, k);
  }
  return sum / static_cast<double>(records.size());
}

double mean_reciprocal_rank(std::span<const EvalRecord> records) {
  if (records.empty()) {
    throw std::invalid_argument("mean reciprocal rank over zero records");
  }
  double sum = 0.0;
  for (const auto& record : records) {
    sum += reciprocal_rank(record.prediction.labels, record.gold);
  }
  return sum / static_cast<double>(records.size());
}

std::size_t rank_entity(std::span<const double> scores, std::size_t true_index,
                        std::span<const char> exclude) {
  if (true_index >= scores.size()) {
    throw std::invalid_argument("true index outside candidate list");
  }
  if (!exclude.empty() && exclude.size() != scores.size()) {
    throw std::invalid_argument("exclusion mask size mismatch");
  }
  const double target = scores[true_index];
  std::size_t greater = 0;
  std::size_t tied = 0;  // includes the true candidate itself
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (j != true_index && !exclude.empty() && exclude[j] != 0) continue;
    if (scores[j] > target) {
      ++greater;
    } else if (scores[j] == target) {
      ++tied;
    }
  }
  // Tied block occupies ranks greater+1 .. greater+tied; its mean rank is
  // greater + (tied+1)/2, rounded up.
  return greater + (tied + 2) / 2;
}

std::size_t rank_triple(const EmbeddingTable& table, const Triple& t,
                        RankSide side, RankProtocol protocol,
                        const TripleStore& store) {
  const std::size_t n = static_cast<std::size_t>(table.n_entities);
  const EntityId true_entity = side == RankSide::subject ? t.subject : t.object;
  std::vector<double> scores(n);
  Triple candidate = t;
  EntityId& slot =
      side == RankSide::subject ? candidate.subject : candidate.object;
  for (std::size_t e = 0; e < n; ++e) {
    slot = static_cast<EntityId>(e);
    scores[e] = score(table, candidate);
  }
  std::vector<char> exclude;
  if (protocol == RankProtocol::filtered) {
    exclude.assign(n, 0);
    const auto& known = side == RankSide::subject
                            ? store.known_subjects(t.object, t.relation)
                            : store.known_objects(t.subject, t.relation);
    for (const EntityId e : known) {
      exclude[static_cast<std::size_t>(e)] = 1;
    }
    exclude[static_cast<std::size_t>(true_entity)] = 0;
  }
  return rank_entity(scores, static_cast<std::size_t>(true_entity), exclude);
}

double hits_at_k(std::span<const std::size_t> ranks, std::size_t k) {
  if (ranks.empty()) throw std::invalid_argument("hits@k over zero ranks");
  std::size_t hits = 0;
  for (const std::size_t r : ranks) {
    if (r <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mrr_from_ranks(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw std::invalid_argument("mrr over zero ranks");
  double sum = 0.0;
  for (const std::size_t r : ranks) {
    if (r == 0) throw std::invalid_argument("rank 0 is not a valid rank");
    sum += 1.0 / static_cast<double>(r);
  }
  return sum / static_cast<double>(ranks.size());
}

MetricStat summarize(std::span<const double> values) {
  if (values.empty()) {
    throw std::invalid_argument("summary of zero values");
  }
  MetricStat stat;
  for (const double v : values) stat.mean += v;
  stat.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (const double v : values) {
    const double d = v - stat.mean;
    var += d * d;
  }
  stat.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return stat;
}

}  // namespace kgtext
