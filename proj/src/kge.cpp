#include "kgtext/kge.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "kgtext/vector_io.hpp"

namespace kgtext {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;
constexpr std::uint64_t kShuffleStream = 0x73687566;
constexpr std::uint64_t kNegativeStream = 0x6e656773;
constexpr int kNegativeRetries = 100;

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  // log(1 + e^x), stable for large |x|.
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

std::span<const double> table_row(const std::vector<double>& data, int dim,
                                  std::int64_t i, std::int64_t n,
                                  const char* kind) {
  if (i < 0 || i >= n) {
    throw std::out_of_range(std::string(kind) + " id " + std::to_string(i) +
                            " out of range (count " + std::to_string(n) + ")");
  }
  return {data.data() + static_cast<std::size_t>(i) * dim,
          static_cast<std::size_t>(dim)};
}

// Score gradients w.r.t. the subject, relation and object rows. Any grad
// pointer may be null. Returns the score.
double score_grad(const EmbeddingTable& table, const Triple& t, double* gs,
                  double* gr, double* go) {
  const auto s = table.entity(t.subject);
  const auto r = table.relation(t.relation);
  const auto o = table.entity(t.object);
  const int d = table.dim;

  switch (table.family) {
    case ModelFamily::transe: {
      double norm = 0.0;
      if (table.transe_norm == TranseNorm::l2) {
        for (int i = 0; i < d; ++i) {
          double v = (s[i] + r[i]) - o[i];
          norm += v * v;
        }
        norm = std::sqrt(norm);
        if (gs) {
          for (int i = 0; i < d; ++i) {
            double v = (s[i] + r[i]) - o[i];
            double g = norm > 0 ? -v / norm : 0.0;
            gs[i] = g;
            gr[i] = g;
            go[i] = -g;
          }
        }
      } else {
        for (int i = 0; i < d; ++i) {
          double v = (s[i] + r[i]) - o[i];
          norm += std::abs(v);
          if (gs) {
            double sign = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
            gs[i] = -sign;
            gr[i] = -sign;
            go[i] = sign;
          }
        }
      }
      return -norm;
    }
    case ModelFamily::distmult: {
      double acc = 0.0;
      for (int i = 0; i < d; ++i) {
        acc += (s[i] * o[i]) * r[i];  // entity pair first: exact symmetry
        if (gs) {
          gs[i] = o[i] * r[i];
          gr[i] = s[i] * o[i];
          go[i] = s[i] * r[i];
        }
      }
      return acc;
    }
    case ModelFamily::complex_bilinear: {
      double acc = 0.0;
      for (int i = 0; i + 1 < d; i += 2) {
        const double sr = s[i], si = s[i + 1];
        const double rr = r[i], ri = r[i + 1];
        const double or_ = o[i], oi = o[i + 1];
        // Re(s * r * conj(o)); the first term matches the bilinear-diagonal
        // evaluation order so zero imaginary parts reproduce it exactly.
        acc += (sr * or_ + si * oi) * rr + (sr * oi - si * or_) * ri;
        if (gs) {
          gs[i] = or_ * rr + oi * ri;
          gs[i + 1] = oi * rr - or_ * ri;
          gr[i] = sr * or_ + si * oi;
          gr[i + 1] = sr * oi - si * or_;
          go[i] = sr * rr - si * ri;
          go[i + 1] = si * rr + sr * ri;
        }
      }
      return acc;
    }
  }
  throw std::logic_error("unreachable model family");
}

// Gathers per-row gradient contributions for one SGD step; rows shared
// between the triples of a step (and self-loop triples) accumulate into a
// single slot so the applied update matches the analytic gradient.
class RowAccumulator {
 public:
  explicit RowAccumulator(int dim) : dim_(dim) {
    for (Slot& s : slots_) s.grad.assign(static_cast<std::size_t>(dim), 0.0);
  }

  void clear() {
    for (int i = 0; i < used_; ++i) {
      std::fill(slots_[i].grad.begin(), slots_[i].grad.end(), 0.0);
    }
    used_ = 0;
  }

  double* slot(bool is_entity, std::int32_t id) {
    for (int i = 0; i < used_; ++i) {
      if (slots_[i].is_entity == is_entity && slots_[i].id == id) {
        return slots_[i].grad.data();
      }
    }
    Slot& s = slots_[used_++];
    s.is_entity = is_entity;
    s.id = id;
    return s.grad.data();
  }

  void add(bool is_entity, std::int32_t id, const double* g, double scale) {
    double* acc = slot(is_entity, id);
    for (int i = 0; i < dim_; ++i) acc[i] += scale * g[i];
  }

  void add_l2(bool is_entity, std::int32_t id, std::span<const double> row,
              double l2_weight) {
    double* acc = slot(is_entity, id);
    for (int i = 0; i < dim_; ++i) acc[i] += 2.0 * l2_weight * row[i];
  }

  // theta -= lr * grad, verifying the result stays finite.
  void apply(EmbeddingTable& table, double lr, int epoch,
             std::size_t batch) const {
    for (int i = 0; i < used_; ++i) {
      const Slot& s = slots_[i];
      auto row = s.is_entity ? table.entity(s.id) : table.relation(s.id);
      for (int j = 0; j < dim_; ++j) {
        row[j] -= lr * s.grad[j];
        if (!std::isfinite(row[j])) {
          throw std::runtime_error(
              "training diverged: non-finite parameter at epoch " +
              std::to_string(epoch) + ", batch " + std::to_string(batch));
        }
      }
    }
  }

 private:
  struct Slot {
    bool is_entity = false;
    std::int32_t id = -1;
    std::vector<double> grad;
  };
  int dim_;
  std::array<Slot, 6> slots_;
  int used_ = 0;
};

void check_loss_finite(double loss, int epoch, std::size_t batch) {
  if (!std::isfinite(loss)) {
    throw std::runtime_error("training diverged: non-finite loss at epoch " +
                             std::to_string(epoch) + ", batch " +
                             std::to_string(batch));
  }
}

void renormalize_entities(EmbeddingTable& table) {
  for (EntityId e = 0; e < table.n_entities; ++e) {
    auto row = table.entity(e);
    double norm = 0.0;
    for (double v : row) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (double& v : row) v /= norm;
    }
  }
}

void validate_config(ModelFamily family, const TrainConfig& cfg) {
  if (cfg.dim <= 0) throw std::invalid_argument("dim must be positive");
  if (family == ModelFamily::complex_bilinear && cfg.dim % 2 != 0) {
    throw std::invalid_argument(
        "complex embeddings need an even cell count, got dim=" +
        std::to_string(cfg.dim));
  }
  if (cfg.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (cfg.learning_rate < 0) {
    throw std::invalid_argument("learning_rate must be >= 0");
  }
  if (cfg.batch_size <= 0) {
    throw std::invalid_argument("batch_size must be positive");
  }
  if (cfg.negatives_per_positive < 1) {
    throw std::invalid_argument("negatives_per_positive must be >= 1");
  }
  if (cfg.margin < 0) throw std::invalid_argument("margin must be >= 0");
  if (cfg.l2_weight < 0) throw std::invalid_argument("l2_weight must be >= 0");
}

}  // namespace

std::string_view to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::transe: return "transe";
    case ModelFamily::distmult: return "distmult";
    case ModelFamily::complex_bilinear: return "complex";
  }
  return "unknown";
}

ModelFamily parse_model_family(std::string_view name) {
  if (name == "transe") return ModelFamily::transe;
  if (name == "distmult") return ModelFamily::distmult;
  if (name == "complex") return ModelFamily::complex_bilinear;
  throw std::invalid_argument("unknown model family '" + std::string(name) +
                              "' (expected transe|distmult|complex)");
}

std::span<const double> EmbeddingTable::entity(EntityId e) const {
  return table_row(entity_data, dim, e, n_entities, "entity");
}
std::span<double> EmbeddingTable::entity(EntityId e) {
  auto row = table_row(entity_data, dim, e, n_entities, "entity");
  return {const_cast<double*>(row.data()), row.size()};
}
std::span<const double> EmbeddingTable::relation(RelationId r) const {
  return table_row(relation_data, dim, r, n_relations, "relation");
}
std::span<double> EmbeddingTable::relation(RelationId r) {
  auto row = table_row(relation_data, dim, r, n_relations, "relation");
  return {const_cast<double*>(row.data()), row.size()};
}

double score(const EmbeddingTable& table, const Triple& t) {
  return score_grad(table, t, nullptr, nullptr, nullptr);
}

std::vector<double> lookup(const EmbeddingTable& table, EntityId entity) {
  auto row = table.entity(entity);
  return {row.begin(), row.end()};
}

Triple negative_sample(const Triple& t, const TripleStore& store,
                       std::mt19937_64& rng, CorruptMode mode) {
  const EntityId n = store.n_entities();
  if (n <= 0) throw std::invalid_argument("store has no entities");
  bool corrupt_subject = mode == CorruptMode::subject ||
                         (mode == CorruptMode::uniform_both &&
                          uniform_below(rng, 2) == 0);
  Triple candidate = t;
  for (int attempt = 0; attempt < kNegativeRetries; ++attempt) {
    EntityId e = static_cast<EntityId>(uniform_below(rng, n));
    if (corrupt_subject) {
      candidate.subject = e;
    } else {
      candidate.object = e;
    }
    if (!store.contains(candidate)) break;
  }
  return candidate;
}

EmbeddingTable init_table(ModelFamily family, const TrainConfig& config,
                          EntityId n_entities, RelationId n_relations) {
  validate_config(family, config);
  EmbeddingTable table;
  table.family = family;
  table.transe_norm = config.transe_norm;
  table.dim = config.dim;
  table.n_entities = n_entities;
  table.n_relations = n_relations;
  table.entity_data.resize(static_cast<std::size_t>(n_entities) * config.dim);
  table.relation_data.resize(static_cast<std::size_t>(n_relations) *
                             config.dim);

  const double bound = 0.6 / std::sqrt(static_cast<double>(config.dim));
  std::mt19937_64 rng(derive_seed(config.seed, kInitStream));
  for (double& v : table.entity_data) v = uniform_range(rng, -bound, bound);
  for (double& v : table.relation_data) v = uniform_range(rng, -bound, bound);
  if (family == ModelFamily::transe) {
    renormalize_entities(table);
  }
  return table;
}

TrainResult train(const TripleStore& store, ModelFamily family,
                  const TrainConfig& config) {
  validate_config(family, config);
  if (!store.has_split("train") || store.split("train").empty()) {
    throw std::invalid_argument("train split is missing or empty");
  }
  const std::vector<Triple>& triples = store.split("train");

  TrainResult result;
  result.table =
      init_table(family, config, store.n_entities(), store.n_relations());
  EmbeddingTable& table = result.table;

  // config.deterministic=false permits parallel batches by contract; this
  // trainer always runs the sequential path, which satisfies both modes.
  std::mt19937_64 shuffle_rng(derive_seed(config.seed, kShuffleStream));
  std::mt19937_64 neg_rng(derive_seed(config.seed, kNegativeStream));

  std::vector<std::size_t> order(triples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  // Corruption sets are drawn once and reused every epoch, so all epochs
  // minimize one fixed objective (epoch order still shuffles the SGD path).
  const int negs = config.negatives_per_positive;
  std::vector<Triple> negatives;
  negatives.reserve(triples.size() * static_cast<std::size_t>(negs));
  for (const Triple& pos : triples) {
    for (int k = 0; k < negs; ++k) {
      negatives.push_back(negative_sample(pos, store, neg_rng));
    }
  }

  const int d = table.dim;
  std::vector<double> gs(d), gr(d), go(d), gs2(d), gr2(d), go2(d);
  RowAccumulator acc(d);

  const double lr = config.learning_rate;
  const double l2 = config.l2_weight;
  const bool margin_loss = family == ModelFamily::transe;

  // One SGD step for a single logistic example (t, y).
  auto logistic_step = [&](const Triple& t, int y, int epoch,
                           std::size_t batch) {
    double s = score_grad(table, t, gs.data(), gr.data(), go.data());
    double c = -y * sigmoid(-y * s);
    double loss = softplus(-y * s);
    acc.clear();
    acc.add(true, t.subject, gs.data(), c);
    acc.add(false, t.relation, gr.data(), c);
    acc.add(true, t.object, go.data(), c);
    if (l2 > 0) {
      const std::pair<bool, std::int32_t> rows[] = {
          {true, t.subject}, {false, t.relation}, {true, t.object}};
      for (const auto& [is_entity, id] : rows) {
        std::span<const double> row =
            is_entity ? std::as_const(table).entity(id)
                      : std::as_const(table).relation(id);
        double sq = 0.0;
        for (double v : row) sq += v * v;
        loss += l2 * sq;
        acc.add_l2(is_entity, id, row, l2);
      }
    }
    check_loss_finite(loss, epoch, batch);
    acc.apply(table, lr, epoch, batch);
    return loss;
  };

  // One SGD step for a (positive, negative) margin pair.
  auto margin_step = [&](const Triple& pos, const Triple& neg, int epoch,
                         std::size_t batch) {
    double sp = score_grad(table, pos, gs.data(), gr.data(), go.data());
    double sn = score_grad(table, neg, gs2.data(), gr2.data(), go2.data());
    double v = config.margin + sn - sp;
    double loss = v > 0 ? v : 0.0;
    check_loss_finite(loss, epoch, batch);
    if (v > 0) {
      acc.clear();
      acc.add(true, pos.subject, gs.data(), -1.0);
      acc.add(false, pos.relation, gr.data(), -1.0);
      acc.add(true, pos.object, go.data(), -1.0);
      acc.add(true, neg.subject, gs2.data(), 1.0);
      acc.add(false, neg.relation, gr2.data(), 1.0);
      acc.add(true, neg.object, go2.data(), 1.0);
      acc.apply(table, lr, epoch, batch);
    }
    return loss;
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_vector(order, shuffle_rng);
    double loss_sum = 0.0;
    std::size_t loss_terms = 0;

    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t batch = begin / config.batch_size;
      const std::size_t end = std::min(
          order.size(), begin + static_cast<std::size_t>(config.batch_size));
      for (std::size_t i = begin; i < end; ++i) {
        const Triple& pos = triples[order[i]];
        if (!margin_loss) {
          loss_sum += logistic_step(pos, +1, epoch, batch);
          ++loss_terms;
        }
        for (int k = 0; k < negs; ++k) {
          const Triple& neg =
              negatives[order[i] * static_cast<std::size_t>(negs) + k];
          loss_sum += margin_loss ? margin_step(pos, neg, epoch, batch)
                                  : logistic_step(neg, -1, epoch, batch);
          ++loss_terms;
        }
      }
    }

    // Renormalization is part of the update rule: with a zero step size the
    // epoch is the identity and must return the initialization bit-for-bit.
    if (family == ModelFamily::transe && lr > 0) {
      renormalize_entities(table);
    }
    result.epoch_mean_loss.push_back(
        loss_terms ? loss_sum / static_cast<double>(loss_terms) : 0.0);
  }

  for (double v : table.entity_data) {
    if (!std::isfinite(v)) throw std::runtime_error("non-finite entity table");
  }
  for (double v : table.relation_data) {
    if (!std::isfinite(v)) {
      throw std::runtime_error("non-finite relation table");
    }
  }
  return result;
}

TableGrad zero_grad(const EmbeddingTable& table) {
  return {std::vector<double>(table.entity_data.size(), 0.0),
          std::vector<double>(table.relation_data.size(), 0.0)};
}

namespace {

void grad_add(TableGrad& grad, const EmbeddingTable& table, bool is_entity,
              std::int32_t id, const double* g, double scale) {
  std::vector<double>& data =
      is_entity ? grad.entity_data : grad.relation_data;
  double* row = data.data() + static_cast<std::size_t>(id) * table.dim;
  for (int i = 0; i < table.dim; ++i) row[i] += scale * g[i];
}

}  // namespace

double margin_pair_loss(const EmbeddingTable& table, const Triple& pos,
                        const Triple& neg, double margin) {
  double v = margin + score(table, neg) - score(table, pos);
  return v > 0 ? v : 0.0;
}

void add_margin_pair_grad(const EmbeddingTable& table, const Triple& pos,
                          const Triple& neg, double margin, TableGrad& grad) {
  const int d = table.dim;
  std::vector<double> gs(d), gr(d), go(d), gs2(d), gr2(d), go2(d);
  double sp = score_grad(table, pos, gs.data(), gr.data(), go.data());
  double sn = score_grad(table, neg, gs2.data(), gr2.data(), go2.data());
  if (margin + sn - sp <= 0) return;
  grad_add(grad, table, true, pos.subject, gs.data(), -1.0);
  grad_add(grad, table, false, pos.relation, gr.data(), -1.0);
  grad_add(grad, table, true, pos.object, go.data(), -1.0);
  grad_add(grad, table, true, neg.subject, gs2.data(), 1.0);
  grad_add(grad, table, false, neg.relation, gr2.data(), 1.0);
  grad_add(grad, table, true, neg.object, go2.data(), 1.0);
}

double logistic_example_loss(const EmbeddingTable& table, const Triple& t,
                             int y, double l2_weight) {
  double loss = softplus(-y * score(table, t));
  if (l2_weight > 0) {
    for (std::span<const double> row :
         {table.entity(t.subject), table.relation(t.relation),
          table.entity(t.object)}) {
      double sq = 0.0;
      for (double v : row) sq += v * v;
      loss += l2_weight * sq;
    }
  }
  return loss;
}

void add_logistic_example_grad(const EmbeddingTable& table, const Triple& t,
                               int y, double l2_weight, TableGrad& grad) {
  const int d = table.dim;
  std::vector<double> gs(d), gr(d), go(d);
  double s = score_grad(table, t, gs.data(), gr.data(), go.data());
  double c = -y * sigmoid(-y * s);
  grad_add(grad, table, true, t.subject, gs.data(), c);
  grad_add(grad, table, false, t.relation, gr.data(), c);
  grad_add(grad, table, true, t.object, go.data(), c);
  if (l2_weight > 0) {
    auto add_l2 = [&](bool is_entity, std::int32_t id,
                      std::span<const double> row) {
      std::vector<double>& data =
          is_entity ? grad.entity_data : grad.relation_data;
      double* acc = data.data() + static_cast<std::size_t>(id) * d;
      for (int i = 0; i < d; ++i) acc[i] += 2.0 * l2_weight * row[i];
    };
    add_l2(true, t.subject, table.entity(t.subject));
    add_l2(false, t.relation, table.relation(t.relation));
    add_l2(true, t.object, table.entity(t.object));
  }
}

double margin_batch_loss(const EmbeddingTable& table,
                         std::span<const std::pair<Triple, Triple>> pairs,
                         double margin) {
  double sum = 0.0;
  for (const auto& [pos, neg] : pairs) {
    sum += margin_pair_loss(table, pos, neg, margin);
  }
  return sum;
}

TableGrad margin_batch_grad(const EmbeddingTable& table,
                            std::span<const std::pair<Triple, Triple>> pairs,
                            double margin) {
  TableGrad grad = zero_grad(table);
  for (const auto& [pos, neg] : pairs) {
    add_margin_pair_grad(table, pos, neg, margin, grad);
  }
  return grad;
}

double logistic_batch_loss(const EmbeddingTable& table,
                           std::span<const std::pair<Triple, int>> examples,
                           double l2_weight) {
  double sum = 0.0;
  for (const auto& [t, y] : examples) {
    sum += logistic_example_loss(table, t, y, l2_weight);
  }
  return sum;
}

TableGrad logistic_batch_grad(const EmbeddingTable& table,
                              std::span<const std::pair<Triple, int>> examples,
                              double l2_weight) {
  TableGrad grad = zero_grad(table);
  for (const auto& [t, y] : examples) {
    add_logistic_example_grad(table, t, y, l2_weight, grad);
  }
  return grad;
}

void export_embeddings(const EmbeddingTable& table, const TripleStore& store,
                       const std::filesystem::path& entity_path,
                       const std::filesystem::path& relation_path) {
  VectorTable entities;
  entities.dim = table.dim;
  entities.keys = store.entities().symbols();
  entities.data = table.entity_data;
  write_vector_tsv(entity_path, entities);
  if (!relation_path.empty()) {
    VectorTable relations;
    relations.dim = table.dim;
    relations.keys = store.relations().symbols();
    relations.data = table.relation_data;
    write_vector_tsv(relation_path, relations);
  }
}

namespace {

// Places file rows at their vocabulary positions. Every vocabulary symbol
// must be covered; file-only symbols are rejected.
std::vector<double> place_rows(const VectorTable& file, const Vocabulary& vocab,
                               const std::filesystem::path& path,
                               std::vector<Rejection>* rejections) {
  const std::size_t dim = static_cast<std::size_t>(file.dim);
  std::vector<double> data(static_cast<std::size_t>(vocab.size()) * dim);
  std::vector<bool> covered(static_cast<std::size_t>(vocab.size()), false);
  for (std::size_t i = 0; i < file.rows(); ++i) {
    auto id = vocab.find(file.keys[i]);
    if (!id) {
      if (rejections) {
        rejections->push_back(
            {i + 2, "oov_symbol: " + file.keys[i], file.keys[i]});
      }
      continue;
    }
    auto row = file.row(i);
    std::copy(row.begin(), row.end(),
              data.begin() + static_cast<std::size_t>(*id) * dim);
    covered[static_cast<std::size_t>(*id)] = true;
  }
  std::size_t missing = 0;
  std::string first;
  for (EntityId id = 0; id < vocab.size(); ++id) {
    if (!covered[static_cast<std::size_t>(id)]) {
      if (missing == 0) first = vocab.symbol(id);
      ++missing;
    }
  }
  if (missing > 0) {
    throw std::runtime_error(path.string() + ": " + std::to_string(missing) +
                             " vocabulary symbols missing (first: '" + first +
                             "')");
  }
  return data;
}

}  // namespace

EmbeddingTable import_embeddings(const std::filesystem::path& entity_path,
                                 const std::filesystem::path& relation_path,
                                 ModelFamily family, TranseNorm transe_norm,
                                 const TripleStore& store,
                                 std::vector<Rejection>* rejections) {
  VectorTable entities = read_vector_tsv(entity_path);
  if (family == ModelFamily::complex_bilinear && entities.dim % 2 != 0) {
    throw std::runtime_error(entity_path.string() +
                             ": complex embeddings need an even cell count");
  }

  EmbeddingTable table;
  table.family = family;
  table.transe_norm = transe_norm;
  table.dim = entities.dim;
  table.n_entities = store.n_entities();
  table.entity_data =
      place_rows(entities, store.entities(), entity_path, rejections);

  if (!relation_path.empty()) {
    VectorTable relations = read_vector_tsv(relation_path);
    if (relations.dim != entities.dim) {
      throw std::runtime_error(relation_path.string() + ": dimension " +
                               std::to_string(relations.dim) +
                               " does not match entity dimension " +
                               std::to_string(entities.dim));
    }
    table.n_relations = store.n_relations();
    table.relation_data =
        place_rows(relations, store.relations(), relation_path, rejections);
  }
  return table;
}

}  // namespace kgtext
