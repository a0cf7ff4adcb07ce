#include "kgtext/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "kgtext/corpus.hpp"
#include "kgtext/metrics.hpp"
#include "kgtext/vector_io.hpp"

namespace kgtext {
namespace {

constexpr int kReportFormat = 1;
constexpr std::string_view kToolVersion = "1.0.0";

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) {
    return std::string(s);
  }
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

void require_file(const std::string& path, std::string_view field) {
  if (path.empty()) {
    throw std::invalid_argument("config path '" + std::string(field) +
                                "' is required for this task");
  }
  if (!std::filesystem::exists(path)) {
    throw std::invalid_argument("config path '" + std::string(field) +
                                "' does not exist: " + path);
  }
}

// Deterministic hash split: symbol lands in train iff its 64-bit hash,
// reduced mod 10000, falls below fraction*10000.
bool hash_in_train(std::string_view key, double fraction) {
  const std::uint64_t bucket = fnv1a64(key) % 10000;
  return bucket < static_cast<std::uint64_t>(std::llround(fraction * 10000.0));
}

std::string relation_sample_key(const RelationSample& s,
                                const TripleStore& store) {
  std::string key = store.entities().symbol(s.subject_mention.entity);
  key += '\x1f';
  key += store.entities().symbol(s.object_mention.entity);
  key += '\x1f';
  key += store.relations().symbol(s.relation);
  key += '\x1f';
  key += std::to_string(s.subject_mention.span_start);
  key += ':';
  key += std::to_string(s.object_mention.span_start);
  for (const auto& token : s.subject_mention.sentence->tokens) {
    key += '\x1f';
    key += token;
  }
  return key;
}

nlohmann::json stat_json(const MetricStat& stat, std::size_t n) {
  return {{"mean", stat.mean}, {"std", stat.stddev}, {"n", n}};
}

void check_field_keys(const nlohmann::json& j, std::string_view object_name,
                      std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw std::invalid_argument("unknown config key '" + key + "' in " +
                                  std::string(object_name));
    }
  }
}

// KG feature source that tolerates vector files covering only part of the
// vocabulary: uncovered entities keep zero rows and a presence mask, so the
// harness can skip (and itemize) their samples instead of failing.
struct PartialKgTable {
  EmbeddingTable table;
  std::vector<char> has_row;
  std::size_t unknown_rows = 0;  // file rows naming no vocabulary entity
};

PartialKgTable load_partial_entity_table(const std::string& path,
                                         const Vocabulary& entities) {
  const VectorTable vt = read_vector_tsv(path);
  PartialKgTable out;
  out.table.family = ModelFamily::distmult;  // feature lookup ignores family
  out.table.dim = vt.dim;
  out.table.n_entities = entities.size();
  out.table.n_relations = 0;
  out.table.entity_data.assign(
      static_cast<std::size_t>(entities.size()) * vt.dim, 0.0);
  out.has_row.assign(entities.size(), 0);
  for (std::size_t i = 0; i < vt.rows(); ++i) {
    const auto id = entities.find(vt.keys[i]);
    if (!id) {
      ++out.unknown_rows;
      continue;
    }
    const auto row = vt.row(i);
    std::copy(row.begin(), row.end(),
              out.table.entity(*id).begin());
    out.has_row[static_cast<std::size_t>(*id)] = 1;
  }
  return out;
}

bool needs_contextual(FeatureMode mode) {
  return mode == FeatureMode::contextual || mode == FeatureMode::concat;
}
bool needs_kg(FeatureMode mode) {
  return mode == FeatureMode::kg || mode == FeatureMode::concat;
}

struct SkipCounter {
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;

  void add(std::string_view reason) {
    ++counts[std::string(reason)];
    ++total;
  }
  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [reason, n] : counts) j[reason] = n;
    return j;
  }
};

nlohmann::json versions_json() {
  return {{"report_format", kReportFormat}, {"tool", std::string(kToolVersion)}};
}

nlohmann::json base_document(const ExperimentConfig& config) {
  nlohmann::json doc;
  doc["task"] = std::string(to_string(config.task));
  doc["feature_mode"] = std::string(to_string(config.feature_mode));
  doc["seed"] = config.seed;
  doc["config"] = experiment_config_json(config);
  doc["versions"] = versions_json();
  return doc;
}

// Everything the two classification harnesses share: sources, presence
// checks, and a single features() call site (the only point where the
// feature mode matters).
struct FeatureSources {
  const Vocabulary* entities = nullptr;
  FeatureMode mode = FeatureMode::concat;
  bool normalize_parts = false;
  PartialKgTable kg;
  ContextualStore contextual;
  bool kg_loaded = false;
  bool contextual_loaded = false;

  // Returns a skip reason, or empty when every needed source is present.
  std::string_view missing_source(const ContextualMention& mention) const {
    if (needs_kg(mode) &&
        has_row_absent(static_cast<std::size_t>(mention.entity))) {
      return "missing_kg_embedding";
    }
    if (needs_contextual(mode) &&
        !contextual.find(mention_key(*entities, mention))) {
      return "missing_contextual_vector";
    }
    return {};
  }

  bool has_row_absent(std::size_t entity) const {
    return kg.has_row.empty() || kg.has_row[entity] == 0;
  }

  std::vector<double> build(const ContextualMention& mention) const {
    return features(mode, mention, *entities,
                    kg_loaded ? &kg.table : nullptr,
                    contextual_loaded ? &contextual : nullptr,
                    normalize_parts);
  }
};

FeatureSources load_sources(const ExperimentConfig& config,
                            const Vocabulary& entities,
                            std::span<const ContextualMention> mentions) {
  FeatureSources src;
  src.entities = &entities;
  src.mode = config.feature_mode;
  src.normalize_parts = config.normalize_parts;
  if (needs_kg(config.feature_mode)) {
    require_file(config.paths.entity_embeddings, "paths.entity_embeddings");
    src.kg = load_partial_entity_table(config.paths.entity_embeddings,
                                       entities);
    src.kg_loaded = true;
  }
  if (needs_contextual(config.feature_mode)) {
    if (config.paths.contextual_vectors.empty()) {
      src.contextual = build_pseudo_store(mentions, entities,
                                          config.pseudo_dim, config.seed);
    } else {
      require_file(config.paths.contextual_vectors,
                   "paths.contextual_vectors");
      src.contextual = load_contextual(config.paths.contextual_vectors);
    }
    src.contextual_loaded = true;
  }
  return src;
}

}  // namespace

std::string_view to_string(Task task) {
  switch (task) {
    case Task::entity_typing: return "entity_typing";
    case Task::relation_prediction: return "relation_prediction";
    case Task::link_prediction: return "link_prediction";
  }
  throw std::logic_error("unknown task");
}

Task parse_task(std::string_view name) {
  if (name == "entity_typing") return Task::entity_typing;
  if (name == "relation_prediction") return Task::relation_prediction;
  if (name == "link_prediction") return Task::link_prediction;
  throw std::invalid_argument("unknown task: " + std::string(name));
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  check_field_keys(j, "config",
                   {"task", "feature_mode", "seed", "paths", "split",
                    "classifier", "prune_min_count", "metrics",
                    "pseudo_contextual_dim", "normalize_parts", "model"});
  ExperimentConfig c;
  if (j.contains("task")) c.task = parse_task(j["task"].get<std::string>());
  if (j.contains("feature_mode")) {
    c.feature_mode = parse_feature_mode(j["feature_mode"].get<std::string>());
  }
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("paths")) {
    const auto& p = j["paths"];
    check_field_keys(
        p, "paths",
        {"triples_train", "triples_valid", "triples_test", "entity_labels",
         "entity_types", "entity_descriptions", "mentions",
         "relation_samples", "contextual_vectors", "entity_embeddings",
         "relation_embeddings"});
    const auto get = [&](const char* key, std::string& slot) {
      if (p.contains(key)) slot = p[key].get<std::string>();
    };
    get("triples_train", c.paths.triples_train);
    get("triples_valid", c.paths.triples_valid);
    get("triples_test", c.paths.triples_test);
    get("entity_labels", c.paths.entity_labels);
    get("entity_types", c.paths.entity_types);
    get("entity_descriptions", c.paths.entity_descriptions);
    get("mentions", c.paths.mentions);
    get("relation_samples", c.paths.relation_samples);
    get("contextual_vectors", c.paths.contextual_vectors);
    get("entity_embeddings", c.paths.entity_embeddings);
    get("relation_embeddings", c.paths.relation_embeddings);
  }
  if (j.contains("split")) {
    const auto& s = j["split"];
    check_field_keys(s, "split",
                     {"typing_train_fraction", "relation_train_fraction"});
    if (s.contains("typing_train_fraction")) {
      c.typing_train_fraction = s["typing_train_fraction"].get<double>();
    }
    if (s.contains("relation_train_fraction")) {
      c.relation_train_fraction = s["relation_train_fraction"].get<double>();
    }
  }
  if (j.contains("classifier")) {
    const auto& f = j["classifier"];
    check_field_keys(f, "classifier",
                     {"learning_rate", "epochs", "l2", "seed", "standardize",
                      "threads"});
    if (f.contains("learning_rate")) {
      c.classifier.learning_rate = f["learning_rate"].get<double>();
    }
    if (f.contains("epochs")) c.classifier.epochs = f["epochs"].get<int>();
    if (f.contains("l2")) c.classifier.l2 = f["l2"].get<double>();
    if (f.contains("seed")) c.classifier.seed = f["seed"].get<std::uint64_t>();
    if (f.contains("standardize")) {
      c.classifier.standardize = f["standardize"].get<bool>();
    }
    if (f.contains("threads")) c.classifier.threads = f["threads"].get<int>();
  }
  if (j.contains("prune_min_count")) {
    c.prune_min_count = j["prune_min_count"].get<int>();
  }
  if (j.contains("metrics")) {
    const auto& m = j["metrics"];
    check_field_keys(m, "metrics",
                     {"precision_cutoff", "map_cutoff", "hits_cutoffs"});
    if (m.contains("precision_cutoff")) {
      c.cutoffs.precision = m["precision_cutoff"].get<int>();
    }
    if (m.contains("map_cutoff")) c.cutoffs.map = m["map_cutoff"].get<int>();
    if (m.contains("hits_cutoffs")) {
      c.cutoffs.hits = m["hits_cutoffs"].get<std::vector<int>>();
    }
  }
  if (j.contains("pseudo_contextual_dim")) {
    c.pseudo_dim = j["pseudo_contextual_dim"].get<int>();
  }
  if (j.contains("normalize_parts")) {
    c.normalize_parts = j["normalize_parts"].get<bool>();
  }
  if (j.contains("model")) {
    const auto& m = j["model"];
    check_field_keys(m, "model",
                     {"family", "transe_norm", "dim", "epochs",
                      "learning_rate", "batch_size", "negatives_per_positive",
                      "margin", "l2", "deterministic"});
    if (m.contains("family")) {
      c.model_family = parse_model_family(m["family"].get<std::string>());
    }
    if (m.contains("transe_norm")) {
      const auto norm = m["transe_norm"].get<std::string>();
      if (norm == "l1") c.transe_norm = TranseNorm::l1;
      else if (norm == "l2") c.transe_norm = TranseNorm::l2;
      else throw std::invalid_argument("unknown transe_norm: " + norm);
    }
    if (m.contains("dim")) c.kge.dim = m["dim"].get<int>();
    if (m.contains("epochs")) c.kge.epochs = m["epochs"].get<int>();
    if (m.contains("learning_rate")) {
      c.kge.learning_rate = m["learning_rate"].get<double>();
    }
    if (m.contains("batch_size")) c.kge.batch_size = m["batch_size"].get<int>();
    if (m.contains("negatives_per_positive")) {
      c.kge.negatives_per_positive = m["negatives_per_positive"].get<int>();
    }
    if (m.contains("margin")) c.kge.margin = m["margin"].get<double>();
    if (m.contains("l2")) c.kge.l2_weight = m["l2"].get<double>();
    if (m.contains("deterministic")) {
      c.kge.deterministic = m["deterministic"].get<bool>();
    }
    c.kge.transe_norm = c.transe_norm;
  }
  c.kge.seed = c.seed;

  if (c.cutoffs.precision < 1 || c.cutoffs.map < 1) {
    throw std::invalid_argument("metric cutoffs must be >= 1");
  }
  for (const int k : c.cutoffs.hits) {
    if (k < 1) throw std::invalid_argument("metric cutoffs must be >= 1");
  }
  const auto check_fraction = [](double f, const char* name) {
    if (!(f > 0.0) || !(f < 1.0)) {
      throw std::invalid_argument(std::string(name) +
                                  " must lie strictly between 0 and 1");
    }
  };
  check_fraction(c.typing_train_fraction, "typing_train_fraction");
  check_fraction(c.relation_train_fraction, "relation_train_fraction");
  if (c.pseudo_dim < 1) {
    throw std::invalid_argument("pseudo_contextual_dim must be >= 1");
  }
  if (c.prune_min_count < 0) {
    throw std::invalid_argument("prune_min_count must be >= 0");
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config: " + path.string());
  nlohmann::json j;
  in >> j;
  return parse_experiment_config(j);
}

nlohmann::json experiment_config_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["task"] = std::string(to_string(c.task));
  j["feature_mode"] = std::string(to_string(c.feature_mode));
  j["seed"] = c.seed;
  j["paths"] = {{"triples_train", c.paths.triples_train},
                {"triples_valid", c.paths.triples_valid},
                {"triples_test", c.paths.triples_test},
                {"entity_labels", c.paths.entity_labels},
                {"entity_types", c.paths.entity_types},
                {"entity_descriptions", c.paths.entity_descriptions},
                {"mentions", c.paths.mentions},
                {"relation_samples", c.paths.relation_samples},
                {"contextual_vectors", c.paths.contextual_vectors},
                {"entity_embeddings", c.paths.entity_embeddings},
                {"relation_embeddings", c.paths.relation_embeddings}};
  j["split"] = {{"typing_train_fraction", c.typing_train_fraction},
                {"relation_train_fraction", c.relation_train_fraction}};
  j["classifier"] = {{"learning_rate", c.classifier.learning_rate},
                     {"epochs", c.classifier.epochs},
                     {"l2", c.classifier.l2},
                     {"seed", c.classifier.seed},
                     {"standardize", c.classifier.standardize},
                     {"threads", c.classifier.threads}};
  j["prune_min_count"] = c.prune_min_count;
  j["metrics"] = {{"precision_cutoff", c.cutoffs.precision},
                  {"map_cutoff", c.cutoffs.map},
                  {"hits_cutoffs", c.cutoffs.hits}};
  j["pseudo_contextual_dim"] = c.pseudo_dim;
  j["normalize_parts"] = c.normalize_parts;
  j["model"] = {{"family", std::string(to_string(c.model_family))},
                {"transe_norm", c.transe_norm == TranseNorm::l1 ? "l1" : "l2"},
                {"dim", c.kge.dim},
                {"epochs", c.kge.epochs},
                {"learning_rate", c.kge.learning_rate},
                {"batch_size", c.kge.batch_size},
                {"negatives_per_positive", c.kge.negatives_per_positive},
                {"margin", c.kge.margin},
                {"l2", c.kge.l2_weight},
                {"deterministic", c.kge.deterministic}};
  return j;
}

RunReport run_entity_typing(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  require_file(config.paths.triples_train, "paths.triples_train");
  require_file(config.paths.entity_types, "paths.entity_types");
  require_file(config.paths.mentions, "paths.mentions");

  std::vector<Rejection> rejections;
  const TripleStore store =
      load_store(config.paths.triples_train, config.paths.triples_valid,
                 config.paths.triples_test, {}, &rejections);
  const EntityCatalog catalog = parse_entity_metadata(
      config.paths.entity_labels, config.paths.entity_types,
      config.paths.entity_descriptions, store.entities(), &rejections);

  std::vector<Rejection> mention_rejections;
  const std::vector<ContextualMention> mentions = read_mentions_tsv(
      config.paths.mentions, store.entities(), &mention_rejections);
  const FeatureSources sources =
      load_sources(config, store.entities(), mentions);

  // Candidate pass: apply skip rules that do not depend on the label
  // vocabulary, and assign the hash split.
  struct Candidate {
    const ContextualMention* mention;
    std::vector<TypeId> gold;
    bool in_train;
  };
  SkipCounter skipped;
  std::vector<Candidate> candidates;
  for (const auto& mention : mentions) {
    const auto& gold = catalog.types(mention.entity);
    if (gold.empty()) {
      skipped.add("no_gold_labels");
      continue;
    }
    const auto missing = sources.missing_source(mention);
    if (!missing.empty()) {
      skipped.add(missing);
      continue;
    }
    const std::string& symbol = store.entities().symbol(mention.entity);
    candidates.push_back(
        {&mention, gold,
         hash_in_train(symbol, config.typing_train_fraction)});
  }

  // Label vocabulary: types seen in train candidates, pruned by frequency,
  // in type-id order.
  std::vector<std::size_t> type_counts(
      static_cast<std::size_t>(catalog.type_vocab().size()), 0);
  for (const auto& c : candidates) {
    if (!c.in_train) continue;
    for (const TypeId t : c.gold) ++type_counts[static_cast<std::size_t>(t)];
  }
  const std::size_t min_count =
      config.prune_min_count > 0
          ? static_cast<std::size_t>(config.prune_min_count)
          : 1;
  Vocabulary label_vocab;
  std::vector<LabelId> type_to_label(type_counts.size(), -1);
  for (std::size_t t = 0; t < type_counts.size(); ++t) {
    if (type_counts[t] >= min_count) {
      type_to_label[t] = label_vocab.add(
          catalog.type_vocab().symbol(static_cast<TypeId>(t)));
    }
  }
  if (label_vocab.size() == 0) {
    throw std::runtime_error(
        "no type label survives pruning; lower prune_min_count");
  }

  const auto map_gold = [&](const std::vector<TypeId>& gold) {
    std::vector<LabelId> out;
    for (const TypeId t : gold) {
      const LabelId label = type_to_label[static_cast<std::size_t>(t)];
      if (label >= 0) out.push_back(label);
    }
    return out;
  };

  // Feature pass over the survivors. Train rows keep empty label sets (they
  // still supply negative evidence); test rows need gold to remain scorable.
  FeatureMatrix x_train;
  std::vector<std::vector<LabelId>> y_train;
  FeatureMatrix x_test;
  struct TestRow {
    const ContextualMention* mention;
    std::vector<LabelId> gold;
  };
  std::vector<TestRow> test_rows;
  for (const auto& c : candidates) {
    std::vector<LabelId> gold = map_gold(c.gold);
    if (c.in_train) {
      x_train.add_row(sources.build(*c.mention));
      y_train.push_back(std::move(gold));
    } else {
      if (gold.empty()) {
        skipped.add("gold_pruned");
        continue;
      }
      x_test.add_row(sources.build(*c.mention));
      test_rows.push_back({c.mention, std::move(gold)});
    }
  }
  if (x_train.rows == 0) throw std::runtime_error("empty typing train split");
  if (x_test.rows == 0) throw std::runtime_error("empty typing test split");

  const LogRegModel model = fit(x_train, y_train, ClassifierMode::one_vs_rest,
                                config.classifier, label_vocab);

  const std::string map_name = "map@" + std::to_string(config.cutoffs.map);
  const std::string prec_name =
      "precision@" + std::to_string(config.cutoffs.precision);
  std::vector<double> ap_values;
  std::vector<double> prec_values;
  std::string csv = "mention_key,entity,gold_labels," + map_name + "," +
                    prec_name + "\n";
  for (std::size_t i = 0; i < test_rows.size(); ++i) {
    const auto& row = test_rows[i];
    const RankedPrediction pred = predict_ranked(model, x_test.row(i));
    const double ap = ap_at_k(pred.labels, row.gold,
                              static_cast<std::size_t>(config.cutoffs.map));
    const double prec =
        precision_at_n(pred.labels, row.gold,
                       static_cast<std::size_t>(config.cutoffs.precision));
    ap_values.push_back(ap);
    prec_values.push_back(prec);
    std::string gold_joined;
    for (const LabelId g : row.gold) {
      if (!gold_joined.empty()) gold_joined += '|';
      gold_joined += model.label_vocab.symbol(g);
    }
    csv += csv_field(mention_key(store.entities(), *row.mention)) + ",";
    csv += csv_field(store.entities().symbol(row.mention->entity)) + ",";
    csv += csv_field(gold_joined) + ",";
    csv += fmt_double(ap) + "," + fmt_double(prec) + "\n";
  }

  RunReport report;
  report.document = base_document(config);
  nlohmann::json dataset = store_stats(store, &catalog);
  dataset["mention_rows"] = mentions.size();
  dataset["mention_rejections"] = mention_rejections.size();
  dataset["metadata_rejections"] = rejections.size();
  dataset["train_samples"] = x_train.rows;
  dataset["test_samples"] = x_test.rows;
  dataset["retained"] = x_train.rows + x_test.rows;
  dataset["skipped_total"] = skipped.total;
  dataset["skipped"] = skipped.to_json();
  dataset["inputs"] = x_train.rows + x_test.rows + skipped.total;
  dataset["label_vocab_size"] = label_vocab.size();
  dataset["labels_before_pruning"] = catalog.type_vocab().size();
  if (sources.kg_loaded) {
    dataset["unknown_embedding_rows"] = sources.kg.unknown_rows;
  }
  report.document["dataset"] = dataset;
  report.document["metrics"] = {
      {map_name, stat_json(summarize(ap_values), ap_values.size())},
      {prec_name, stat_json(summarize(prec_values), prec_values.size())}};
  report.per_sample_csv = std::move(csv);
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

RunReport run_relation_prediction(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  require_file(config.paths.triples_train, "paths.triples_train");
  require_file(config.paths.relation_samples, "paths.relation_samples");

  std::vector<Rejection> rejections;
  const TripleStore store =
      load_store(config.paths.triples_train, config.paths.triples_valid,
                 config.paths.triples_test, {}, &rejections);
  std::vector<Rejection> sample_rejections;
  const std::vector<RelationSample> samples = read_relation_samples_tsv(
      config.paths.relation_samples, store, &sample_rejections);

  std::vector<ContextualMention> all_mentions;
  all_mentions.reserve(samples.size() * 2);
  for (const auto& s : samples) {
    all_mentions.push_back(s.subject_mention);
    all_mentions.push_back(s.object_mention);
  }
  const FeatureSources sources =
      load_sources(config, store.entities(), all_mentions);

  // Label universe: every relation in the store, ids unchanged.
  Vocabulary label_vocab;
  for (const auto& symbol : store.relations().symbols()) {
    label_vocab.add(symbol);
  }
  if (label_vocab.size() == 0) {
    throw std::runtime_error("store has no relations to predict");
  }

  SkipCounter skipped;
  FeatureMatrix x_train;
  std::vector<std::vector<LabelId>> y_train;
  FeatureMatrix x_test;
  struct TestRow {
    std::size_t sample_index;
    LabelId gold;
  };
  std::vector<TestRow> test_rows;
  const auto sample_features = [&](const RelationSample& s) {
    std::vector<double> x = sources.build(s.subject_mention);
    const std::vector<double> obj = sources.build(s.object_mention);
    x.insert(x.end(), obj.begin(), obj.end());
    return x;
  };
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    auto missing = sources.missing_source(s.subject_mention);
    if (missing.empty()) missing = sources.missing_source(s.object_mention);
    if (!missing.empty()) {
      skipped.add(missing);
      continue;
    }
    // The original split wins when present; "test" evaluates, anything else
    // trains. Unsplit samples fall to the content hash.
    const bool in_train =
        !s.split.empty()
            ? s.split != "test"
            : hash_in_train(relation_sample_key(s, store),
                            config.relation_train_fraction);
    if (in_train) {
      x_train.add_row(sample_features(s));
      y_train.push_back({s.relation});
    } else {
      x_test.add_row(sample_features(s));
      test_rows.push_back({i, s.relation});
    }
  }
  if (x_train.rows == 0) {
    throw std::runtime_error("empty relation train split");
  }
  if (x_test.rows == 0) throw std::runtime_error("empty relation test split");

  const LogRegModel model = fit(x_train, y_train, ClassifierMode::multinomial,
                                config.classifier, label_vocab);

  std::vector<double> rr_values;
  std::vector<double> ap1_values;
  std::string csv = "sample,subject,object,relation,split,rr,map@1\n";
  for (std::size_t i = 0; i < test_rows.size(); ++i) {
    const auto& row = test_rows[i];
    const auto& s = samples[row.sample_index];
    const RankedPrediction pred = predict_ranked(model, x_test.row(i));
    const std::vector<LabelId> gold{row.gold};
    const double rr = reciprocal_rank(pred.labels, gold);
    const double ap1 = ap_at_k(pred.labels, gold, 1);
    rr_values.push_back(rr);
    ap1_values.push_back(ap1);
    csv += std::to_string(row.sample_index) + ",";
    csv += csv_field(store.entities().symbol(s.subject_mention.entity)) + ",";
    csv += csv_field(store.entities().symbol(s.object_mention.entity)) + ",";
    csv += csv_field(store.relations().symbol(s.relation)) + ",";
    csv += csv_field(s.split.empty() ? "hash" : s.split) + ",";
    csv += fmt_double(rr) + "," + fmt_double(ap1) + "\n";
  }

  RunReport report;
  report.document = base_document(config);
  nlohmann::json dataset = store_stats(store, nullptr);
  dataset["sample_rows"] = samples.size();
  dataset["sample_rejections"] = sample_rejections.size();
  dataset["train_samples"] = x_train.rows;
  dataset["test_samples"] = x_test.rows;
  dataset["retained"] = x_train.rows + x_test.rows;
  dataset["skipped_total"] = skipped.total;
  dataset["skipped"] = skipped.to_json();
  dataset["inputs"] = x_train.rows + x_test.rows + skipped.total;
  dataset["label_vocab_size"] = label_vocab.size();
  if (sources.kg_loaded) {
    dataset["unknown_embedding_rows"] = sources.kg.unknown_rows;
  }
  report.document["dataset"] = dataset;
  report.document["metrics"] = {
      {"mrr", stat_json(summarize(rr_values), rr_values.size())},
      {"map@1", stat_json(summarize(ap1_values), ap1_values.size())}};
  report.per_sample_csv = std::move(csv);
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

RunReport run_link_prediction(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  require_file(config.paths.triples_train, "paths.triples_train");
  require_file(config.paths.triples_test, "paths.triples_test");
  require_file(config.paths.entity_embeddings, "paths.entity_embeddings");
  require_file(config.paths.relation_embeddings, "paths.relation_embeddings");

  std::vector<Rejection> rejections;
  const TripleStore store =
      load_store(config.paths.triples_train, config.paths.triples_valid,
                 config.paths.triples_test, {}, &rejections);
  std::vector<Rejection> import_rejections;
  const EmbeddingTable table = import_embeddings(
      config.paths.entity_embeddings, config.paths.relation_embeddings,
      config.model_family, config.transe_norm, store, &import_rejections);

  const auto& test = store.split("test");
  if (test.empty()) throw std::runtime_error("empty test split");

  std::vector<std::size_t> raw_ranks;
  std::vector<std::size_t> filtered_ranks;
  raw_ranks.reserve(test.size() * 2);
  filtered_ranks.reserve(test.size() * 2);
  std::string csv = "subject,relation,object,side,rank_raw,rank_filtered\n";
  for (const Triple& t : test) {
    for (const RankSide side : {RankSide::subject, RankSide::object}) {
      const std::size_t raw =
          rank_triple(table, t, side, RankProtocol::raw, store);
      const std::size_t filtered =
          rank_triple(table, t, side, RankProtocol::filtered, store);
      raw_ranks.push_back(raw);
      filtered_ranks.push_back(filtered);
      csv += csv_field(store.entities().symbol(t.subject)) + ",";
      csv += csv_field(store.relations().symbol(t.relation)) + ",";
      csv += csv_field(store.entities().symbol(t.object)) + ",";
      csv += side == RankSide::subject ? "subject," : "object,";
      csv += std::to_string(raw) + "," + std::to_string(filtered) + "\n";
    }
  }

  const auto protocol_json = [&](std::span<const std::size_t> ranks) {
    nlohmann::json j;
    j["mrr"] = mrr_from_ranks(ranks);
    for (const int k : config.cutoffs.hits) {
      j["hits@" + std::to_string(k)] =
          hits_at_k(ranks, static_cast<std::size_t>(k));
    }
    return j;
  };

  RunReport report;
  report.document = base_document(config);
  nlohmann::json dataset = store_stats(store, nullptr);
  dataset["test_triples"] = test.size();
  dataset["ranks_per_protocol"] = raw_ranks.size();
  dataset["import_rejections"] = import_rejections.size();
  report.document["dataset"] = dataset;
  report.document["metrics"] = {{"raw", protocol_json(raw_ranks)},
                                {"filtered", protocol_json(filtered_ranks)}};
  report.per_sample_csv = std::move(csv);
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

RunReport run_experiment(const ExperimentConfig& config) {
  switch (config.task) {
    case Task::entity_typing: return run_entity_typing(config);
    case Task::relation_prediction: return run_relation_prediction(config);
    case Task::link_prediction: return run_link_prediction(config);
  }
  throw std::logic_error("unknown task");
}

void write_run_report(const RunReport& report,
                      const std::filesystem::path& json_path) {
  {
    std::ofstream out(json_path, std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot write report: " + json_path.string());
    }
    out << report.document.dump(2) << '\n';
  }
  {
    std::filesystem::path csv_path = json_path;
    csv_path.replace_extension(".csv");
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot write samples: " + csv_path.string());
    }
    out << report.per_sample_csv;
  }
  {
    std::filesystem::path time_path = json_path;
    time_path.replace_extension(".time");
    std::ofstream out(time_path, std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot write timing: " + time_path.string());
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f\n", report.wall_clock_seconds);
    out << buf;
  }
}

std::string report_markdown(std::span<const nlohmann::json> reports) {
  std::string md;
  const auto fmt3 = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return std::string(buf);
  };
  std::size_t i = 0;
  while (i < reports.size()) {
    const std::string task = reports[i].at("task").get<std::string>();
    std::size_t j = i;
    while (j < reports.size() &&
           reports[j].at("task").get<std::string>() == task) {
      ++j;
    }
    if (!md.empty()) md += "\n";
    md += "## " + task + "\n\n";
    if (task == "link_prediction") {
      // Columns: per protocol, MRR then the hits cutoffs of the first report.
      std::vector<std::string> metric_names;
      for (const auto& [name, value] :
           reports[i].at("metrics").at("raw").items()) {
        metric_names.push_back(name);
      }
      md += "| model |";
      for (const char* protocol : {"raw", "filtered"}) {
        for (const auto& name : metric_names) {
          md += " " + std::string(protocol) + " " + name + " |";
        }
      }
      md += "\n|---|";
      for (std::size_t c = 0; c < metric_names.size() * 2; ++c) md += "---|";
      md += "\n";
      for (std::size_t r = i; r < j; ++r) {
        md += "| " +
              reports[r].at("config").at("model").at("family")
                  .get<std::string>() +
              " |";
        for (const char* protocol : {"raw", "filtered"}) {
          for (const auto& name : metric_names) {
            md += " " +
                  fmt3(reports[r].at("metrics").at(protocol).at(name)
                           .get<double>()) +
                  " |";
          }
        }
        md += "\n";
      }
    } else {
      std::vector<std::string> metric_names;
      for (const auto& [name, value] : reports[i].at("metrics").items()) {
        metric_names.push_back(name);
      }
      md += "| features |";
      for (const auto& name : metric_names) {
        md += " " + name + " (mean ± std) |";
      }
      md += "\n|---|";
      for (std::size_t c = 0; c < metric_names.size(); ++c) md += "---|";
      md += "\n";
      for (std::size_t r = i; r < j; ++r) {
        md += "| " + reports[r].at("feature_mode").get<std::string>() + " |";
        for (const auto& name : metric_names) {
          const auto& m = reports[r].at("metrics").at(name);
          md += " " + fmt3(m.at("mean").get<double>()) + " ± " +
                fmt3(m.at("std").get<double>()) + " |";
        }
        md += "\n";
      }
    }
    i = j;
  }
  return md;
}

}  // namespace kgtext
