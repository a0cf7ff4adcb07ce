// Config-driven experiment orchestration: entity typing, relation
// prediction, and link prediction over a shared feature path. All three
// produce a RunReport whose JSON document is byte-reproducible for a fixed
// config and seed; wall-clock time travels in a separate sidecar field so it
// never perturbs the report bytes.
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgtext/classifier.hpp"
#include "kgtext/combiner.hpp"
#include "kgtext/kge.hpp"

namespace kgtext {

enum class Task { entity_typing, relation_prediction, link_prediction };
std::string_view to_string(Task task);
Task parse_task(std::string_view name);

struct ExperimentPaths {
  std::string triples_train;
  std::string triples_valid;
  std::string triples_test;
  std::string entity_labels;
  std::string entity_types;
  std::string entity_descriptions;
  std::string mentions;             // one mention row per entity
  std::string relation_samples;     // paired-mention rows
  std::string contextual_vectors;   // "" -> deterministic hashed stand-in
  std::string entity_embeddings;
  std::string relation_embeddings;  // may be "" for feature-only use
};

struct MetricCutoffs {
  int precision = 10;
  int map = 10;
  std::vector<int> hits = {1, 3, 10};
};

struct ExperimentConfig {
  Task task = Task::entity_typing;
  FeatureMode feature_mode = FeatureMode::concat;
  std::uint64_t seed = 0;
  ExperimentPaths paths;
  double typing_train_fraction = 0.9;    // entity-symbol hash split
  double relation_train_fraction = 0.8;  // content hash, when no split column
  FitConfig classifier;
  // Typing labels with fewer training occurrences drop from the label
  // vocabulary; 0 keeps every label seen in training (zero-occurrence labels
  // always drop, since one-vs-rest cannot score a label it never saw).
  int prune_min_count = 5;
  MetricCutoffs cutoffs;
  int pseudo_dim = 512;  // hashed contextual stand-in width
  bool normalize_parts = false;
  ModelFamily model_family = ModelFamily::complex_bilinear;
  TranseNorm transe_norm = TranseNorm::l2;
  TrainConfig kge;  // used by the embedding-training subcommand
};

// Strict on enum-valued fields, defaulting on absent ones; rejects cutoffs
// < 1 and fractions outside (0,1).
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
// Canonical echo of every field, embedded in reports.
nlohmann::json experiment_config_json(const ExperimentConfig& config);

struct RunReport {
  nlohmann::json document;      // config echo, dataset stats, metrics, versions
  std::string per_sample_csv;   // one row per retained sample
  double wall_clock_seconds = 0.0;  // sidecar-only, never in `document`
};

RunReport run_entity_typing(const ExperimentConfig& config);
RunReport run_relation_prediction(const ExperimentConfig& config);
RunReport run_link_prediction(const ExperimentConfig& config);
RunReport run_experiment(const ExperimentConfig& config);  // dispatch on task

// Writes document JSON (sorted keys, trailing newline), the per-sample CSV
// next to it (".csv"), and the wall clock to a ".time" sidecar.
void write_run_report(const RunReport& report,
                      const std::filesystem::path& json_path);

// Markdown tables in the reports' order: classification reports render as
// mode-per-row metric tables, link-prediction reports as model-per-row
// raw/filtered tables.
std::string report_markdown(std::span<const nlohmann::json> reports);

}  // namespace kgtext
