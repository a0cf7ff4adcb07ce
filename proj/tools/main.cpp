// kgtext command-line front end: data preparation, embedding training and
// import, the three evaluation experiments, and report rendering.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kgtext/corpus.hpp"
#include "kgtext/harness.hpp"
#include "kgtext/kge.hpp"

namespace fs = std::filesystem;
using namespace kgtext;

namespace {

struct CommonConfigArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;

  ExperimentConfig load(Task task) const {
    ExperimentConfig config = load_experiment_config(config_path);
    config.task = task;
    if (seed) {
      config.seed = *seed;
      config.kge.seed = *seed;
    }
    if (mode) config.feature_mode = parse_feature_mode(*mode);
    return config;
  }
};

void add_config_options(CLI::App* cmd, CommonConfigArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config JSON")
      ->required();
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_option("--mode", args.mode,
                  "override the feature mode (contextual|kg|concat)");
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int run_experiment_command(const CommonConfigArgs& args, Task task,
                           const std::string& out_path) {
  const ExperimentConfig config = args.load(task);
  const RunReport report = run_experiment(config);
  write_run_report(report, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knowledge-graph embedding workbench"};
  app.require_subcommand(1);

  // --- prepare-data ---
  auto* prepare = app.add_subcommand(
      "prepare-data",
      "select description mentions and filter distant-supervision records");
  struct {
    std::string train, valid, test;
    std::string labels, types, descriptions;
    std::string distant;
    std::string out_dir = "prepared";
    std::size_t max_gap = 1;
  } prep;
  prepare->add_option("--train", prep.train, "train triples TSV")->required();
  prepare->add_option("--valid", prep.valid, "validation triples TSV");
  prepare->add_option("--test", prep.test, "test triples TSV");
  prepare->add_option("--labels", prep.labels, "entity lexicalization TSV");
  prepare->add_option("--types", prep.types, "entity types TSV");
  prepare->add_option("--descriptions", prep.descriptions,
                      "entity descriptions TSV");
  prepare->add_option("--distant", prep.distant,
                      "distant-supervision records TSV");
  prepare->add_option("--out-dir", prep.out_dir, "output directory");
  prepare->add_option("--max-gap", prep.max_gap,
                      "total token-gap budget for mention matching");
  prepare->callback([&] {
    fs::create_directories(prep.out_dir);
    const fs::path out = prep.out_dir;
    std::vector<Rejection> rejections;
    const TripleStore store =
        load_store(prep.train, prep.valid, prep.test, {}, &rejections);
    const EntityCatalog catalog = parse_entity_metadata(
        prep.labels, prep.types, prep.descriptions, store.entities(),
        &rejections);
    nlohmann::json stats = store_stats(store, &catalog);

    const ContextSelection selection =
        select_contexts(catalog, store.entities(), prep.max_gap);
    write_mentions_tsv(out / "mentions.tsv", selection.mentions,
                       store.entities());
    write_drops_tsv(out / "mention_drops.tsv", selection.drops);
    stats["mention_inputs"] = selection.inputs;
    stats["mentions"] = selection.mentions.size();
    stats["mention_drops"] = selection.drops.size();

    if (!prep.distant.empty()) {
      const auto records = parse_distant_records(prep.distant);
      const DistantFilterResult filtered =
          filter_distant_records(records, store);
      write_relation_samples_tsv(out / "relation_samples.tsv",
                                 filtered.samples, store);
      write_drops_tsv(out / "relation_drops.tsv", filtered.drops);
      stats["distant_filter"] = distant_filter_stats_json(filtered.stats);
    }
    write_rejections_tsv(rejections, out / "rejections.tsv");
    stats["rejections"] = rejections.size();
    write_text(out / "stats.json", stats.dump(2) + "\n");
    std::cout << "wrote " << (out / "stats.json").string() << "\n";
  });

  // --- train-kge ---
  auto* train_cmd = app.add_subcommand(
      "train-kge", "train entity/relation embeddings on the train split");
  CommonConfigArgs train_args;
  struct {
    std::string entity_out = "entities.vec.tsv";
    std::string relation_out = "relations.vec.tsv";
    std::string loss_out;
  } train_paths;
  add_config_options(train_cmd, train_args);
  train_cmd->add_option("--entity-out", train_paths.entity_out,
                        "entity vector TSV to write");
  train_cmd->add_option("--relation-out", train_paths.relation_out,
                        "relation vector TSV to write");
  train_cmd->add_option("--loss-out", train_paths.loss_out,
                        "optional per-epoch mean loss file");
  train_cmd->callback([&] {
    const ExperimentConfig config = train_args.load(Task::link_prediction);
    std::vector<Rejection> rejections;
    const TripleStore store =
        load_store(config.paths.triples_train, config.paths.triples_valid,
                   config.paths.triples_test, {}, &rejections);
    const TrainResult result = train(store, config.model_family, config.kge);
    export_embeddings(result.table, store, train_paths.entity_out,
                      train_paths.relation_out);
    if (!train_paths.loss_out.empty()) {
      std::string text;
      for (const double loss : result.epoch_mean_loss) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g\n", loss);
        text += buf;
      }
      write_text(train_paths.loss_out, text);
    }
    std::cout << "wrote " << train_paths.entity_out << "\n";
  });

  // --- import-embeddings ---
  auto* import_cmd = app.add_subcommand(
      "import-embeddings",
      "validate external vectors against the store and normalize the files");
  CommonConfigArgs import_args;
  struct {
    std::string entity_in;
    std::string relation_in;
    std::string entity_out = "entities.vec.tsv";
    std::string relation_out = "relations.vec.tsv";
    std::string rejects_out;
  } import_paths;
  add_config_options(import_cmd, import_args);
  import_cmd->add_option("--entity-in", import_paths.entity_in,
                         "external entity vector TSV")
      ->required();
  import_cmd->add_option("--relation-in", import_paths.relation_in,
                         "external relation vector TSV (optional)");
  import_cmd->add_option("--entity-out", import_paths.entity_out,
                         "normalized entity TSV to write");
  import_cmd->add_option("--relation-out", import_paths.relation_out,
                         "normalized relation TSV to write");
  import_cmd->add_option("--rejects-out", import_paths.rejects_out,
                         "TSV of rows naming unknown symbols");
  import_cmd->callback([&] {
    const ExperimentConfig config = import_args.load(Task::link_prediction);
    std::vector<Rejection> rejections;
    const TripleStore store =
        load_store(config.paths.triples_train, config.paths.triples_valid,
                   config.paths.triples_test, {}, &rejections);
    std::vector<Rejection> import_rejections;
    const EmbeddingTable table = import_embeddings(
        import_paths.entity_in, import_paths.relation_in, config.model_family,
        config.transe_norm, store, &import_rejections);
    export_embeddings(table, store, import_paths.entity_out,
                      import_paths.relation_in.empty()
                          ? std::string()
                          : import_paths.relation_out);
    if (!import_paths.rejects_out.empty()) {
      write_rejections_tsv(import_rejections, import_paths.rejects_out);
    }
    std::cout << "imported " << table.n_entities << " entity rows ("
              << import_rejections.size() << " rejected)\n";
  });

  // --- the three experiments ---
  struct ExperimentCmd {
    const char* name;
    const char* help;
    Task task;
    CommonConfigArgs args;
    std::string out;
  };
  ExperimentCmd experiments[] = {
      {"run-typing", "entity typing experiment", Task::entity_typing, {}, ""},
      {"run-relations", "relation prediction experiment",
       Task::relation_prediction, {}, ""},
      {"run-linkpred", "link prediction experiment", Task::link_prediction,
       {}, ""},
  };
  for (auto& e : experiments) {
    auto* cmd = app.add_subcommand(e.name, e.help);
    add_config_options(cmd, e.args);
    e.out = std::string(e.name).substr(4) + "_report.json";
    cmd->add_option("--out", e.out, "report JSON path (.csv/.time siblings)");
    cmd->callback([&e] { run_experiment_command(e.args, e.task, e.out); });
  }

  // --- report ---
  auto* report_cmd = app.add_subcommand(
      "report", "render one or more report JSONs as Markdown tables");
  std::vector<std::string> report_inputs;
  std::string report_out;
  report_cmd->add_option("--inputs", report_inputs, "report JSON files")
      ->required()
      ->expected(-1);
  report_cmd->add_option("--out", report_out,
                         "Markdown output path (default: stdout)");
  report_cmd->callback([&] {
    std::vector<nlohmann::json> docs;
    for (const auto& path : report_inputs) {
      std::ifstream in(path);
      if (!in) throw std::runtime_error("cannot read report: " + path);
      nlohmann::json j;
      in >> j;
      docs.push_back(std::move(j));
    }
    const std::string md = report_markdown(docs);
    if (report_out.empty()) {
      std::cout << md;
    } else {
      write_text(report_out, md);
      std::cout << "wrote " << report_out << "\n";
    }
  });

  try {
    CLI11_PARSE(app, argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
