// Command-line entry point: dataset generation, pretraining, finetuning,
// evaluation and the experiment sweeps.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gfm4ga/checkpoint.h"
#include "gfm4ga/config.h"
#include "gfm4ga/dataset_io.h"
#include "gfm4ga/experiment.h"
#include "gfm4ga/parallel.h"
#include "gfm4ga/synth.h"

namespace fs = std::filesystem;
using namespace gfm4ga;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::vector<std::string> overrides;
  bool quiet = false;
};

ExperimentConfig resolve_config(const GlobalOptions& g) {
  ExperimentConfig config;
  if (!g.config_path.empty()) config = load_config(g.config_path);
  for (const std::string& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    }
    set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed) config.seed = *g.seed;
  return config;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print_metrics(const std::string& label, const Metrics& m) {
  std::printf("%s: nodes=%zu AUROC=%s AUPRC=%s\n", label.c_str(), m.nodes,
              m.auroc ? number(*m.auroc).c_str() : "undefined",
              m.auprc ? number(*m.auprc).c_str() : "undefined");
}

void print_report(const EvalReport& report) {
  for (const ReportEntry& e : report.entries) {
    std::printf("%-14s k=%-3d AUROC %.4f +- %.4f  AUPRC %.4f +- %.4f", e.name.c_str(),
                e.shots, e.auroc.mean, e.auroc.std, e.auprc.mean, e.auprc.std);
    if (e.delta_auroc) std::printf("  dAUROC %+.4f", *e.delta_auroc);
    std::printf("\n");
  }
  std::printf("runtime %.1f s\n", report.runtime_seconds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot group anomaly detection on typed subgraphs"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config_path, "Flat key=value config file")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for initialization and pretraining");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--set", g.overrides, "Override a config key (key=value)");
  app.add_flag("-q,--quiet", g.quiet, "Suppress progress messages");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  std::optional<int> n_subgraphs, feature_dim, num_relations;
  std::optional<double> size_mean, size_std, group_mean, group_std, shift,
      inner, camouflage, labeled_fraction;
  std::optional<std::string> pattern;
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--num-subgraphs", n_subgraphs);
  synth->add_option("--size-mean", size_mean);
  synth->add_option("--size-std", size_std);
  synth->add_option("--feature-dim", feature_dim);
  synth->add_option("--pattern", pattern, "dense, chain or mixed");
  synth->add_option("--group-size-mean", group_mean);
  synth->add_option("--group-size-std", group_std);
  synth->add_option("--feature-shift", shift);
  synth->add_option("--inner-density", inner);
  synth->add_option("--camouflage-rate", camouflage);
  synth->add_option("--num-relations", num_relations);
  synth->add_option("--labeled-fraction", labeled_fraction);
  synth->add_option("--data-seed", synth_seed, "Generator seed");

  // sample
  auto* sample = app.add_subcommand("sample", "Cut group subgraphs from a base graph");
  std::string edges_path, labels_path;
  std::optional<std::string> features_path;
  bool directed = false;
  SampleConfig sample_config;
  sample->add_option("--edges", edges_path, "\"u v rel\" edge list")
      ->required()->check(CLI::ExistingFile);
  sample->add_option("--labels", labels_path, "\"node label\" lines")
      ->required()->check(CLI::ExistingFile);
  sample->add_option("--features", features_path, "\"node f1 f2 ...\" lines");
  sample->add_flag("--directed", directed);
  sample->add_option("--min-interconnected", sample_config.min_interconnected,
                     "Minimum connected anomaly component")
      ->capture_default_str();
  sample->add_option("--dedup", sample_config.dedup_threshold,
                     "Jaccard threshold for near duplicates")
      ->capture_default_str();
  sample->add_option("--hop-fraction", sample_config.hop_fraction)
      ->capture_default_str();

  std::string data_path;
  std::string checkpoint_path;
  std::optional<int> shots;
  std::vector<std::uint64_t> split_seeds;
  std::vector<int> shot_grid;

  auto* pretrain_cmd = app.add_subcommand("pretrain", "Contrastive pretraining");
  pretrain_cmd->add_option("--data", data_path)->required()->check(CLI::ExistingFile);
  bool no_pretrain = false;
  std::optional<int> pretrain_epochs;
  pretrain_cmd->add_option("--epochs", pretrain_epochs, "Pretraining epochs")
      ->check(CLI::NonNegativeNumber);
  pretrain_cmd->add_flag("--skip", no_pretrain,
                         "Only fit the estimator; keep the encoder at its initialization");

  auto* finetune_cmd = app.add_subcommand("finetune", "k-shot finetuning per seed");
  finetune_cmd->add_option("--data", data_path)->required()->check(CLI::ExistingFile);
  finetune_cmd->add_option("--checkpoint", checkpoint_path, "Pretrained checkpoint")
      ->required()->check(CLI::ExistingFile);
  finetune_cmd->add_option("--shots,-k", shots);
  finetune_cmd->add_option("--split-seeds", split_seeds);

  auto* eval_cmd = app.add_subcommand("eval", "Score labeled subgraphs with a checkpoint");
  eval_cmd->add_option("--data", data_path)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--checkpoint", checkpoint_path)->required()->check(CLI::ExistingFile);

  auto* kshot_cmd = app.add_subcommand("kshot", "Shot-count sweep");
  kshot_cmd->add_option("--data", data_path)->required()->check(CLI::ExistingFile);
  kshot_cmd->add_option("--shots", shot_grid);
  kshot_cmd->add_option("--split-seeds", split_seeds);

  auto* ablate_cmd = app.add_subcommand("ablate", "Component ablations");
  ablate_cmd->add_option("--data", data_path)->required()->check(CLI::ExistingFile);
  ablate_cmd->add_option("--shots,-k", shots);

  auto* alpha_cmd = app.add_subcommand("sweep-alpha", "Subgraph-level weight sweep");
  alpha_cmd->add_option("--data", data_path)->required()->check(CLI::ExistingFile);

  auto* context_cmd = app.add_subcommand("sweep-k-context", "Context size sweep");
  context_cmd->add_option("--data", data_path)->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    set_quiet(g.quiet);
    ExperimentConfig config = resolve_config(g);
    if (shots) config.shots = *shots;
    if (!split_seeds.empty()) config.seeds = split_seeds;
    if (!shot_grid.empty()) config.shot_grid = shot_grid;
    const fs::path out = g.out;
    fs::create_directories(out);

    if (*synth) {
      SynthConfig& s = config.synth;
      if (n_subgraphs) s.num_subgraphs = *n_subgraphs;
      if (size_mean) s.size_mean = *size_mean;
      if (size_std) s.size_std = *size_std;
      if (feature_dim) s.feature_dim = *feature_dim;
      if (pattern) s.pattern = parse_pattern(*pattern);
      if (group_mean) s.group_size_mean = *group_mean;
      if (group_std) s.group_size_std = *group_std;
      if (shift) s.feature_shift = *shift;
      if (inner) s.inner_density = *inner;
      if (camouflage) s.camouflage_rate = *camouflage;
      if (num_relations) s.num_relations = *num_relations;
      if (labeled_fraction) s.labeled_fraction = *labeled_fraction;
      if (synth_seed) s.seed = *synth_seed;
      const Dataset dataset = generate_synthetic(s);
      save_dataset(dataset, out / "dataset.jsonl");
      write_text(out / "config.txt", format_config(config));
      std::printf("wrote %zu subgraphs (%zu labeled) to %s\n",
                  dataset.subgraphs.size(), dataset.labeled().size(),
                  (out / "dataset.jsonl").string().c_str());
    } else if (*sample) {
      std::optional<fs::path> features;
      if (features_path) features = *features_path;
      sample_config.seed = config.seed;
      const BaseGraph base =
          load_base_graph(edges_path, labels_path, features, directed);
      const Dataset dataset = sample_group_subgraphs(base, sample_config);
      save_dataset(dataset, out / "dataset.jsonl");
      std::printf("wrote %zu subgraphs to %s\n", dataset.subgraphs.size(),
                  (out / "dataset.jsonl").string().c_str());
    } else if (*pretrain_cmd) {
      if (pretrain_epochs) config.pretrain.epochs = *pretrain_epochs;
      const Dataset dataset = load_dataset(data_path);
      const auto corpus = pretraining_corpus(dataset);
      const PretrainOutcome result = pretrain_model(
          corpus, dataset.relation_registry, config, no_pretrain);
      save_checkpoint(result.model, out / "pretrained.ckpt");
      std::string csv = "epoch,total,subgraph,node,anchors\n";
      for (const EpochLoss& e : result.curve) {
        csv += std::to_string(e.epoch) + "," + number(e.total) + "," +
               number(e.subgraph) + "," + number(e.node) + "," +
               std::to_string(e.anchors) + "\n";
      }
      write_text(out / "pretrain_loss.csv", csv);
      write_text(out / "config.txt", format_config(config));
      std::printf("wrote %s\n", (out / "pretrained.ckpt").string().c_str());
    } else if (*finetune_cmd) {
      const Dataset dataset = load_dataset(data_path);
      const Model pretrained = load_checkpoint(checkpoint_path);
      const LabeledPool pool(dataset);
      const FinetuneConfig ft = config.finetune_config();
      for (const KShotSplit& split :
           make_kshot_splits(dataset, config.shots, config.seeds)) {
        std::vector<double> curve;
        const Model tuned =
            finetune(pretrained, pool.lookup(split.finetune_ids), ft, &curve);
        const std::string tag = "seed" + std::to_string(split.seed);
        save_checkpoint(tuned, out / ("finetuned_" + tag + ".ckpt"));
        std::string scores = "subgraph,node_id,label,raw,final\n";
        std::vector<const PreparedGraph*> eval = pool.lookup(split.eval_ids);
        for (const PreparedGraph* graph : eval) {
          const Prediction p = predict(*graph, tuned, ft.predict_options());
          for (int v = 0; v < graph->num_nodes(); ++v) {
            scores += graph->id + "," + std::to_string(graph->node_ids[v]) +
                      "," + std::to_string((*graph->labels)[v]) + "," +
                      number(p.raw(v)) + "," + number(p.final(v)) + "\n";
          }
        }
        write_text(out / ("scores_" + tag + ".csv"), scores);
        std::string loss = "epoch,loss\n";
        for (std::size_t e = 0; e < curve.size(); ++e) {
          loss += std::to_string(e) + "," + number(curve[e]) + "\n";
        }
        write_text(out / ("finetune_loss_" + tag + ".csv"), loss);
        if (!eval.empty()) {
          print_metrics(tag, evaluate(tuned, eval, ft.predict_options(),
                                      config.macro_average));
        }
      }
    } else if (*eval_cmd) {
      const Dataset dataset = load_dataset(data_path);
      const Model model = load_checkpoint(checkpoint_path);
      const LabeledPool pool(dataset);
      std::vector<std::string> ids;
      for (const Subgraph* sg : dataset.labeled()) ids.push_back(sg->id);
      const Metrics m =
          evaluate(model, pool.lookup(ids),
                   config.finetune_config().predict_options(),
                   config.macro_average);
      print_metrics("eval", m);
      EvalReport report;
      report.kind = "eval";
      report.config = format_config(config);
      report.entries.push_back(make_entry("checkpoint", 0, {{config.seed, m.auroc, m.auprc}}));
      save_report(report, out, "eval");
    } else {
      const Dataset dataset = load_dataset(data_path);
      EvalReport report;
      std::string stem;
      if (*kshot_cmd) {
        report = run_kshot_sweep(dataset, config, config.shot_grid, config.seeds);
        stem = "kshot";
        write_text(out / "kshot_curve.csv", curve_to_csv(report, "full"));
      } else if (*ablate_cmd) {
        report = run_ablations(dataset, config);
        stem = "ablation";
      } else if (*alpha_cmd) {
        report = run_alpha_sweep(dataset, config);
        stem = "sweep_alpha";
      } else {
        report = run_context_sweep(dataset, config);
        stem = "sweep_k_context";
      }
      save_report(report, out, stem);
      print_report(report);
    }
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 0;
}
